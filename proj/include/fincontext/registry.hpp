#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fincontext/errors.hpp"
#include "fincontext/request_grammar.hpp"
#include "fincontext/text.hpp"

namespace fincontext {

enum class Frequency { daily, quarterly, annual, static_ };

inline std::string_view to_string(Frequency f) {
  switch (f) {
    case Frequency::daily: return "daily";
    case Frequency::quarterly: return "quarterly";
    case Frequency::annual: return "annual";
    default: return "static";
  }
}

// Capitalized form used in rendered table headers.
inline std::string_view display_name(Frequency f) {
  switch (f) {
    case Frequency::daily: return "Daily";
    case Frequency::quarterly: return "Quarterly";
    case Frequency::annual: return "Annual";
    default: return "Static";
  }
}

inline std::optional<Frequency> parse_frequency(std::string_view s) {
  std::string l = text::lower(s);
  if (l == "daily") return Frequency::daily;
  if (l == "quarterly") return Frequency::quarterly;
  if (l == "annual") return Frequency::annual;
  if (l == "static") return Frequency::static_;
  return std::nullopt;
}

enum class MetricConstraint { any, trackable_only, descriptive_only };

inline std::string_view to_string(MetricConstraint c) {
  switch (c) {
    case MetricConstraint::trackable_only: return "trackable_only";
    case MetricConstraint::descriptive_only: return "descriptive_only";
    default: return "any";
  }
}

struct MetricSpec {
  std::string canonical_name;
  std::vector<std::string> aliases;
  std::vector<std::string> related_metrics;  // canonical names, authored order
  Frequency frequency = Frequency::quarterly;
  std::string unit;
  bool trackable = true;

  bool satisfies(MetricConstraint c) const {
    switch (c) {
      case MetricConstraint::trackable_only: return trackable;
      case MetricConstraint::descriptive_only: return !trackable;
      default: return true;
    }
  }
};

struct CompanySpec {
  std::string canonical_name;
  std::vector<std::string> aliases;
  std::string sector;
  std::vector<std::string> peers;
};

inline constexpr std::array<std::string_view, 7> kPlaceholders = {
    "[company]", "[company1]", "[company2]", "[metrics]", "[date]", "[industry]", "[number]"};

struct Placeholder {
  std::string_view token;  // one of kPlaceholders
  std::size_t pos = 0;
};

struct QueryTemplate {
  std::string template_id;
  std::string pattern;
  MetricConstraint metric_constraint = MetricConstraint::any;
  int max_metrics = 3;

  // Placeholders in pattern order. Throws RegistryError on a bracketed
  // token outside the allowed set.
  std::vector<Placeholder> placeholders() const {
    std::vector<Placeholder> out;
    std::size_t i = 0;
    while ((i = pattern.find('[', i)) != std::string::npos) {
      auto close = pattern.find(']', i);
      if (close == std::string::npos) {
        throw RegistryError("template '" + template_id + "': unterminated placeholder");
      }
      std::string_view tok(pattern.data() + i, close - i + 1);
      auto it = std::find(kPlaceholders.begin(), kPlaceholders.end(), tok);
      if (it == kPlaceholders.end()) {
        throw RegistryError("template '" + template_id + "': unknown placeholder " +
                            std::string(tok));
      }
      out.push_back({*it, i});
      i = close + 1;
    }
    return out;
  }

  std::size_t count(std::string_view token) const {
    auto ph = placeholders();
    return static_cast<std::size_t>(
        std::count_if(ph.begin(), ph.end(), [&](const Placeholder& p) { return p.token == token; }));
  }
};

// What a normalized surface phrase refers to in the gazetteer.
enum class PhraseKind { metric, company, sector };

struct PhraseEntry {
  PhraseKind kind;
  std::size_t index;  // into metrics(), companies() or sectors()
};

// Canonical vocabularies: metrics, companies, sectors and query templates.
// Immutable once built; share it as std::shared_ptr<const Registry>.
class Registry {
 public:
  static Registry build(std::vector<MetricSpec> metrics, std::vector<CompanySpec> companies,
                        std::vector<QueryTemplate> templates = {}) {
    Registry r;
    r.metrics_ = std::move(metrics);
    r.companies_ = std::move(companies);
    r.templates_ = std::move(templates);
    r.index_and_validate({});
    return r;
  }

  static Registry parse(std::string_view yaml_text);
  static Registry load(const std::filesystem::path& path);

  // Template-only documents ("templates:" section) for the synthesizer.
  static std::vector<QueryTemplate> parse_templates(std::string_view yaml_text);
  static std::vector<QueryTemplate> load_templates(const std::filesystem::path& path);

  const std::vector<MetricSpec>& metrics() const { return metrics_; }
  const std::vector<CompanySpec>& companies() const { return companies_; }
  const std::vector<QueryTemplate>& templates() const { return templates_; }
  const std::vector<std::string>& sectors() const { return sectors_; }

  const MetricSpec* find_metric(std::string_view surface) const noexcept {
    auto it = metric_index_.find(text::normalize(surface));
    return it == metric_index_.end() ? nullptr : &metrics_[it->second];
  }

  const MetricSpec& resolve_metric(std::string_view surface) const {
    if (const auto* m = find_metric(surface)) return *m;
    throw UnknownMetricError(std::string(surface));
  }

  const CompanySpec* find_company(std::string_view surface) const noexcept {
    auto it = company_index_.find(text::normalize(surface));
    return it == company_index_.end() ? nullptr : &companies_[it->second];
  }

  const CompanySpec& resolve_company(std::string_view surface) const {
    if (const auto* c = find_company(surface)) return *c;
    throw UnknownEntityError(std::string(surface));
  }

  // Canonical sector name for a surface form ("energy" -> "Energy").
  std::optional<std::string> find_sector(std::string_view surface) const {
    auto key = text::normalize(surface);
    if (key == text::lower(kAllSectors)) return std::string(kAllSectors);
    auto it = sector_index_.find(key);
    if (it == sector_index_.end()) return std::nullopt;
    return sectors_[it->second];
  }

  // Company(X), PeersOf(X) for "X peers" / "X and its competitors",
  // Sector(S) for "S sector" / "other companies in the S sector".
  EntitySelector resolve_entity(std::string_view surface) const;

  std::vector<std::reference_wrapper<const MetricSpec>> related_metrics(
      std::string_view canonical) const {
    const auto& m = resolve_metric(canonical);
    std::vector<std::reference_wrapper<const MetricSpec>> out;
    for (const auto& r : m.related_metrics) out.emplace_back(resolve_metric(r));
    return out;
  }

  std::vector<std::string> companies_in_sector(std::string_view sector) const {
    std::vector<std::string> out;
    for (const auto& c : companies_) {
      if (sector == kAllSectors || c.sector == sector) out.push_back(c.canonical_name);
    }
    return out;
  }

  // Gazetteer over normalized phrases (space-joined lowercase tokens).
  std::optional<PhraseEntry> lookup_phrase(std::string_view normalized) const {
    auto it = phrases_.find(std::string(normalized));
    if (it == phrases_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t max_phrase_tokens() const { return max_phrase_tokens_; }

  // Rejects templates whose literal text contains a gazetteer phrase, since
  // the rule-based agent would read it as an entity or metric mention.
  void check_template(const QueryTemplate& t) const;

 private:
  struct Locations {
    std::vector<std::size_t> metric_lines, company_lines, template_lines;
  };

  void index_and_validate(const Locations& loc);

  std::vector<MetricSpec> metrics_;
  std::vector<CompanySpec> companies_;
  std::vector<QueryTemplate> templates_;
  std::vector<std::string> sectors_;
  std::unordered_map<std::string, std::size_t> metric_index_;
  std::unordered_map<std::string, std::size_t> company_index_;
  std::unordered_map<std::string, std::size_t> sector_index_;
  std::unordered_map<std::string, PhraseEntry> phrases_;
  std::size_t max_phrase_tokens_ = 0;
};

namespace detail {

inline bool has_forbidden_chars(std::string_view name) {
  return name.find_first_of(";\n\r") != std::string_view::npos;
}

inline bool balanced(std::string_view s) {
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')' && --depth < 0) return false;
  }
  return depth == 0;
}

inline std::size_t token_count(std::string_view normalized) {
  if (normalized.empty()) return 0;
  return static_cast<std::size_t>(std::count(normalized.begin(), normalized.end(), ' ')) + 1;
}

}  // namespace detail

inline void Registry::index_and_validate(const Locations& loc) {
  auto line = [](const std::vector<std::size_t>& lines, std::size_t i) -> std::size_t {
    return i < lines.size() ? lines[i] : 0;
  };
  if (metrics_.empty()) throw RegistryError("registry must define at least one metric");

  auto check_name = [&](const std::string& name, const char* what, std::size_t ln) {
    if (text::trim(name).empty()) throw RegistryError(std::string(what) + " name is empty", ln);
    if (detail::has_forbidden_chars(name)) {
      throw RegistryError(std::string(what) + " '" + name + "' contains ';' or a line break", ln);
    }
    if (!detail::balanced(name)) {
      throw RegistryError(std::string(what) + " '" + name + "' has unbalanced parentheses", ln);
    }
    if (text::normalize(name).empty()) {
      throw RegistryError(std::string(what) + " '" + name + "' has no alphanumeric content", ln);
    }
  };

  // phrase -> owner description, for collision messages
  std::unordered_map<std::string, std::string> owner;
  auto add_phrase = [&](const std::string& surface, PhraseEntry entry, const std::string& who,
                        std::size_t ln) {
    auto key = text::normalize(surface);
    auto [it, inserted] = phrases_.emplace(key, entry);
    if (!inserted) {
      if (it->second.kind == entry.kind && it->second.index == entry.index) return;
      throw RegistryError("duplicate alias '" + surface + "': used by " + owner[key] + " and " +
                              who,
                          ln);
    }
    owner[key] = who;
    max_phrase_tokens_ = std::max(max_phrase_tokens_, detail::token_count(key));
  };

  for (std::size_t i = 0; i < metrics_.size(); ++i) {
    const auto& m = metrics_[i];
    std::size_t ln = line(loc.metric_lines, i);
    check_name(m.canonical_name, "metric", ln);
    if (metric_index_.count(text::normalize(m.canonical_name)) &&
        metrics_[metric_index_[text::normalize(m.canonical_name)]].canonical_name ==
            m.canonical_name) {
      throw RegistryError("duplicate metric '" + m.canonical_name + "'", ln);
    }
    std::string who = "metric '" + m.canonical_name + "'";
    add_phrase(m.canonical_name, {PhraseKind::metric, i}, who, ln);
    metric_index_[text::normalize(m.canonical_name)] = i;
    for (const auto& a : m.aliases) {
      check_name(a, "alias", ln);
      add_phrase(a, {PhraseKind::metric, i}, who, ln);
      metric_index_[text::normalize(a)] = i;
    }
  }
  // Closure: related metrics resolve, and are stored by canonical name.
  for (std::size_t i = 0; i < metrics_.size(); ++i) {
    auto& m = metrics_[i];
    for (auto& r : m.related_metrics) {
      auto it = metric_index_.find(text::normalize(r));
      if (it == metric_index_.end()) {
        throw RegistryError("closure violation: metric '" + m.canonical_name +
                                "' lists related metric '" + r + "' which is not defined",
                            line(loc.metric_lines, i));
      }
      if (it->second == i) {
        throw RegistryError("metric '" + m.canonical_name + "' lists itself as related",
                            line(loc.metric_lines, i));
      }
      r = metrics_[it->second].canonical_name;
    }
  }

  for (std::size_t i = 0; i < companies_.size(); ++i) {
    const auto& c = companies_[i];
    std::size_t ln = line(loc.company_lines, i);
    check_name(c.canonical_name, "company", ln);
    if (text::ends_with(c.canonical_name, kPeersSuffix) ||
        text::ends_with(c.canonical_name, kSectorSuffix)) {
      throw RegistryError("company '" + c.canonical_name +
                              "' ends with a reserved selector suffix",
                          ln);
    }
    if (text::trim(c.sector).empty()) {
      throw RegistryError("company '" + c.canonical_name + "' has no sector", ln);
    }
    check_name(c.sector, "sector", ln);
    if (text::normalize(c.sector) == text::lower(kAllSectors)) {
      throw RegistryError("sector name 'All' is reserved", ln);
    }
    std::string who = "company '" + c.canonical_name + "'";
    add_phrase(c.canonical_name, {PhraseKind::company, i}, who, ln);
    company_index_[text::normalize(c.canonical_name)] = i;
    for (const auto& a : c.aliases) {
      check_name(a, "alias", ln);
      add_phrase(a, {PhraseKind::company, i}, who, ln);
      company_index_[text::normalize(a)] = i;
    }
    auto skey = text::normalize(c.sector);
    if (!sector_index_.count(skey)) {
      sector_index_[skey] = sectors_.size();
      sectors_.push_back(c.sector);
    } else if (sectors_[sector_index_[skey]] != c.sector) {
      throw RegistryError("sector '" + c.sector + "' spelled inconsistently (also '" +
                              sectors_[sector_index_[skey]] + "')",
                          ln);
    }
  }
  for (std::size_t s = 0; s < sectors_.size(); ++s) {
    std::string who = "sector '" + sectors_[s] + "'";
    add_phrase(sectors_[s] + " sector", {PhraseKind::sector, s}, who, 0);
    add_phrase(sectors_[s] + " companies", {PhraseKind::sector, s}, who, 0);
  }
  for (std::size_t i = 0; i < companies_.size(); ++i) {
    auto& c = companies_[i];
    for (auto& p : c.peers) {
      auto it = company_index_.find(text::normalize(p));
      if (it == company_index_.end()) {
        throw RegistryError("closure violation: company '" + c.canonical_name +
                                "' lists peer '" + p + "' which is not defined",
                            line(loc.company_lines, i));
      }
      if (it->second == i) {
        throw RegistryError("company '" + c.canonical_name + "' lists itself as a peer",
                            line(loc.company_lines, i));
      }
      p = companies_[it->second].canonical_name;
    }
  }

  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    const auto& t = templates_[i];
    std::size_t ln = line(loc.template_lines, i);
    if (!ids.insert(t.template_id).second) {
      throw RegistryError("duplicate template id '" + t.template_id + "'", ln);
    }
    try {
      check_template(t);
    } catch (const RegistryError& e) {
      throw RegistryError(e.what(), ln);
    }
  }
}

inline void Registry::check_template(const QueryTemplate& t) const {
  if (t.template_id.empty()) throw RegistryError("template id is empty");
  if (t.max_metrics < 1) {
    throw RegistryError("template '" + t.template_id + "': max_metrics must be positive");
  }
  auto ph = t.placeholders();
  if (ph.empty()) {
    throw RegistryError("template '" + t.template_id + "' contains no placeholder");
  }
  // Literal segments between placeholders.
  std::size_t from = 0;
  auto check_segment = [&](std::string_view seg) {
    auto toks = text::tokenize(seg);
    for (std::size_t b = 0; b < toks.size(); ++b) {
      std::string phrase;
      for (std::size_t e = b; e < toks.size() && e - b < max_phrase_tokens_; ++e) {
        if (e > b) phrase.push_back(' ');
        phrase += toks[e].norm;
        if (phrases_.count(phrase)) {
          throw RegistryError("template '" + t.template_id +
                              "': literal text contains registry phrase '" + phrase + "'");
        }
      }
    }
  };
  for (const auto& p : ph) {
    check_segment(std::string_view(t.pattern).substr(from, p.pos - from));
    from = p.pos + p.token.size();
  }
  check_segment(std::string_view(t.pattern).substr(from));
}

inline EntitySelector Registry::resolve_entity(std::string_view surface) const {
  auto toks = text::tokenize(surface);
  std::vector<std::string> words;
  for (auto& t : toks) words.push_back(t.norm);
  auto joined = [&](std::size_t b, std::size_t e) {
    std::string s;
    for (std::size_t i = b; i < e; ++i) {
      if (i > b) s.push_back(' ');
      s += words[i];
    }
    return s;
  };
  if (words.empty()) throw UnknownEntityError(std::string(surface));

  if (const auto* c = find_company(surface)) return EntitySelector::company(c->canonical_name);

  // "<company> peers", "<company>'s competitors", "<company> and its rivals"
  static const std::unordered_set<std::string> kPeerWords = {"peers", "peer", "competitors",
                                                             "competitor", "rivals", "rival"};
  if (words.size() >= 2 && kPeerWords.count(words.back())) {
    std::size_t end = words.size() - 1;
    if (end >= 2 && words[end - 1] == "its" && words[end - 2] == "and") end -= 2;
    if (auto it = company_index_.find(joined(0, end)); it != company_index_.end()) {
      return EntitySelector::peers_of(companies_[it->second].canonical_name);
    }
  }

  // "[other companies in] [the] <sector> sector|companies", "all companies"
  std::size_t b = 0;
  std::size_t e = words.size();
  if (e - b >= 3 && words[0] == "other" && words[1] == "companies" && words[2] == "in") b = 3;
  if (e - b >= 1 && words[b] == "the") ++b;
  if (e - b >= 2 && (words[e - 1] == "sector" || words[e - 1] == "companies")) {
    if (auto s = find_sector(joined(b, e - 1))) return EntitySelector::sector(*s);
  }
  if (auto s = find_sector(joined(b, e))) return EntitySelector::sector(*s);
  throw UnknownEntityError(std::string(surface));
}

namespace detail {

inline std::size_t yaml_line(const YAML::Node& n) {
  auto m = n.Mark();
  return m.line >= 0 ? static_cast<std::size_t>(m.line) + 1 : 0;
}

inline void check_fields(const YAML::Node& rec, std::initializer_list<std::string_view> allowed,
                         const std::string& what) {
  if (!rec.IsMap()) throw RegistryError(what + " must be a mapping", yaml_line(rec));
  for (auto it = rec.begin(); it != rec.end(); ++it) {
    auto key = it->first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw RegistryError(what + ": unknown field '" + key + "'", yaml_line(it->first));
    }
  }
}

inline std::string scalar_field(const YAML::Node& rec, const char* field, const std::string& what,
                                bool required = true, std::string fallback = {}) {
  auto n = rec[field];
  if (!n) {
    if (required) throw RegistryError(what + ": missing field '" + field + "'", yaml_line(rec));
    return fallback;
  }
  if (!n.IsScalar()) {
    throw RegistryError(what + ": field '" + field + "' must be a scalar", yaml_line(n));
  }
  return n.as<std::string>();
}

inline std::vector<std::string> list_field(const YAML::Node& rec, const char* field,
                                           const std::string& what) {
  std::vector<std::string> out;
  auto n = rec[field];
  if (!n || n.IsNull()) return out;
  if (!n.IsSequence()) {
    throw RegistryError(what + ": field '" + field + "' must be a list", yaml_line(n));
  }
  for (const auto& item : n) {
    if (!item.IsScalar()) {
      throw RegistryError(what + ": entries of '" + field + "' must be scalars", yaml_line(item));
    }
    out.push_back(item.as<std::string>());
  }
  return out;
}

inline bool bool_field(const YAML::Node& rec, const char* field, const std::string& what,
                       bool fallback) {
  if (!rec[field]) return fallback;
  auto s = text::lower(scalar_field(rec, field, what));
  if (s == "true" || s == "yes") return true;
  if (s == "false" || s == "no") return false;
  throw RegistryError(what + ": field '" + std::string(field) + "' must be true or false",
                      yaml_line(rec[field]));
}

inline QueryTemplate parse_template(const YAML::Node& rec) {
  check_fields(rec, {"id", "pattern", "metrics", "max_metrics"}, "template");
  QueryTemplate t;
  t.template_id = scalar_field(rec, "id", "template");
  std::string what = "template '" + t.template_id + "'";
  t.pattern = scalar_field(rec, "pattern", what);
  auto c = scalar_field(rec, "metrics", what, false, "any");
  if (c == "any") {
    t.metric_constraint = MetricConstraint::any;
  } else if (c == "trackable_only") {
    t.metric_constraint = MetricConstraint::trackable_only;
  } else if (c == "descriptive_only") {
    t.metric_constraint = MetricConstraint::descriptive_only;
  } else {
    throw RegistryError(what + ": metrics must be any, trackable_only or descriptive_only",
                        yaml_line(rec["metrics"]));
  }
  auto mm = scalar_field(rec, "max_metrics", what, false, "3");
  try {
    t.max_metrics = std::stoi(mm);
  } catch (const std::exception&) {
    throw RegistryError(what + ": max_metrics must be an integer", yaml_line(rec));
  }
  if (t.max_metrics < 1) {
    throw RegistryError(what + ": max_metrics must be positive", yaml_line(rec));
  }
  // Validates placeholder tokens.
  try {
    if (t.placeholders().empty()) {
      throw RegistryError(what + " contains no placeholder");
    }
  } catch (const RegistryError& e) {
    throw RegistryError(e.what(), yaml_line(rec));
  }
  return t;
}

inline YAML::Node load_yaml(std::string_view text) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw RegistryError("parse error: " + e.msg, static_cast<std::size_t>(e.mark.line) + 1);
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RegistryError("cannot open registry file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline Registry Registry::parse(std::string_view yaml_text) {
  auto root = detail::load_yaml(yaml_text);
  if (!root || root.IsNull()) throw RegistryError("registry must define at least one metric");
  detail::check_fields(root, {"metrics", "companies", "templates"}, "registry");

  Registry r;
  Locations loc;
  auto metrics = root["metrics"];
  if (metrics && !metrics.IsNull()) {
    if (!metrics.IsSequence()) {
      throw RegistryError("'metrics' must be a list", detail::yaml_line(metrics));
    }
    for (const auto& rec : metrics) {
      detail::check_fields(rec, {"name", "aliases", "related", "frequency", "unit", "trackable"},
                           "metric");
      MetricSpec m;
      m.canonical_name = detail::scalar_field(rec, "name", "metric");
      std::string what = "metric '" + m.canonical_name + "'";
      m.aliases = detail::list_field(rec, "aliases", what);
      m.related_metrics = detail::list_field(rec, "related", what);
      auto f = detail::scalar_field(rec, "frequency", what);
      auto freq = parse_frequency(f);
      if (!freq) {
        throw RegistryError(what + ": unknown frequency '" + f + "'",
                            detail::yaml_line(rec["frequency"]));
      }
      m.frequency = *freq;
      m.unit = detail::scalar_field(rec, "unit", what);
      m.trackable = detail::bool_field(rec, "trackable", what, true);
      r.metrics_.push_back(std::move(m));
      loc.metric_lines.push_back(detail::yaml_line(rec));
    }
  }
  auto companies = root["companies"];
  if (companies && !companies.IsNull()) {
    if (!companies.IsSequence()) {
      throw RegistryError("'companies' must be a list", detail::yaml_line(companies));
    }
    for (const auto& rec : companies) {
      detail::check_fields(rec, {"name", "aliases", "sector", "peers"}, "company");
      CompanySpec c;
      c.canonical_name = detail::scalar_field(rec, "name", "company");
      std::string what = "company '" + c.canonical_name + "'";
      c.aliases = detail::list_field(rec, "aliases", what);
      c.sector = detail::scalar_field(rec, "sector", what);
      c.peers = detail::list_field(rec, "peers", what);
      r.companies_.push_back(std::move(c));
      loc.company_lines.push_back(detail::yaml_line(rec));
    }
  }
  auto templates = root["templates"];
  if (templates && !templates.IsNull()) {
    if (!templates.IsSequence()) {
      throw RegistryError("'templates' must be a list", detail::yaml_line(templates));
    }
    for (const auto& rec : templates) {
      r.templates_.push_back(detail::parse_template(rec));
      loc.template_lines.push_back(detail::yaml_line(rec));
    }
  }
  r.index_and_validate(loc);
  return r;
}

inline Registry Registry::load(const std::filesystem::path& path) {
  try {
    return parse(detail::read_file(path));
  } catch (const RegistryError& e) {
    throw RegistryError(path.string() + ": " + e.what());
  }
}

inline std::vector<QueryTemplate> Registry::parse_templates(std::string_view yaml_text) {
  auto root = detail::load_yaml(yaml_text);
  if (!root || root.IsNull()) return {};
  detail::check_fields(root, {"templates"}, "template file");
  std::vector<QueryTemplate> out;
  std::unordered_set<std::string> ids;
  auto templates = root["templates"];
  if (!templates || templates.IsNull()) return out;
  if (!templates.IsSequence()) {
    throw RegistryError("'templates' must be a list", detail::yaml_line(templates));
  }
  for (const auto& rec : templates) {
    auto t = detail::parse_template(rec);
    if (!ids.insert(t.template_id).second) {
      throw RegistryError("duplicate template id '" + t.template_id + "'", detail::yaml_line(rec));
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<QueryTemplate> Registry::load_templates(const std::filesystem::path& path) {
  try {
    return parse_templates(detail::read_file(path));
  } catch (const RegistryError& e) {
    throw RegistryError(path.string() + ": " + e.what());
  }
}

}  // namespace fincontext
