#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fincontext/agent.hpp"
#include "fincontext/date.hpp"
#include "fincontext/errors.hpp"
#include "fincontext/registry.hpp"
#include "fincontext/request_grammar.hpp"
#include "fincontext/text.hpp"

namespace fincontext {

enum class DatePhraseKind { month_year, year, quarter, from_to, previous_months, last_quarter, absent };

inline constexpr std::array<DatePhraseKind, 7> kAllDatePhraseKinds = {
    DatePhraseKind::month_year,      DatePhraseKind::year,         DatePhraseKind::quarter,
    DatePhraseKind::from_to,         DatePhraseKind::previous_months, DatePhraseKind::last_quarter,
    DatePhraseKind::absent};

// How a [company] slot is phrased: the company alone, the company plus its
// competitors ("adobe and its competitor's"), or the company plus the rest
// of its sector ("Halliburton co. and other companies in the energy sector").
enum class CompanyForm { plain, with_peers, with_sector };

struct CompanyBinding {
  std::string company;  // canonical
  CompanyForm form = CompanyForm::plain;

  friend bool operator==(const CompanyBinding&, const CompanyBinding&) = default;
};

struct SlotBindings {
  std::vector<CompanyBinding> companies;  // one per company placeholder, pattern order
  std::vector<std::string> metrics;       // canonical names for the [metrics] slot
  std::string date_phrase;                // surface text, empty when absent
  std::vector<int> numbers;
  std::optional<std::string> industry;
  std::uint64_t surface_seed = 0;

  friend bool operator==(const SlotBindings&, const SlotBindings&) = default;
};

struct SynthesisOptions {
  std::vector<DatePhraseKind> date_kinds{kAllDatePhraseKinds.begin(), kAllDatePhraseKinds.end()};
  int min_year = 2010;
  int max_year = 2024;
  std::vector<int> previous_month_counts{3, 6, 9, 12, 18, 24};
  int number_min = 3;
  int number_max = 10;
  // Relative weights of CompanyForm for single-company [company] slots.
  unsigned plain_weight = 3;
  unsigned peers_weight = 1;
  unsigned sector_weight = 1;
  int max_attempts_per_row = 64;
};

struct DatasetRow {
  std::string query;
  RequiredData required_data;
  std::string structured_request;
  std::string template_id;
  std::uint64_t seed = 0;
  Date reference_date;
};

namespace detail {

inline constexpr std::array<std::string_view, 12> kMonthAbbrev = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
inline constexpr std::array<std::string_view, 12> kMonthFull = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t row, std::uint64_t attempt) {
  return splitmix64(splitmix64(splitmix64(seed) ^ row) ^ (attempt * 0xD1B54A32D192ED03ULL));
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

inline int uniform_int(int lo, int hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool is_company_slot(std::string_view tok) {
  return tok == "[company]" || tok == "[company1]" || tok == "[company2]";
}

inline std::string sample_date_phrase(DatePhraseKind kind, const SynthesisOptions& o,
                                      std::mt19937_64& rng) {
  auto month = [&](int m) {
    return std::string(uniform_int(0, 3, rng) == 0 ? kMonthFull[m] : kMonthAbbrev[m]);
  };
  switch (kind) {
    case DatePhraseKind::month_year:
      return "in " + month(uniform_int(0, 11, rng)) + " " +
             std::to_string(uniform_int(o.min_year, o.max_year, rng));
    case DatePhraseKind::year:
      return "in " + std::to_string(uniform_int(o.min_year, o.max_year, rng));
    case DatePhraseKind::quarter:
      return "in Q" + std::to_string(uniform_int(1, 4, rng)) + " " +
             std::to_string(uniform_int(o.min_year, o.max_year, rng));
    case DatePhraseKind::from_to: {
      int a = uniform_int(o.min_year * 12, o.max_year * 12 + 11, rng);
      int b = uniform_int(o.min_year * 12, o.max_year * 12 + 11, rng);
      if (b < a) std::swap(a, b);
      return "from " + std::string(kMonthAbbrev[a % 12]) + " " + std::to_string(a / 12) + " to " +
             std::string(kMonthAbbrev[b % 12]) + " " + std::to_string(b / 12);
    }
    case DatePhraseKind::previous_months: {
      static constexpr std::array<std::string_view, 3> kLead = {"for the previous", "over the past",
                                                                "for the last"};
      return std::string(kLead[uniform_int(0, 2, rng)]) + " " +
             std::to_string(pick(o.previous_month_counts, rng)) + " months";
    }
    case DatePhraseKind::last_quarter:
      return "in the last quarter";
    default:
      return {};
  }
}

inline std::vector<std::string> surface_variants(const std::string& canonical,
                                                 const std::vector<std::string>& aliases,
                                                 bool lowercase_variant) {
  std::vector<std::string> out{canonical};
  if (lowercase_variant) out.push_back(text::lower(canonical));
  out.insert(out.end(), aliases.begin(), aliases.end());
  std::vector<std::string> unique;
  for (auto& s : out) {
    if (std::find(unique.begin(), unique.end(), s) == unique.end()) unique.push_back(s);
  }
  return unique;
}

}  // namespace detail

// Draws slot values for `tmpl`. Pure function of (template, registry, seed, options).
inline SlotBindings sample_bindings(const QueryTemplate& tmpl, const Registry& registry,
                                    std::uint64_t seed, const SynthesisOptions& options = {}) {
  std::mt19937_64 rng(seed);
  SlotBindings b;
  auto placeholders = tmpl.placeholders();

  std::size_t company_slots = 0;
  for (const auto& p : placeholders) company_slots += detail::is_company_slot(p.token);
  if (company_slots > registry.companies().size()) {
    throw SynthesisError("template '" + tmpl.template_id + "' needs " +
                         std::to_string(company_slots) + " companies, registry has " +
                         std::to_string(registry.companies().size()));
  }
  if (tmpl.count("[metrics]") > 1) {
    throw SynthesisError("template '" + tmpl.template_id + "' has more than one [metrics] slot");
  }
  if (tmpl.count("[industry]") > 1 || tmpl.count("[date]") > 1) {
    throw SynthesisError("template '" + tmpl.template_id + "' repeats [industry] or [date]");
  }

  std::vector<std::size_t> company_pool(registry.companies().size());
  for (std::size_t i = 0; i < company_pool.size(); ++i) company_pool[i] = i;
  std::shuffle(company_pool.begin(), company_pool.end(), rng);
  std::size_t next_company = 0;

  for (const auto& p : placeholders) {
    if (detail::is_company_slot(p.token)) {
      const auto& c = registry.companies()[company_pool[next_company++]];
      CompanyBinding cb{c.canonical_name, CompanyForm::plain};
      if (p.token == "[company]") {
        unsigned peers = c.peers.empty() ? 0u : options.peers_weight;
        unsigned total = options.plain_weight + peers + options.sector_weight;
        if (total > 0) {
          auto r = std::uniform_int_distribution<unsigned>(0, total - 1)(rng);
          if (r >= options.plain_weight + peers) {
            cb.form = CompanyForm::with_sector;
          } else if (r >= options.plain_weight) {
            cb.form = CompanyForm::with_peers;
          }
        }
      }
      b.companies.push_back(std::move(cb));
    } else if (p.token == "[metrics]") {
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < registry.metrics().size(); ++i) {
        if (registry.metrics()[i].satisfies(tmpl.metric_constraint)) eligible.push_back(i);
      }
      if (eligible.empty()) {
        throw SynthesisError("unsatisfiable metric constraint: template '" + tmpl.template_id +
                             "' requires " + std::string(to_string(tmpl.metric_constraint)) +
                             " metrics but the registry has none");
      }
      int count = detail::uniform_int(1, tmpl.max_metrics, rng);
      count = std::min<int>(count, static_cast<int>(eligible.size()));
      std::shuffle(eligible.begin(), eligible.end(), rng);
      for (int k = 0; k < count; ++k) {
        b.metrics.push_back(registry.metrics()[eligible[static_cast<std::size_t>(k)]].canonical_name);
      }
    } else if (p.token == "[date]") {
      if (options.date_kinds.empty()) throw SynthesisError("no date phrase kinds enabled");
      b.date_phrase = detail::sample_date_phrase(detail::pick(options.date_kinds, rng), options, rng);
    } else if (p.token == "[number]") {
      b.numbers.push_back(detail::uniform_int(options.number_min, options.number_max, rng));
    } else if (p.token == "[industry]") {
      if (registry.sectors().empty()) throw SynthesisError("registry defines no sectors");
      b.industry = detail::pick(registry.sectors(), rng);
    }
  }
  b.surface_seed = rng();
  return b;
}

// Replaces every placeholder with a surface form. Alias choice is seeded by
// bindings.surface_seed. The result is a single line.
inline std::string expand_template(const QueryTemplate& tmpl, const SlotBindings& b,
                                   const Registry& registry) {
  auto placeholders = tmpl.placeholders();
  std::size_t company_slots = 0, number_slots = 0, metric_slots = 0, industry_slots = 0,
              date_slots = 0;
  for (const auto& p : placeholders) {
    company_slots += detail::is_company_slot(p.token);
    number_slots += p.token == "[number]";
    metric_slots += p.token == "[metrics]";
    industry_slots += p.token == "[industry]";
    date_slots += p.token == "[date]";
  }
  auto mismatch = [&](const std::string& what) {
    return ArityError("template '" + tmpl.template_id + "': " + what);
  };
  if (company_slots != b.companies.size()) throw mismatch("company bindings do not match slots");
  if (number_slots != b.numbers.size()) throw mismatch("number bindings do not match slots");
  if (metric_slots == 1 && b.metrics.empty()) throw mismatch("[metrics] slot bound to zero metrics");
  if (metric_slots == 0 && !b.metrics.empty()) throw mismatch("metrics bound without a [metrics] slot");
  if ((industry_slots == 1) != b.industry.has_value()) throw mismatch("industry binding mismatch");
  if (date_slots == 0 && !b.date_phrase.empty()) throw mismatch("date bound without a [date] slot");

  std::mt19937_64 rng(b.surface_seed);
  std::string out;
  std::size_t from = 0, next_company = 0, next_number = 0;
  for (const auto& p : placeholders) {
    out.append(tmpl.pattern, from, p.pos - from);
    std::size_t after = p.pos + p.token.size();
    bool possessive = tmpl.pattern.compare(after, 2, "'s") == 0;
    if (detail::is_company_slot(p.token)) {
      const auto& cb = b.companies[next_company++];
      const auto& spec = registry.resolve_company(cb.company);
      out += detail::pick(detail::surface_variants(spec.canonical_name, spec.aliases, false), rng);
      if (cb.form == CompanyForm::with_peers) {
        if (possessive) {
          out += " and its competitor";
        } else {
          out += detail::uniform_int(0, 1, rng) ? " and its competitors" : " and its peers";
        }
      } else if (cb.form == CompanyForm::with_sector) {
        out += " and other companies in the " + text::lower(spec.sector) + " sector";
      }
    } else if (p.token == "[metrics]") {
      std::vector<std::string> surfaces;
      for (const auto& name : b.metrics) {
        const auto& m = registry.resolve_metric(name);
        surfaces.push_back(detail::pick(detail::surface_variants(m.canonical_name, m.aliases, true), rng));
      }
      bool use_and = surfaces.size() > 1 && detail::uniform_int(0, 2, rng) > 0;
      for (std::size_t k = 0; k < surfaces.size(); ++k) {
        if (k > 0) out += (use_and && k + 1 == surfaces.size()) ? " and " : ", ";
        out += surfaces[k];
      }
    } else if (p.token == "[date]") {
      if (!b.date_phrase.empty()) {
        if (!out.empty() && out.back() != ' ') out.push_back(' ');
        out += b.date_phrase;
      }
    } else if (p.token == "[number]") {
      out += std::to_string(b.numbers[next_number++]);
    } else if (p.token == "[industry]") {
      out += (detail::uniform_int(0, 1, rng) ? text::lower(*b.industry) : *b.industry) + " sector";
    }
    from = after;
  }
  out.append(tmpl.pattern, from, std::string::npos);

  out = text::collapse_whitespace(out);
  for (std::string_view punct : {" ,", " .", " ?", " !"}) {
    std::size_t pos;
    while ((pos = out.find(punct)) != std::string::npos) out.erase(pos, 1);
  }
  // An abbreviation's period doubles as the sentence period.
  for (std::size_t pos; (pos = out.find("..")) != std::string::npos;) out.erase(pos, 1);
  return out;
}

// Required Data for a binding: entities in slot order (deduplicated), each
// metric with its registry-related metrics, and the date phrase core.
inline RequiredData required_data_for(const QueryTemplate& tmpl, const SlotBindings& b,
                                      const Registry& registry) {
  RequiredData rd;
  std::size_t next_company = 0;
  for (const auto& p : tmpl.placeholders()) {
    if (detail::is_company_slot(p.token)) {
      const auto& cb = b.companies[next_company++];
      const auto& spec = registry.resolve_company(cb.company);
      detail::push_unique(rd.companies, EntitySelector::company(spec.canonical_name));
      if (cb.form == CompanyForm::with_peers) {
        detail::push_unique(rd.companies, EntitySelector::peers_of(spec.canonical_name));
      } else if (cb.form == CompanyForm::with_sector) {
        detail::push_unique(rd.companies, EntitySelector::sector(spec.sector));
      }
    } else if (p.token == "[industry]") {
      detail::push_unique(rd.companies, EntitySelector::sector(*b.industry));
    }
  }
  if (rd.companies.empty()) rd.companies.push_back(EntitySelector::sector(std::string(kAllSectors)));
  for (const auto& name : b.metrics) {
    const auto& m = registry.resolve_metric(name);
    rd.metrics.push_back({m.canonical_name, m.related_metrics});
  }
  if (auto d = find_date_phrase(b.date_phrase)) rd.date_phrase = d->text;
  return rd;
}

inline DatasetRow synthesize_row(const QueryTemplate& tmpl, const Registry& registry,
                                 std::uint64_t seed, Date reference_date,
                                 const SynthesisOptions& options = {}) {
  auto b = sample_bindings(tmpl, registry, seed, options);
  DatasetRow row;
  row.query = expand_template(tmpl, b, registry);
  row.required_data = required_data_for(tmpl, b, registry);
  row.structured_request = serialize_request(build_request(row.required_data, reference_date));
  row.template_id = tmpl.template_id;
  row.seed = seed;
  row.reference_date = reference_date;
  return row;
}

// Produces exactly n rows with pairwise-distinct queries (compared after
// whitespace normalization). Row i draws from seeds derived from (seed, i,
// attempt); a collision triggers a resample, up to max_attempts_per_row.
inline std::vector<DatasetRow> synthesize_dataset(const std::vector<QueryTemplate>& templates,
                                                  const Registry& registry, std::size_t n,
                                                  std::uint64_t seed, Date reference_date,
                                                  const SynthesisOptions& options = {}) {
  if (n == 0) throw SynthesisError("n must be at least 1");
  if (templates.empty()) throw SynthesisError("no templates given");
  for (const auto& t : templates) registry.check_template(t);

  std::vector<DatasetRow> rows;
  rows.reserve(n);
  std::unordered_set<std::string> seen;
  seen.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < options.max_attempts_per_row; ++attempt) {
      std::uint64_t row_seed = detail::derive_seed(seed, i, static_cast<std::uint64_t>(attempt));
      const auto& tmpl = templates[detail::splitmix64(row_seed) % templates.size()];
      auto row = synthesize_row(tmpl, registry, row_seed, reference_date, options);
      if (!seen.insert(text::collapse_whitespace(row.query)).second) continue;
      rows.push_back(std::move(row));
      placed = true;
      break;
    }
    if (!placed) {
      throw SynthesisError("could not produce " + std::to_string(n) +
                           " distinct queries: expansion space exhausted after " +
                           std::to_string(i) + " rows");
    }
  }
  return rows;
}

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Checks a row against the grammar, the registry and the date resolver.
// Violations are reported, never thrown.
inline ValidationReport validate_row(const DatasetRow& row, const Registry& registry) {
  ValidationReport rep;
  auto add = [&](std::string v) { rep.violations.push_back(std::move(v)); };

  if (row.query.find('[') != std::string::npos) {
    for (auto ph : kPlaceholders) {
      if (row.query.find(ph) != std::string::npos) add("residual placeholder " + std::string(ph));
    }
  }

  std::optional<StructuredDataRequest> req;
  try {
    req = parse_request(row.structured_request);
  } catch (const GrammarError& e) {
    std::string msg = e.what();
    add(msg.substr(0, msg.find(" (group:")));
  }

  const auto& rd = row.required_data;
  for (const auto& e : rd.companies) {
    bool ok = false;
    switch (e.kind) {
      case EntityKind::sector: ok = registry.find_sector(e.name).has_value(); break;
      default: {
        const auto* c = registry.find_company(e.name);
        ok = c && c->canonical_name == e.name;
      }
    }
    if (!ok) add("unresolved entity '" + to_string(e) + "'");
  }
  if (rd.metrics.empty()) add("required data lists no metrics");
  std::vector<std::string> flat;
  for (const auto& m : rd.metrics) {
    const auto* spec = registry.find_metric(m.primary);
    if (!spec || spec->canonical_name != m.primary) {
      add("unresolved metric '" + m.primary + "'");
    } else if (m.related != spec->related_metrics) {
      auto a = m.related, b = spec->related_metrics;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      add(a == b ? "related-metric order mismatch for '" + m.primary + "'"
                 : "related-metric mismatch for '" + m.primary + "'");
    }
    flat.push_back(m.primary);
    flat.insert(flat.end(), m.related.begin(), m.related.end());
  }

  if (req) {
    if (req->entities != rd.companies) add("entity group does not match required data");
    for (const auto& name : req->metrics) {
      if (!registry.find_metric(name)) add("unresolved metric '" + name + "' in request");
    }
    if (req->metrics != flat) {
      auto a = req->metrics, b = flat;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      add(a == b ? "related-metric order mismatch in metric group"
                 : "metric group does not match required data");
    }
    try {
      auto expected = resolve_date_phrase(rd.date_phrase, row.reference_date);
      if (req->ranges.size() != 1 || req->ranges.front() != expected) {
        add("date range does not match resolution of '" + rd.date_phrase + "'");
      }
    } catch (const DatePhraseError&) {
      add("unresolvable date phrase '" + rd.date_phrase + "'");
    }
  }
  return rep;
}

}  // namespace fincontext
