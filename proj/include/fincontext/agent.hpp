#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fincontext/date.hpp"
#include "fincontext/errors.hpp"
#include "fincontext/registry.hpp"
#include "fincontext/request_grammar.hpp"
#include "fincontext/text.hpp"

namespace fincontext {

enum class AgentMode { rule_based, external };

struct AgentConfig {
  Date reference_date = Date::ymd(2024, 7, 7);
  AgentMode mode = AgentMode::rule_based;
  std::optional<std::string> external_endpoint;
  std::chrono::milliseconds timeout{5000};
  int retries = 0;

  void validate() const {
    if (timeout.count() <= 0) throw ConfigError("agent timeout must be positive");
    if (mode == AgentMode::external && !external_endpoint) {
      throw ConfigError("external agent mode requires an endpoint");
    }
    if (mode == AgentMode::rule_based && external_endpoint) {
      throw ConfigError("external endpoint given but agent mode is rule_based");
    }
    if (retries < 0) throw ConfigError("retry count must be non-negative");
  }
};

struct MetricRequirement {
  std::string primary;
  std::vector<std::string> related;

  friend bool operator==(const MetricRequirement&, const MetricRequirement&) = default;
};

struct RequiredData {
  std::vector<EntitySelector> companies;
  std::vector<MetricRequirement> metrics;
  std::string date_phrase;  // verbatim from the query, may be empty

  friend bool operator==(const RequiredData&, const RequiredData&) = default;
};

struct CompiledQuery {
  RequiredData required;
  StructuredDataRequest request;
};

// ---------------------------------------------------------------------------
// Date phrases
//
// Grammar (case-insensitive, matched on word tokens):
//   from <Mon> <yyyy> to <Mon> <yyyy>
//   (for|over|in) the (previous|past|last) <N> month(s)
//   [the] (last|previous) quarter
//   Q<1-4> <yyyy>
//   <Mon> <yyyy>
//   <yyyy>
// <Mon> is a three-letter abbreviation, "Sept", or the full month name.

struct DatePhraseMatch {
  std::string text;  // source substring, original casing
  std::size_t begin = 0;
  std::size_t end = 0;
};

namespace detail {

inline std::optional<unsigned> month_number(std::string_view w) {
  static constexpr std::array<std::string_view, 12> kFull = {
      "january", "february", "march",     "april",   "may",      "june",
      "july",    "august",   "september", "october", "november", "december"};
  for (unsigned i = 0; i < 12; ++i) {
    if (w == kFull[i] || w == kFull[i].substr(0, 3)) return i + 1;
  }
  if (w == "sept") return 9u;
  return std::nullopt;
}

inline std::optional<int> year_number(std::string_view w) {
  if (w.size() != 4) return std::nullopt;
  int v = 0;
  for (char c : w) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  if (v < 1900 || v > 2199) return std::nullopt;
  return v;
}

inline std::optional<int> small_number(std::string_view w) {
  if (w.empty() || w.size() > 3) return std::nullopt;
  int v = 0;
  for (char c : w) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v > 0 ? std::optional<int>(v) : std::nullopt;
}

enum class DateRule { from_to, previous_months, last_quarter, quarter, month_year, year };

struct DateParse {
  DateRule kind;
  std::size_t first = 0;  // token index
  std::size_t count = 0;  // tokens consumed
  int y1 = 0, y2 = 0;
  unsigned m1 = 0, m2 = 0;
  int n = 0;
};

// Tries every rule at token position i; first rule wins.
inline std::optional<DateParse> match_date_at(const std::vector<text::Token>& t, std::size_t i) {
  auto w = [&](std::size_t k) -> std::string_view {
    return i + k < t.size() ? std::string_view(t[i + k].norm) : std::string_view();
  };
  if (w(0) == "from") {
    auto m1 = month_number(w(1));
    auto y1 = year_number(w(2));
    auto m2 = month_number(w(4));
    auto y2 = year_number(w(5));
    if (m1 && y1 && w(3) == "to" && m2 && y2) {
      return DateParse{DateRule::from_to, i, 6, *y1, *y2, *m1, *m2, 0};
    }
  }
  if ((w(0) == "for" || w(0) == "over" || w(0) == "in") && w(1) == "the" &&
      (w(2) == "previous" || w(2) == "past" || w(2) == "last")) {
    if (auto n = small_number(w(3)); n && (w(4) == "months" || w(4) == "month")) {
      return DateParse{DateRule::previous_months, i, 5, 0, 0, 0, 0, *n};
    }
  }
  if ((w(0) == "last" || w(0) == "previous") && w(1) == "quarter") {
    std::size_t first = (i > 0 && t[i - 1].norm == "the") ? i - 1 : i;
    return DateParse{DateRule::last_quarter, first, i + 2 - first, 0, 0, 0, 0, 0};
  }
  if (w(0).size() == 2 && w(0)[0] == 'q' && w(0)[1] >= '1' && w(0)[1] <= '4') {
    if (auto y = year_number(w(1))) {
      return DateParse{DateRule::quarter, i, 2, *y, 0, 0, 0, w(0)[1] - '0'};
    }
  }
  if (auto m = month_number(w(0))) {
    if (auto y = year_number(w(1))) {
      return DateParse{DateRule::month_year, i, 2, *y, 0, *m, 0, 0};
    }
  }
  if (auto y = year_number(w(0))) {
    return DateParse{DateRule::year, i, 1, *y, 0, 0, 0, 0};
  }
  return std::nullopt;
}

inline std::optional<DateParse> find_date(const std::vector<text::Token>& toks) {
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (auto p = match_date_at(toks, i)) return p;
  }
  return std::nullopt;
}

inline Date quarter_end(int year, int quarter) {
  return last_day_of_month(year, static_cast<unsigned>(quarter * 3));
}

inline RangeSpec range_for(const DateParse& p, Date ref) {
  switch (p.kind) {
    case DateRule::from_to: {
      // Ends on the first day of the end month, as in "from Apr 2016 to
      // Jul 2017" -> 1/4/2016 - 1/7/2017. Month-year phrases elsewhere cover
      // the whole month; the asymmetry is intentional.
      DateRange r{Date::ymd(p.y1, p.m1, 1), Date::ymd(p.y2, p.m2, 1)};
      if (r.end < r.start) throw DatePhraseError("range ends before it starts");
      return r;
    }
    case DateRule::previous_months:
      return DateRange{add_months(ref, -p.n), ref};
    case DateRule::last_quarter: {
      // Most recent completed calendar quarter, reported from the final day
      // of the quarter before it: ref 7/7/2023 -> 31/3/2023 - 30/6/2023.
      int q = static_cast<int>((ref.month() - 1) / 3);  // completed quarters this year
      int year = ref.year();
      if (q == 0) {
        q = 4;
        --year;
      }
      int prev_q = q - 1;
      int prev_year = year;
      if (prev_q == 0) {
        prev_q = 4;
        --prev_year;
      }
      return DateRange{quarter_end(prev_year, prev_q), quarter_end(year, q)};
    }
    case DateRule::quarter: {
      auto first = static_cast<unsigned>((p.n - 1) * 3 + 1);
      return DateRange{Date::ymd(p.y1, first, 1), quarter_end(p.y1, p.n)};
    }
    case DateRule::month_year:
      return DateRange{Date::ymd(p.y1, p.m1, 1), last_day_of_month(p.y1, p.m1)};
    default:
      return DateRange{Date::ymd(p.y1, 1, 1), Date::ymd(p.y1, 12, 31)};
  }
}

}  // namespace detail

// Locates the first date phrase in a query.
inline std::optional<DatePhraseMatch> find_date_phrase(std::string_view query) {
  auto toks = text::tokenize(query);
  auto p = detail::find_date(toks);
  if (!p) return std::nullopt;
  DatePhraseMatch m;
  m.begin = toks[p->first].begin;
  m.end = toks[p->first + p->count - 1].end;
  m.text = std::string(query.substr(m.begin, m.end - m.begin));
  return m;
}

// Maps a date phrase to a range relative to `reference_date`. An empty phrase
// yields LatestAvailable. A leading preposition ("in 2022") is accepted, but
// the phrase must otherwise consist of exactly one grammar production.
inline RangeSpec resolve_date_phrase(std::string_view phrase, Date reference_date) {
  auto toks = text::tokenize(phrase);
  if (toks.empty()) {
    if (!text::trim(phrase).empty()) throw DatePhraseError(std::string(phrase));
    return LatestAvailable{};
  }
  std::size_t start = 0;
  if (auto p = detail::match_date_at(toks, 0)) {
    if (p->first == 0 && p->count == toks.size()) return detail::range_for(*p, reference_date);
  }
  if (toks[0].norm == "in" || toks[0].norm == "for" || toks[0].norm == "during") start = 1;
  if (start == 1) {
    if (auto p = detail::match_date_at(toks, 1); p && p->first == 1 && p->count + 1 == toks.size()) {
      return detail::range_for(*p, reference_date);
    }
  }
  // "the last quarter" starts with an article the rule absorbs.
  if (toks.size() >= 2 + start && toks[start].norm == "the") {
    if (auto p = detail::match_date_at(toks, start + 1);
        p && p->kind == detail::DateRule::last_quarter && p->count + start == toks.size()) {
      return detail::range_for(*p, reference_date);
    }
  }
  throw DatePhraseError(std::string(phrase));
}

// Flattens required data into the wire request: entities in order, each
// primary metric followed by its related metrics (duplicates kept), and
// the resolved date phrase.
inline StructuredDataRequest build_request(const RequiredData& required, Date reference_date) {
  StructuredDataRequest r;
  r.entities = required.companies;
  for (const auto& m : required.metrics) {
    r.metrics.push_back(m.primary);
    r.metrics.insert(r.metrics.end(), m.related.begin(), m.related.end());
  }
  r.ranges.push_back(resolve_date_phrase(required.date_phrase, reference_date));
  return r;
}

// ---------------------------------------------------------------------------
// Rule-based compiler

namespace detail {

inline void push_unique(std::vector<EntitySelector>& v, EntitySelector e) {
  if (std::find(v.begin(), v.end(), e) == v.end()) v.push_back(std::move(e));
}

// Number of tokens of a peers phrase ("and its competitors") starting at i.
inline std::size_t peers_phrase_at(const std::vector<text::Token>& t, std::size_t i) {
  static constexpr std::array<std::string_view, 6> kPeerWords = {
      "competitors", "competitor", "peers", "peer", "rivals", "rival"};
  auto is_peer = [](std::string_view w) {
    return std::find(kPeerWords.begin(), kPeerWords.end(), w) != kPeerWords.end();
  };
  if (i + 2 < t.size() && t[i].norm == "and" && t[i + 1].norm == "its" && is_peer(t[i + 2].norm)) {
    return 3;
  }
  if (i < t.size() && is_peer(t[i].norm)) return 1;
  return 0;
}

}  // namespace detail

// Extracts entities and metrics by longest gazetteer match scanning left to
// right without overlaps, expands related metrics from the registry, and
// resolves the first date phrase against config.reference_date.
inline CompiledQuery compile_query(std::string_view query, const Registry& registry,
                                   const AgentConfig& config) {
  if (config.mode != AgentMode::rule_based) {
    throw CompileError(CompileError::Reason::unsupported_mode, std::string(query));
  }
  auto toks = text::tokenize(query);
  auto date = detail::find_date(toks);
  std::size_t date_first = date ? date->first : toks.size();
  std::size_t date_last = date ? date->first + date->count : toks.size();

  CompiledQuery out;
  auto& req = out.required;
  std::vector<std::string> seen_metrics;
  bool mentions_companies = false;

  std::size_t i = 0;
  while (i < toks.size()) {
    if (i >= date_first && i < date_last) {
      i = date_last;
      continue;
    }
    if (toks[i].norm == "companies") mentions_companies = true;
    std::optional<PhraseEntry> best;
    std::size_t best_len = 0;
    std::string phrase;
    for (std::size_t e = i; e < toks.size() && e - i < registry.max_phrase_tokens(); ++e) {
      if (e >= date_first && e < date_last) break;
      if (e > i) phrase.push_back(' ');
      phrase += toks[e].norm;
      if (auto hit = registry.lookup_phrase(phrase)) {
        best = hit;
        best_len = e - i + 1;
      }
    }
    if (!best) {
      ++i;
      continue;
    }
    i += best_len;
    switch (best->kind) {
      case PhraseKind::metric: {
        const auto& m = registry.metrics()[best->index];
        if (std::find(seen_metrics.begin(), seen_metrics.end(), m.canonical_name) ==
            seen_metrics.end()) {
          seen_metrics.push_back(m.canonical_name);
          req.metrics.push_back({m.canonical_name, m.related_metrics});
        }
        break;
      }
      case PhraseKind::company: {
        const auto& c = registry.companies()[best->index];
        detail::push_unique(req.companies, EntitySelector::company(c.canonical_name));
        if (std::size_t n = detail::peers_phrase_at(toks, i); n > 0) {
          detail::push_unique(req.companies, EntitySelector::peers_of(c.canonical_name));
          i += n;
        }
        break;
      }
      case PhraseKind::sector:
        detail::push_unique(req.companies, EntitySelector::sector(registry.sectors()[best->index]));
        break;
    }
  }

  if (req.metrics.empty()) throw CompileError(CompileError::Reason::no_metric, std::string(query));
  if (req.companies.empty()) {
    if (!mentions_companies) {
      throw CompileError(CompileError::Reason::no_entity, std::string(query));
    }
    req.companies.push_back(EntitySelector::sector(std::string(kAllSectors)));
  }
  if (date) {
    req.date_phrase = std::string(query.substr(toks[date->first].begin,
                                               toks[date_last - 1].end - toks[date->first].begin));
  }
  out.request = build_request(req, config.reference_date);
  return out;
}

}  // namespace fincontext
