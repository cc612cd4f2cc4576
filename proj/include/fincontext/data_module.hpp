#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fincontext/date.hpp"
#include "fincontext/errors.hpp"
#include "fincontext/registry.hpp"
#include "fincontext/request_grammar.hpp"
#include "fincontext/text.hpp"

namespace fincontext {

struct Observation {
  std::string company;  // canonical
  std::string metric;   // canonical
  Date period_start;
  Date period_end;
  double value = 0.0;
  std::string unit;

  DateRange period() const { return {period_start, period_end}; }
};

using Timestamp = std::chrono::sys_seconds;

struct NewsItem {
  std::string id;
  Timestamp published{};
  std::string headline;
  std::string body;
  std::vector<std::string> entities;  // canonical company names
};

struct IngestReport {
  std::size_t inserted = 0;
  std::size_t replaced = 0;
  std::size_t rejected = 0;
  std::vector<std::string> rejections;  // one reason per rejected record
};

struct StoreOptions {
  int daily_window_days = 30;  // trailing window for LatestAvailable on daily metrics
};

// ---------------------------------------------------------------------------
// Formatting helpers shared by the store files and the renderer.

// Shortest fixed-notation text that round-trips, without separators:
// 1932000, 0.25, -3.5.
inline std::string format_value(double v) {
  char buf[128];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, r.ptr);
}

inline double parse_value(std::string_view s) {
  s = text::trim(s);
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw IngestError("invalid numeric value \"" + std::string(s) + "\"");
  }
  return v;
}

// "d/m/yyyy" or "d/m/yyyy HH:MM[:SS]" (UTC).
inline Timestamp parse_timestamp(std::string_view s) {
  s = text::trim(s);
  auto sp = s.find(' ');
  Date d = parse_date_token(s.substr(0, sp));
  std::chrono::seconds tod{0};
  if (sp != std::string_view::npos) {
    auto t = text::trim(s.substr(sp + 1));
    auto parts = text::split(t, ':');
    if (parts.size() < 2 || parts.size() > 3) {
      throw DateError(DateError::Reason::format, "malformed time \"" + std::string(t) + "\"");
    }
    unsigned h = 0, m = 0, sec = 0;
    if (!detail::parse_digits(parts[0], 1, 2, h) || !detail::parse_digits(parts[1], 2, 2, m) ||
        (parts.size() == 3 && !detail::parse_digits(parts[2], 2, 2, sec)) || h > 23 || m > 59 ||
        sec > 59) {
      throw DateError(DateError::Reason::format, "malformed time \"" + std::string(t) + "\"");
    }
    tod = std::chrono::hours{h} + std::chrono::minutes{m} + std::chrono::seconds{sec};
  }
  return Timestamp{std::chrono::sys_seconds{d.days()}.time_since_epoch() + tod};
}

inline std::string format_timestamp(Timestamp ts) {
  auto days = std::chrono::floor<std::chrono::days>(ts);
  auto tod = ts - days;
  auto h = std::chrono::duration_cast<std::chrono::hours>(tod).count();
  auto m = std::chrono::duration_cast<std::chrono::minutes>(tod).count() % 60;
  auto s = tod.count() % 60;
  auto two = [](long long v) { return (v < 10 ? "0" : "") + std::to_string(v); };
  return format_date(Date::from_days(std::chrono::sys_days{days})) + " " + std::to_string(h) +
         ":" + two(m) + ":" + two(s);
}

// ---------------------------------------------------------------------------
// Lexical similarity

namespace detail {

inline const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kStop = {
      "a",     "an",    "and",   "are",  "as",    "at",   "be",    "been", "but",   "by",
      "can",   "could", "did",   "do",   "does",  "for",  "from",  "had",  "has",   "have",
      "how",   "i",     "if",    "in",   "into",  "is",   "it",    "its",  "me",    "my",
      "of",    "on",    "or",    "our",  "should", "so",  "than",  "that", "the",   "their",
      "them",  "then",  "there", "these", "they", "this", "those", "to",   "was",   "we",
      "were",  "what",  "when",  "where", "which", "while", "who", "why",  "will",  "with",
      "would", "you",   "your",  "some", "any",   "about", "based", "there"};
  return kStop;
}

}  // namespace detail

// Term-frequency vector with integer counts, sorted by term.
struct TermVector {
  std::vector<std::pair<std::string, double>> terms;
  double squared_norm = 0.0;

  static TermVector of(std::string_view s) {
    std::map<std::string, double> counts;
    for (auto& t : text::tokenize(s)) {
      if (!detail::stopwords().count(t.norm)) counts[t.norm] += 1.0;
    }
    TermVector v;
    v.terms.assign(counts.begin(), counts.end());
    for (const auto& [_, c] : v.terms) v.squared_norm += c * c;
    return v;
  }

  // Cosine similarity in [0, 1]. Exactly 1.0 when the count vectors are
  // proportional: the denominator sqrt(|a|^2 |b|^2) is exact for those.
  double cosine(const TermVector& o) const {
    if (squared_norm == 0.0 || o.squared_norm == 0.0) return 0.0;
    double dot = 0.0;
    auto a = terms.begin();
    auto b = o.terms.begin();
    while (a != terms.end() && b != o.terms.end()) {
      int c = a->first.compare(b->first);
      if (c == 0) {
        dot += a->second * b->second;
        ++a;
        ++b;
      } else if (c < 0) {
        ++a;
      } else {
        ++b;
      }
    }
    return std::min(1.0, dot / std::sqrt(squared_norm * o.squared_norm));
  }
};

using SimilarityScorer = std::function<double(std::string_view query, std::string_view document)>;

// Default scorer: stopword-filtered token-frequency cosine.
inline double lexical_cosine(std::string_view a, std::string_view b) {
  return TermVector::of(a).cosine(TermVector::of(b));
}

// Text a news item is scored on: its headline with entity names appended.
inline std::string news_document(const NewsItem& n) {
  std::string doc = n.headline;
  for (const auto& e : n.entities) doc += " " + e;
  return doc;
}

struct ScoredNews {
  NewsItem item;
  double score = 0.0;
};

// ---------------------------------------------------------------------------
// Snapshot: immutable view of the store

struct Series {
  std::vector<Observation> obs;  // sorted by (period_start, period_end)
  std::int64_t max_span = 0;     // longest period length in days
};

struct NewsEntry {
  NewsItem item;
  TermVector vector;
};

class Snapshot {
 public:
  const Series* series(std::string_view metric, std::string_view company) const {
    auto it = series_.find(key(metric, company));
    return it == series_.end() ? nullptr : it->second.get();
  }

  const std::vector<std::shared_ptr<const NewsEntry>>& news() const { return news_; }
  std::size_t observation_count() const { return observation_count_; }

  std::vector<Observation> observations() const {
    std::vector<std::pair<std::string, const Series*>> ordered;
    for (const auto& [k, s] : series_) ordered.emplace_back(k, s.get());
    std::sort(ordered.begin(), ordered.end());
    std::vector<Observation> out;
    for (const auto& [_, s] : ordered) out.insert(out.end(), s->obs.begin(), s->obs.end());
    return out;
  }

  static std::string key(std::string_view metric, std::string_view company) {
    std::string k(metric);
    k.push_back('\x1f');
    k += company;
    return k;
  }

 private:
  friend class DataStore;

  std::unordered_map<std::string, std::shared_ptr<const Series>> series_;
  std::vector<std::shared_ptr<const NewsEntry>> news_;
  std::unordered_map<std::string, std::size_t> news_pos_;
  std::size_t observation_count_ = 0;
};

// ---------------------------------------------------------------------------
// Range resolution

struct Resolution {
  DateRange range;                   // hull of the selected periods
  Frequency frequency = Frequency::quarterly;
  bool substituted = false;          // nearest period used, nothing overlapped
  std::vector<std::size_t> indices;  // ascending positions in Series::obs
};

namespace detail {

inline bool more_recent(const Observation& a, const Observation& b) {
  if (a.period_end != b.period_end) return a.period_end > b.period_end;
  return a.period_start > b.period_start;
}

// Positions overlapping `r`, ascending.
inline std::vector<std::size_t> overlapping(const Series& s, const DateRange& r) {
  std::vector<std::size_t> out;
  auto ub = std::upper_bound(s.obs.begin(), s.obs.end(), r.end,
                             [](Date d, const Observation& o) { return d < o.period_start; });
  std::size_t k = static_cast<std::size_t>(ub - s.obs.begin());
  Date floor = r.start.plus_days(-s.max_span);
  while (k > 0) {
    --k;
    const auto& o = s.obs[k];
    if (o.period_start < floor) break;
    if (o.period_end >= r.start) out.push_back(k);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Single period at minimum interval distance; ties go to the more recent.
inline std::size_t nearest(const Series& s, const DateRange& r) {
  auto ub = std::upper_bound(s.obs.begin(), s.obs.end(), r.end,
                             [](Date d, const Observation& o) { return d < o.period_start; });
  std::size_t after = static_cast<std::size_t>(ub - s.obs.begin());
  std::optional<std::size_t> best_before;
  for (std::size_t k = after; k > 0; --k) {
    const auto& o = s.obs[k - 1];
    if (best_before && o.period_start < s.obs[*best_before].period_end.plus_days(-s.max_span)) break;
    if (!best_before || more_recent(o, s.obs[*best_before])) best_before = k - 1;
  }
  std::optional<std::size_t> best_after;
  if (after < s.obs.size()) {
    std::size_t k = after;
    while (k + 1 < s.obs.size() && s.obs[k + 1].period_start == s.obs[after].period_start) ++k;
    best_after = k;  // same start, largest end
  }
  if (!best_before) return *best_after;
  if (!best_after) return *best_before;
  auto gb = interval_gap(s.obs[*best_before].period(), r);
  auto ga = interval_gap(s.obs[*best_after].period(), r);
  if (gb != ga) return gb < ga ? *best_before : *best_after;
  return more_recent(s.obs[*best_after], s.obs[*best_before]) ? *best_after : *best_before;
}

}  // namespace detail

// Frequency-aware resolution of one requested range against one series.
// Periods overlapping the request are returned; when none overlap, the single
// period with the smallest interval gap (ties to the more recent). Daily
// observations are single days, so overlap is exactly "inside the range".
// LatestAvailable picks the most recent period, or for daily metrics the
// trailing window ending at the latest observation.
inline std::optional<Resolution> resolve_range(const MetricSpec& metric, const Series* series,
                                               const RangeSpec& requested,
                                               const StoreOptions& options = {}) {
  if (!series || series->obs.empty()) return std::nullopt;
  const auto& obs = series->obs;
  Resolution res;
  res.frequency = metric.frequency;
  if (is_latest(requested)) {
    std::size_t latest = 0;
    for (std::size_t k = 1; k < obs.size(); ++k) {
      if (detail::more_recent(obs[k], obs[latest])) latest = k;
    }
    if (metric.frequency == Frequency::daily) {
      Date end = obs[latest].period_end;
      DateRange window{end.plus_days(-(options.daily_window_days - 1)), end};
      res.indices = detail::overlapping(*series, window);
    } else {
      res.indices = {latest};
    }
  } else {
    const auto& r = std::get<DateRange>(requested);
    res.indices = detail::overlapping(*series, r);
    if (res.indices.empty()) {
      res.indices = {detail::nearest(*series, r)};
      res.substituted = true;
    }
  }
  res.range = obs[res.indices.front()].period();
  for (auto k : res.indices) {
    res.range.start = std::min(res.range.start, obs[k].period_start);
    res.range.end = std::max(res.range.end, obs[k].period_end);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Retrieval table

struct TableRow {
  std::string company;
  std::string metric;
  std::vector<double> values;      // ordered by period_start
  std::vector<DateRange> periods;  // parallel to values
  DateRange resolved_range;
  Frequency frequency = Frequency::quarterly;
  std::string unit;
  bool substituted = false;
};

struct UnresolvedEntry {
  std::string entity;
  std::string metric;  // empty when the whole selector failed to expand
  std::string reason;
};

struct RetrievalTable {
  std::vector<std::string> companies;  // expanded, first-occurrence order
  std::vector<std::string> metrics;    // deduplicated, first-occurrence order
  std::vector<TableRow> rows;          // metric-major, company-minor
  std::vector<UnresolvedEntry> unresolved;

  bool empty() const { return rows.empty() && unresolved.empty(); }
};

// ---------------------------------------------------------------------------
// Store

// Embedded store with snapshot isolation: readers take an immutable
// snapshot; writers are serialized and publish a new snapshot per batch, so
// a reader sees either all or none of a batch. Series are shared between
// snapshots and copied only when a batch touches them.
class DataStore {
 public:
  explicit DataStore(std::shared_ptr<const Registry> registry, StoreOptions options = {})
      : registry_(std::move(registry)),
        options_(options),
        current_(std::make_shared<const Snapshot>()) {}

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return current_;
  }

  const Registry& registry() const { return *registry_; }
  std::shared_ptr<const Registry> registry_ptr() const { return registry_; }
  const StoreOptions& options() const { return options_; }

  // Idempotent upsert keyed by (company, metric, period_start, period_end).
  IngestReport ingest_timeseries(const std::vector<Observation>& records) {
    std::lock_guard writer(writer_mutex_);
    auto next = std::make_shared<Snapshot>(*snapshot());
    IngestReport rep;
    std::unordered_map<std::string, std::shared_ptr<Series>> touched;
    for (const auto& rec : records) {
      const auto* metric = registry_->find_metric(rec.metric);
      const auto* company = registry_->find_company(rec.company);
      std::string why;
      if (!metric) {
        why = "unknown metric '" + rec.metric + "'";
      } else if (!company) {
        why = "unknown company '" + rec.company + "'";
      } else if (rec.period_end < rec.period_start) {
        why = "period ends before it starts";
      } else if (metric->frequency == Frequency::daily && rec.period_start != rec.period_end) {
        why = "daily metric '" + metric->canonical_name + "' needs a single-day period";
      } else if (!std::isfinite(rec.value)) {
        why = "non-finite value";
      }
      if (!why.empty()) {
        ++rep.rejected;
        rep.rejections.push_back(why);
        continue;
      }
      Observation o = rec;
      o.company = company->canonical_name;
      o.metric = metric->canonical_name;
      if (o.unit.empty()) o.unit = metric->unit;
      auto k = Snapshot::key(o.metric, o.company);
      auto& s = touched[k];
      if (!s) {
        auto it = next->series_.find(k);
        s = it == next->series_.end() ? std::make_shared<Series>()
                                      : std::make_shared<Series>(*it->second);
      }
      auto pos = std::lower_bound(s->obs.begin(), s->obs.end(), o,
                                  [](const Observation& a, const Observation& b) {
                                    return std::pair(a.period_start, a.period_end) <
                                           std::pair(b.period_start, b.period_end);
                                  });
      if (pos != s->obs.end() && pos->period_start == o.period_start &&
          pos->period_end == o.period_end) {
        *pos = std::move(o);
        ++rep.replaced;
      } else {
        s->max_span = std::max(s->max_span, days_between(o.period_start, o.period_end));
        s->obs.insert(pos, std::move(o));
        ++rep.inserted;
        ++next->observation_count_;
      }
    }
    for (auto& [k, s] : touched) next->series_[k] = std::move(s);
    publish(std::move(next));
    return rep;
  }

  // Upsert keyed by id. Items must carry a headline; entity names are
  // canonicalized when they resolve and kept verbatim otherwise.
  IngestReport ingest_news(const std::vector<NewsItem>& items) {
    std::lock_guard writer(writer_mutex_);
    auto next = std::make_shared<Snapshot>(*snapshot());
    IngestReport rep;
    for (const auto& item : items) {
      if (item.id.empty() || text::trim(item.headline).empty()) {
        ++rep.rejected;
        rep.rejections.push_back(item.id.empty() ? "news item without id"
                                                 : "news item '" + item.id + "' has no headline");
        continue;
      }
      auto entry = std::make_shared<NewsEntry>();
      entry->item = item;
      for (auto& e : entry->item.entities) {
        if (const auto* c = registry_->find_company(e)) e = c->canonical_name;
      }
      entry->vector = TermVector::of(news_document(entry->item));
      auto it = next->news_pos_.find(item.id);
      if (it != next->news_pos_.end()) {
        next->news_[it->second] = std::move(entry);
        ++rep.replaced;
      } else {
        next->news_pos_[item.id] = next->news_.size();
        next->news_.push_back(std::move(entry));
        ++rep.inserted;
      }
    }
    publish(std::move(next));
    return rep;
  }

  std::optional<Resolution> resolve_range(const MetricSpec& metric, std::string_view company,
                                          const RangeSpec& requested) const {
    auto snap = snapshot();
    return fincontext::resolve_range(metric, snap->series(metric.canonical_name, company),
                                     requested, options_);
  }

  RetrievalTable fetch_table(const StructuredDataRequest& request) const {
    return fetch_table(request, *snapshot());
  }

  RetrievalTable fetch_table(const StructuredDataRequest& request, const Snapshot& snap) const;

  std::vector<ScoredNews> match_news(std::string_view query, std::size_t k,
                                     const SimilarityScorer& scorer = {},
                                     const std::vector<std::string>& entity_filter = {}) const {
    return match_news(*snapshot(), query, k, scorer, entity_filter);
  }

  static std::vector<ScoredNews> match_news(const Snapshot& snap, std::string_view query,
                                            std::size_t k, const SimilarityScorer& scorer = {},
                                            const std::vector<std::string>& entity_filter = {});

  // Persistence: <dir>/timeseries.csv and <dir>/news.jsonl.
  static std::unique_ptr<DataStore> open(const std::filesystem::path& dir,
                                         std::shared_ptr<const Registry> registry,
                                         StoreOptions options = {});
  void save(const std::filesystem::path& dir) const;

 private:
  void publish(std::shared_ptr<const Snapshot> next) {
    std::lock_guard lock(snapshot_mutex_);
    current_ = std::move(next);
  }

  std::shared_ptr<const Registry> registry_;
  StoreOptions options_;
  mutable std::mutex snapshot_mutex_;
  std::mutex writer_mutex_;
  std::shared_ptr<const Snapshot> current_;
};

inline RetrievalTable DataStore::fetch_table(const StructuredDataRequest& request,
                                             const Snapshot& snap) const {
  const auto& reg = *registry_;
  RetrievalTable table;

  for (const auto& sel : request.entities) {
    auto add = [&](const std::string& name) {
      if (std::find(table.companies.begin(), table.companies.end(), name) == table.companies.end()) {
        table.companies.push_back(name);
      }
    };
    switch (sel.kind) {
      case EntityKind::company:
        add(reg.resolve_company(sel.name).canonical_name);
        break;
      case EntityKind::peers_of: {
        const auto& c = reg.resolve_company(sel.name);
        if (c.peers.empty()) {
          table.unresolved.push_back({to_string(sel), "", "no peers registered"});
        }
        for (const auto& p : c.peers) add(p);
        break;
      }
      case EntityKind::sector: {
        auto s = reg.find_sector(sel.name);
        if (!s) throw UnknownEntityError(to_string(sel));
        for (const auto& name : reg.companies_in_sector(*s)) add(name);
        break;
      }
    }
  }
  std::vector<const MetricSpec*> metrics;
  for (const auto& name : request.metrics) {
    const auto& m = reg.resolve_metric(name);
    if (std::find(metrics.begin(), metrics.end(), &m) == metrics.end()) {
      metrics.push_back(&m);
      table.metrics.push_back(m.canonical_name);
    }
  }

  for (const auto* m : metrics) {
    for (const auto& company : table.companies) {
      const Series* s = snap.series(m->canonical_name, company);
      std::vector<std::size_t> picked;
      bool substituted = false;
      for (const auto& range : request.ranges) {
        if (auto res = fincontext::resolve_range(*m, s, range, options_)) {
          picked.insert(picked.end(), res->indices.begin(), res->indices.end());
          substituted = substituted || res->substituted;
        }
      }
      if (picked.empty()) {
        table.unresolved.push_back({company, m->canonical_name, "no data available"});
        continue;
      }
      std::sort(picked.begin(), picked.end());
      picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
      TableRow row;
      row.company = company;
      row.metric = m->canonical_name;
      row.frequency = m->frequency;
      row.substituted = substituted;
      row.resolved_range = s->obs[picked.front()].period();
      row.unit = s->obs[picked.front()].unit;
      for (auto k : picked) {
        const auto& o = s->obs[k];
        row.values.push_back(o.value);
        row.periods.push_back(o.period());
        row.resolved_range.start = std::min(row.resolved_range.start, o.period_start);
        row.resolved_range.end = std::max(row.resolved_range.end, o.period_end);
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

// Top-k news by score (descending), ties broken by recency then id. With no
// scorer given, the precomputed lexical cosine vectors are used.
inline std::vector<ScoredNews> DataStore::match_news(const Snapshot& snap, std::string_view query,
                                                     std::size_t k, const SimilarityScorer& scorer,
                                                     const std::vector<std::string>& entity_filter) {
  struct Candidate {
    const NewsEntry* entry;
    double score;
  };
  std::vector<Candidate> cands;
  cands.reserve(snap.news().size());
  TermVector qv = scorer ? TermVector{} : TermVector::of(query);
  for (const auto& e : snap.news()) {
    if (!entity_filter.empty()) {
      bool hit = std::any_of(e->item.entities.begin(), e->item.entities.end(), [&](const auto& n) {
        return std::find(entity_filter.begin(), entity_filter.end(), n) != entity_filter.end();
      });
      if (!hit) continue;
    }
    double s = scorer ? scorer(query, news_document(e->item)) : qv.cosine(e->vector);
    cands.push_back({e.get(), s});
  }
  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.entry->item.published != b.entry->item.published) {
      return a.entry->item.published > b.entry->item.published;
    }
    return a.entry->item.id < b.entry->item.id;
  };
  std::size_t take = std::min(k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take), cands.end(),
                    better);
  std::vector<ScoredNews> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back({cands[i].entry->item, cands[i].score});
  return out;
}

// ---------------------------------------------------------------------------
// File formats

namespace detail {

// RFC 4180-style record splitting: fields may be double-quoted, with ""
// escaping a quote. Quoted fields may not span lines.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && text::trim(cur).empty()) {
      quoted = was_quoted = true;
      cur.clear();
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : std::string(text::trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw IngestError("unterminated quoted field", line_no);
  fields.push_back(was_quoted ? cur : std::string(text::trim(cur)));
  return fields;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace detail

// Delimited time-series file with header
// company,metric,period_start,period_end,value,unit (dates d/m/yyyy).
inline std::vector<Observation> read_timeseries_csv(std::istream& in) {
  static const std::vector<std::string> kHeader = {"company",    "metric", "period_start",
                                                   "period_end", "value",  "unit"};
  std::vector<Observation> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto f = detail::split_csv_line(line, line_no);
    if (!header_seen) {
      for (auto& h : f) h = text::lower(h);
      if (f != kHeader) {
        throw IngestError("expected header company,metric,period_start,period_end,value,unit",
                          line_no);
      }
      header_seen = true;
      continue;
    }
    if (f.size() != kHeader.size()) {
      throw IngestError("expected 6 fields, got " + std::to_string(f.size()), line_no);
    }
    try {
      Observation o;
      o.company = f[0];
      o.metric = f[1];
      o.period_start = parse_date_token(f[2]);
      o.period_end = parse_date_token(f[3]);
      o.value = parse_value(f[4]);
      o.unit = f[5];
      out.push_back(std::move(o));
    } catch (const Error& e) {
      throw IngestError(e.what(), line_no);
    }
  }
  if (!header_seen && line_no > 0) throw IngestError("missing header");
  return out;
}

inline void write_timeseries_csv(std::ostream& out, const std::vector<Observation>& obs) {
  out << "company,metric,period_start,period_end,value,unit\n";
  for (const auto& o : obs) {
    out << detail::csv_field(o.company) << ',' << detail::csv_field(o.metric) << ','
        << format_date(o.period_start) << ',' << format_date(o.period_end) << ','
        << format_value(o.value) << ',' << detail::csv_field(o.unit) << '\n';
  }
}

inline NewsItem news_from_json(const nlohmann::json& j) {
  static const std::unordered_set<std::string> kFields = {"id", "published", "headline", "body",
                                                          "entities"};
  if (!j.is_object()) throw IngestError("news record must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (!kFields.count(k)) throw IngestError("unknown news field '" + k + "'");
  }
  NewsItem n;
  try {
    n.id = j.at("id").get<std::string>();
    n.published = parse_timestamp(j.at("published").get<std::string>());
    n.headline = j.at("headline").get<std::string>();
    n.body = j.value("body", std::string());
    if (j.contains("entities")) n.entities = j.at("entities").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("malformed news record: ") + e.what());
  }
  return n;
}

inline nlohmann::json news_to_json(const NewsItem& n) {
  return {{"id", n.id},
          {"published", format_timestamp(n.published)},
          {"headline", n.headline},
          {"body", n.body},
          {"entities", n.entities}};
}

// Line-delimited JSON records {id, published, headline, body, entities}.
inline std::vector<NewsItem> read_news_jsonl(std::istream& in) {
  std::vector<NewsItem> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(news_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(std::string("invalid JSON: ") + e.what(), line_no);
    } catch (const Error& e) {
      throw IngestError(e.what(), line_no);
    }
  }
  return out;
}

inline std::unique_ptr<DataStore> DataStore::open(const std::filesystem::path& dir,
                                                  std::shared_ptr<const Registry> registry,
                                                  StoreOptions options) {
  auto store = std::make_unique<DataStore>(std::move(registry), options);
  if (std::ifstream ts(dir / "timeseries.csv"); ts) {
    auto rep = store->ingest_timeseries(read_timeseries_csv(ts));
    if (rep.rejected) {
      throw IngestError("store file rejected by registry: " + rep.rejections.front());
    }
  }
  if (std::ifstream news(dir / "news.jsonl"); news) store->ingest_news(read_news_jsonl(news));
  return store;
}

inline void DataStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto snap = snapshot();
  auto write_atomic = [&](const std::string& name, auto&& body) {
    auto tmp = dir / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IngestError("cannot write " + tmp.string());
      body(out);
    }
    std::filesystem::rename(tmp, dir / name);
  };
  write_atomic("timeseries.csv",
               [&](std::ostream& out) { write_timeseries_csv(out, snap->observations()); });
  write_atomic("news.jsonl", [&](std::ostream& out) {
    for (const auto& e : snap->news()) out << news_to_json(e->item).dump() << '\n';
  });
}

}  // namespace fincontext
