#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <spdlog/spdlog.h>

#include "fincontext/query_synthesis.hpp"

namespace fincontext::eval {

// Scores reported for the finetuned 7B agent on 10,000 held-out samples.
// Reference only; the model is not part of this project.
struct ReferenceScores {
  static constexpr double bleu = 0.9614;
  static constexpr double rouge1_f1 = 0.9774;
  static constexpr double rouge2_f1 = 0.9693;
  static constexpr double rougeL_f1 = 0.9771;
};

inline constexpr double kSmoothingEpsilon = 1e-9;

// Whitespace split after detaching ( ) ; - , into standalone tokens.
inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      flush();
    } else if (c == '(' || c == ')' || c == ';' || c == '-' || c == ',') {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

inline NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  if (n == 0 || t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    ++out[std::vector<std::string>(t.begin() + static_cast<std::ptrdiff_t>(i),
                                   t.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

// Pooled sufficient statistics; sentence and corpus BLEU share them.
struct BleuStats {
  std::vector<std::size_t> matches;  // clipped, per order
  std::vector<std::size_t> totals;   // candidate n-grams, per order
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;

  explicit BleuStats(std::size_t max_n = 4) : matches(max_n, 0), totals(max_n, 0) {}

  BleuStats& operator+=(const BleuStats& o) {
    for (std::size_t i = 0; i < matches.size(); ++i) {
      matches[i] += o.matches[i];
      totals[i] += o.totals[i];
    }
    candidate_length += o.candidate_length;
    reference_length += o.reference_length;
    return *this;
  }
};

inline BleuStats bleu_stats(const Tokens& cand, const std::vector<Tokens>& refs,
                            std::size_t max_n = 4) {
  BleuStats s(max_n);
  s.candidate_length = cand.size();
  // Closest reference length, shorter on ties.
  std::size_t best = 0;
  bool have = false;
  for (const auto& r : refs) {
    auto d = [&](std::size_t len) { return len > cand.size() ? len - cand.size() : cand.size() - len; };
    if (!have || d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) {
      best = r.size();
      have = true;
    }
  }
  s.reference_length = best;
  for (std::size_t n = 1; n <= max_n; ++n) {
    auto c = ngrams(cand, n);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
    }
    for (const auto& [g, k] : c) {
      s.totals[n - 1] += k;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) s.matches[n - 1] += std::min(k, it->second);
    }
  }
  return s;
}

// Geometric mean of modified precisions times brevity penalty. Orders with
// no candidate n-grams are left out of the mean. No unigram match scores 0;
// any other zero precision is replaced by epsilon / total.
inline double bleu_from_stats(const BleuStats& s) {
  if (s.candidate_length == 0) return 0.0;
  if (s.totals.empty() || s.matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t i = 0; i < s.totals.size(); ++i) {
    if (s.totals[i] == 0) continue;
    double p = s.matches[i] ? static_cast<double>(s.matches[i]) / static_cast<double>(s.totals[i])
                            : kSmoothingEpsilon / static_cast<double>(s.totals[i]);
    log_sum += std::log(p);
    ++orders;
  }
  double bp = s.candidate_length >= s.reference_length
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(s.reference_length) /
                                       static_cast<double>(s.candidate_length));
  return std::clamp(bp * std::exp(log_sum / static_cast<double>(orders)), 0.0, 1.0);
}

inline double bleu(std::string_view candidate, const std::vector<std::string>& references,
                   std::size_t max_n = 4) {
  if (max_n == 0) throw Error("invalid-argument", "max_n must be at least 1");
  auto cand = tokenize(candidate);
  if (cand.empty()) {
    spdlog::warn("bleu: empty candidate scored 0");
    return 0.0;
  }
  std::vector<Tokens> refs;
  for (const auto& r : references) refs.push_back(tokenize(r));
  return bleu_from_stats(bleu_stats(cand, refs, max_n));
}

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline PRF make_prf(std::size_t overlap, std::size_t cand_total, std::size_t ref_total) {
  PRF r;
  if (cand_total) r.precision = static_cast<double>(overlap) / static_cast<double>(cand_total);
  if (ref_total) r.recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

inline PRF rouge_n(const Tokens& cand, const Tokens& ref, std::size_t n) {
  if (n == 0) throw Error("invalid-argument", "n must be at least 1");
  auto c = ngrams(cand, n);
  auto r = ngrams(ref, n);
  std::size_t overlap = 0, ct = 0, rt = 0;
  for (const auto& [g, k] : c) {
    ct += k;
    auto it = r.find(g);
    if (it != r.end()) overlap += std::min(k, it->second);
  }
  for (const auto& [_, k] : r) rt += k;
  return make_prf(overlap, ct, rt);
}

inline PRF rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
  return rouge_n(tokenize(candidate), tokenize(reference), n);
}

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline PRF rouge_l(const Tokens& cand, const Tokens& ref) {
  return make_prf(lcs_length(cand, ref), cand.size(), ref.size());
}

inline PRF rouge_l(std::string_view candidate, std::string_view reference) {
  return rouge_l(tokenize(candidate), tokenize(reference));
}

// ---------------------------------------------------------------------------

struct RowFailure {
  std::size_t row = 0;
  std::string label;
  std::string prediction;
  std::string error;  // agent fault, empty when the agent answered
};

struct EvalReport {
  std::size_t rows = 0;
  double bleu = 0.0;           // corpus BLEU over pooled counts
  double sentence_bleu = 0.0;  // mean of per-row BLEU
  double rouge1_f1 = 0.0;      // means of per-row F1
  double rouge2_f1 = 0.0;
  double rougeL_f1 = 0.0;
  double exact_match_rate = 0.0;
  std::size_t agent_errors = 0;
  std::vector<RowFailure> per_row_failures;
};

using AgentFn = std::function<std::string(std::string_view query)>;

// A throwing agent scores the row as an empty prediction.
inline EvalReport evaluate_agent(const std::vector<DatasetRow>& dataset, const AgentFn& agent,
                                 std::size_t max_n = 4) {
  if (dataset.empty()) throw Error("invalid-argument", "dataset must not be empty");
  EvalReport rep;
  rep.rows = dataset.size();
  BleuStats pooled(max_n);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& row = dataset[i];
    std::string pred, err;
    try {
      pred = agent(row.query);
    } catch (const std::exception& e) {
      err = e.what();
      ++rep.agent_errors;
      spdlog::warn("eval: agent failed on row {}: {}", i, err);
    }
    auto c = tokenize(pred);
    auto r = tokenize(row.structured_request);
    auto stats = bleu_stats(c, {r}, max_n);
    pooled += stats;
    rep.sentence_bleu += bleu_from_stats(stats);
    rep.rouge1_f1 += rouge_n(c, r, 1).f1;
    rep.rouge2_f1 += rouge_n(c, r, 2).f1;
    rep.rougeL_f1 += rouge_l(c, r).f1;
    if (pred == row.structured_request) {
      ++exact;
    } else {
      rep.per_row_failures.push_back({i, row.structured_request, pred, err});
    }
  }
  double n = static_cast<double>(dataset.size());
  rep.bleu = bleu_from_stats(pooled);
  rep.sentence_bleu /= n;
  rep.rouge1_f1 /= n;
  rep.rouge2_f1 /= n;
  rep.rougeL_f1 /= n;
  rep.exact_match_rate = static_cast<double>(exact) / n;
  return rep;
}

}  // namespace fincontext::eval
