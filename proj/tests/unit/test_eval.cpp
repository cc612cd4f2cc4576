#include <gtest/gtest.h>

#include "test_support.hpp"

namespace fc = fincontext;
namespace ev = fincontext::eval;
namespace ts = testsupport;

namespace {

// Values computed by hand from clipped n-gram counts (see each test).
constexpr double kBleuOneMetricSwapped = 0.7611606003349891;  // (12/13*10/12*8/11*6/10)^(1/4)
constexpr double kBleuCatMat = 0.0025406637407730743;         // p4 = 1e-9/3 smoothing
constexpr double kBleuCorpusPooled = 0.659761888915999;       // 17/19, 13/17, 9/15, 6/13

const std::string kRefReq = "(A) (M1; M3) (1/1/2024 - 2/1/2024)";
const std::string kCandReq = "(A) (M1; M2) (1/1/2024 - 2/1/2024)";

// Exponential LCS by plain recursion; only used on short inputs.
std::size_t lcs_brute(const ev::Tokens& a, const ev::Tokens& b, std::size_t i = 0, std::size_t j = 0) {
  if (i == a.size() || j == b.size()) return 0;
  if (a[i] == b[j]) return 1 + lcs_brute(a, b, i + 1, j + 1);
  return std::max(lcs_brute(a, b, i + 1, j), lcs_brute(a, b, i, j + 1));
}

}  // namespace

TEST(Eval, TokenizerDetachesStructure) {
  EXPECT_EQ(ev::tokenize(kRefReq),
            (ev::Tokens{"(", "A", ")", "(", "M1", ";", "M3", ")", "(", "1/1/2024", "-", "2/1/2024", ")"}));
  EXPECT_EQ(ev::tokenize("PepsiCo, Inc."), (ev::Tokens{"PepsiCo", ",", "Inc."}));
}

TEST(Eval, BleuHandOracle) {
  EXPECT_NEAR(ev::bleu(kCandReq, {kRefReq}), kBleuOneMetricSwapped, 1e-12);
  EXPECT_NEAR(ev::bleu("the cat sat on the mat", {"the cat is on the mat"}), kBleuCatMat, 1e-12);
  // All orders 1..3 match; no 4-grams exist, so that order is skipped. BP = e^(1-6/3).
  EXPECT_NEAR(ev::bleu("a b c", {"a b c d e f"}), std::exp(-1.0), 1e-12);
}

TEST(Eval, BleuBoundaryCases) {
  EXPECT_EQ(ev::bleu(kRefReq, {kRefReq}), 1.0);
  EXPECT_EQ(ev::bleu("x y z", {"a b c"}), 0.0);
  EXPECT_EQ(ev::bleu("", {kRefReq}), 0.0);
  EXPECT_THROW(ev::bleu("a", {"a"}, 0), fc::Error);
  // Multiple references: best clipping across them.
  EXPECT_EQ(ev::bleu(kCandReq, {kRefReq, kCandReq}), 1.0);
}

TEST(Eval, CorpusBleuPoolsCounts) {
  auto s = ev::bleu_stats(ev::tokenize(kCandReq), {ev::tokenize(kRefReq)});
  s += ev::bleu_stats(ev::tokenize("the cat sat on the mat"), {ev::tokenize("the cat is on the mat")});
  EXPECT_NEAR(ev::bleu_from_stats(s), kBleuCorpusPooled, 1e-12);
}

TEST(Eval, RougeHandOracles) {
  // Candidate is the first half of the reference.
  auto r1 = ev::rouge_n("a b c d", "a b c d e f g h", 1);
  EXPECT_DOUBLE_EQ(r1.precision, 1.0);
  EXPECT_DOUBLE_EQ(r1.recall, 0.5);
  EXPECT_NEAR(r1.f1, 2.0 / 3.0, 1e-12);
  auto r2 = ev::rouge_n("a b c d", "a b c d e f g h", 2);
  EXPECT_NEAR(r2.recall, 3.0 / 7.0, 1e-12);
  EXPECT_NEAR(r2.f1, 0.6, 1e-12);

  // Clipping: "the" twice in each, overlap 5 of 6.
  auto c1 = ev::rouge_n("the cat sat on the mat", "the cat is on the mat", 1);
  EXPECT_NEAR(c1.f1, 5.0 / 6.0, 1e-12);
  auto c2 = ev::rouge_n("the cat sat on the mat", "the cat is on the mat", 2);
  EXPECT_NEAR(c2.f1, 3.0 / 5.0, 1e-12);
  auto cl = ev::rouge_l("the cat sat on the mat", "the cat is on the mat");
  EXPECT_NEAR(cl.f1, 5.0 / 6.0, 1e-12);

  // LCS of a b c d e vs a c e b d is 3.
  auto l = ev::rouge_l("a b c d e", "a c e b d");
  EXPECT_NEAR(l.f1, 0.6, 1e-12);

  auto one = ev::rouge_n(kCandReq, kRefReq, 1);
  EXPECT_NEAR(one.f1, 12.0 / 13.0, 1e-12);
  auto two = ev::rouge_n(kCandReq, kRefReq, 2);
  EXPECT_NEAR(two.f1, 10.0 / 12.0, 1e-12);
  EXPECT_NEAR(ev::rouge_l(kCandReq, kRefReq).f1, 12.0 / 13.0, 1e-12);

  EXPECT_EQ(ev::rouge_n("", "a b", 1).f1, 0.0);
  EXPECT_EQ(ev::rouge_l("a b", "").f1, 0.0);
}

TEST(EvalProperty, LcsMatchesBruteForce) {
  std::mt19937_64 rng(42);
  const ev::Tokens alphabet = {"(", ")", ";", "A", "B", "C"};
  for (int i = 0; i < 400; ++i) {
    ev::Tokens a, b;
    std::size_t na = rng() % 13, nb = rng() % 13;
    for (std::size_t k = 0; k < na; ++k) a.push_back(alphabet[rng() % alphabet.size()]);
    for (std::size_t k = 0; k < nb; ++k) b.push_back(alphabet[rng() % alphabet.size()]);
    ASSERT_EQ(ev::lcs_length(a, b), lcs_brute(a, b));
  }
}

TEST(EvalProperty, ScoresAreBoundedAndIdentityIsOne) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 300; ++i) {
    auto a = fc::serialize_request(ts::random_request(rng));
    auto b = fc::serialize_request(ts::random_request(rng));
    for (double s : {ev::bleu(a, {b}), ev::rouge_n(a, b, 1).f1, ev::rouge_n(a, b, 2).f1, ev::rouge_l(a, b).f1}) {
      ASSERT_GE(s, 0.0);
      ASSERT_LE(s, 1.0);
    }
    ASSERT_EQ(ev::bleu(a, {a}), 1.0);
    ASSERT_EQ(ev::rouge_n(a, a, 1).f1, 1.0);
    ASSERT_EQ(ev::rouge_n(a, a, 2).f1, 1.0);
    ASSERT_EQ(ev::rouge_l(a, a).f1, 1.0);
  }
}

TEST(EvalProperty, CorruptionNeverRaisesScores) {
  // Replacing more reference tokens with fresh ones never increases any score.
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    auto ref = ev::tokenize(fc::serialize_request(ts::random_request(rng)));
    std::vector<std::size_t> order(ref.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    auto cand = ref;
    double prev_bleu = 1.0, prev_r1 = 1.0, prev_rl = 1.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      cand[order[k]] = "#" + std::to_string(k);
      double b = ev::bleu_from_stats(ev::bleu_stats(cand, {ref}));
      double r1 = ev::rouge_n(cand, ref, 1).f1;
      double rl = ev::rouge_l(cand, ref).f1;
      ASSERT_LE(b, prev_bleu + 1e-15);
      ASSERT_LE(r1, prev_r1 + 1e-15);
      ASSERT_LE(rl, prev_rl + 1e-15);
      prev_bleu = b;
      prev_r1 = r1;
      prev_rl = rl;
    }
  }
}

TEST(Eval, EvaluateAgentClosedLoopIsPerfect) {
  const auto& reg = *ts::seed_registry();
  auto rows = fc::synthesize_dataset(ts::seed_templates(), reg, 500, 77, fc::Date::ymd(2024, 7, 7));
  fc::AgentConfig cfg;
  auto rep = ev::evaluate_agent(rows, [&](std::string_view q) {
    return fc::serialize_request(fc::compile_query(q, reg, cfg).request);
  });
  EXPECT_EQ(rep.rows, 500u);
  EXPECT_EQ(rep.bleu, 1.0);
  EXPECT_EQ(rep.sentence_bleu, 1.0);
  EXPECT_EQ(rep.rouge1_f1, 1.0);
  EXPECT_EQ(rep.rouge2_f1, 1.0);
  EXPECT_EQ(rep.rougeL_f1, 1.0);
  EXPECT_EQ(rep.exact_match_rate, 1.0);
  EXPECT_TRUE(rep.per_row_failures.empty());
}

TEST(Eval, EvaluateAgentFailureModes) {
  auto rows = fc::synthesize_dataset(ts::seed_templates(), *ts::seed_registry(), 20, 1, fc::Date::ymd(2024, 7, 7));
  auto empty = ev::evaluate_agent(rows, [](std::string_view) { return std::string(); });
  EXPECT_EQ(empty.bleu, 0.0);
  EXPECT_EQ(empty.rouge1_f1, 0.0);
  EXPECT_EQ(empty.exact_match_rate, 0.0);
  EXPECT_EQ(empty.per_row_failures.size(), 20u);

  int calls = 0;
  auto flaky = ev::evaluate_agent(rows, [&](std::string_view q) -> std::string {
    if (++calls % 2) throw fc::TimeoutError("slow");
    return fc::serialize_request(fc::compile_query(q, *ts::seed_registry(), {}).request);
  });
  EXPECT_EQ(flaky.agent_errors, 10u);
  EXPECT_EQ(flaky.exact_match_rate, 0.5);
  EXPECT_EQ(flaky.per_row_failures.front().error, "slow");
  EXPECT_THROW(ev::evaluate_agent({}, [](std::string_view) { return std::string(); }), fc::Error);
}

TEST(Eval, ReferenceScoresReportedVerbatim) {
  EXPECT_EQ(ev::ReferenceScores::bleu, 0.9614);
  EXPECT_EQ(ev::ReferenceScores::rouge1_f1, 0.9774);
  EXPECT_EQ(ev::ReferenceScores::rouge2_f1, 0.9693);
  EXPECT_EQ(ev::ReferenceScores::rougeL_f1, 0.9771);
  auto rows = fc::synthesize_dataset(ts::seed_templates(), *ts::seed_registry(), 5, 1, fc::Date::ymd(2024, 7, 7));
  auto j = fc::json::to_json(ev::evaluate_agent(rows, [](std::string_view) { return std::string("x"); }));
  EXPECT_EQ(j["reference_scores"]["bleu"], 0.9614);
}
