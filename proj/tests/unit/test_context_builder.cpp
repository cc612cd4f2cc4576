#include <gtest/gtest.h>

#include "test_support.hpp"

namespace fc = fincontext;
namespace ts = testsupport;

namespace {

fc::Date d(int y, unsigned m, unsigned day) { return fc::Date::ymd(y, m, day); }

std::unique_ptr<fc::DataStore> fixture_store() {
  return fc::DataStore::open(ts::fixture_dir(), ts::seed_registry());
}

fc::NewsItem item(std::string id, std::string headline, std::string body = "") {
  return {std::move(id), fc::parse_timestamp("1/1/2024"), std::move(headline), std::move(body), {}};
}

}  // namespace

TEST(Context, GoldenPromptFromFixtureStore) {
  auto store = fixture_store();
  const auto& ex = ts::worked_example();
  auto table = store->fetch_table(fc::parse_request(ex.request));
  EXPECT_TRUE(table.unresolved.empty());
  std::vector<fc::NewsItem> news;
  for (const auto& e : store->snapshot()->news()) news.push_back(e->item);
  auto eq = fc::build_enriched_query(ex.query, table, news);
  EXPECT_EQ(eq.rendered, ts::read_file(ts::fixture_dir() / "prompt.txt"));
  EXPECT_EQ(eq.news_ids, std::vector<std::string>{"news-1"});
  EXPECT_EQ(eq.rendered, eq.preamble + eq.table_text + eq.news_text + "Financial Query:\n" + eq.query);
}

TEST(Context, EmptySectionsAreOmitted) {
  auto eq = fc::build_enriched_query("What now?", fc::RetrievalTable{}, {});
  EXPECT_EQ(eq.rendered, std::string(fc::kDefaultPreamble) + "\n\nFinancial Query:\nWhat now?");
  EXPECT_TRUE(eq.table_text.empty());
  EXPECT_TRUE(eq.news_text.empty());
  EXPECT_THROW(fc::build_enriched_query("  \n", fc::RetrievalTable{}, {}), fc::Error);
}

TEST(Context, CustomPreambleAndMultiLineQuery) {
  fc::RenderOptions o;
  o.preamble = "";
  auto eq = fc::build_enriched_query("line one\nline two", fc::RetrievalTable{}, {item("n", "Head", "Body  text")}, o);
  EXPECT_EQ(eq.rendered, "News: Head: Body text\n\nFinancial Query:\nline one\nline two");
}

TEST(Context, UnresolvedEntriesRender) {
  fc::RetrievalTable t;
  t.companies = {"Apple Inc.", "Microsoft Corporation"};
  t.metrics = {"Revenue", "EBITDA"};
  fc::TableRow row;
  row.company = "Apple Inc.";
  row.metric = "Revenue";
  row.values = {1, 2};
  row.periods = {{d(2023, 1, 1), d(2023, 3, 31)}, {d(2023, 4, 1), d(2023, 6, 30)}};
  row.resolved_range = {d(2023, 1, 1), d(2023, 6, 30)};
  row.unit = "USD";
  t.rows = {row};
  t.unresolved = {{"Microsoft Corporation", "Revenue", "no data available"},
                  {"Apple Inc.", "EBITDA", "no data available"},
                  {"Microsoft Corporation", "EBITDA", "no data available"},
                  {"Apple Inc. Peers", "", "no peers registered"}};
  EXPECT_EQ(fc::render_table(t),
            "Revenue (USD) (1/1/2023 - 30/6/2023) (Quarterly):\n"
            "Apple Inc. : 1, 2\n"
            "Microsoft Corporation : data unavailable (no data available)\n\n"
            "EBITDA:\n"
            "Apple Inc. : data unavailable (no data available)\n"
            "Microsoft Corporation : data unavailable (no data available)\n\n"
            "Apple Inc. Peers : data unavailable (no peers registered)");
}

TEST(Context, DifferentResolvedRangesSplitBlocks) {
  auto store = std::make_shared<fc::DataStore>(ts::seed_registry());
  store->ingest_timeseries({{"Apple Inc.", "Revenue", d(2023, 1, 1), d(2023, 3, 31), 1, ""},
                            {"Microsoft Corporation", "Revenue", d(2022, 10, 1), d(2022, 12, 31), 2, ""}});
  auto t = store->fetch_table(fc::parse_request("(Apple Inc.; Microsoft Corporation) (Revenue) (latest)"));
  EXPECT_EQ(fc::render_table(t),
            "Revenue (in thousands) (1/1/2023 - 31/3/2023) (Quarterly):\nApple Inc. : 1\n\n"
            "Revenue (in thousands) (1/10/2022 - 31/12/2022) (Quarterly):\nMicrosoft Corporation : 2");
}

TEST(Context, NewsBudgetDropsLowestRankedOnly) {
  auto store = fixture_store();
  const auto& ex = ts::worked_example();
  auto table = store->fetch_table(fc::parse_request(ex.request));
  std::vector<fc::NewsItem> news = {item("n1", "First headline"), item("n2", "Second headline"),
                                    item("n3", "Third headline")};
  auto full = fc::build_enriched_query(ex.query, table, news);
  ASSERT_EQ(full.news_ids.size(), 3u);

  // Below the fixed sections the budget cannot be met, since only news may go.
  const std::size_t fixed = full.rendered.size() - full.news_text.size();
  for (std::size_t budget = full.rendered.size(); budget + 60 > full.rendered.size(); --budget) {
    fc::RenderOptions o;
    o.max_chars = budget;
    auto eq = fc::build_enriched_query(ex.query, table, news, o);
    EXPECT_LE(eq.rendered.size(), std::max(budget, fixed));
    EXPECT_EQ(eq.table_text, full.table_text);  // table bytes never change
    for (std::size_t i = 0; i < eq.news_ids.size(); ++i) EXPECT_EQ(eq.news_ids[i], full.news_ids[i]);
  }
  fc::RenderOptions tiny;
  tiny.max_chars = 10;  // below the fixed sections: news dropped, rest kept
  auto eq = fc::build_enriched_query(ex.query, table, news, tiny);
  EXPECT_TRUE(eq.news_ids.empty());
  EXPECT_EQ(eq.table_text, full.table_text);
}

TEST(ContextProperty, TableFidelity) {
  // Rendering then re-reading every value line recovers the exact values.
  std::mt19937_64 rng(5);
  const auto& reg = *ts::seed_registry();
  for (int trial = 0; trial < 200; ++trial) {
    fc::RetrievalTable t;
    std::size_t nc = 1 + rng() % 4, nm = 1 + rng() % 3;
    for (std::size_t c = 0; c < nc; ++c) t.companies.push_back(reg.companies()[(trial + c * 7) % reg.companies().size()].canonical_name);
    std::sort(t.companies.begin(), t.companies.end());
    t.companies.erase(std::unique(t.companies.begin(), t.companies.end()), t.companies.end());
    for (std::size_t m = 0; m < nm; ++m) t.metrics.push_back(reg.metrics()[(trial + m * 11) % reg.metrics().size()].canonical_name);
    std::sort(t.metrics.begin(), t.metrics.end());
    t.metrics.erase(std::unique(t.metrics.begin(), t.metrics.end()), t.metrics.end());
    std::map<std::pair<std::string, std::string>, std::vector<double>> truth;
    for (const auto& m : t.metrics) {
      for (const auto& c : t.companies) {
        fc::TableRow r;
        r.company = c;
        r.metric = m;
        r.unit = "u";
        std::size_t nv = 1 + rng() % 5;
        for (std::size_t k = 0; k < nv; ++k) {
          double v = std::uniform_real_distribution<double>(-1e9, 1e9)(rng);
          if (rng() % 3 == 0) v = std::round(v);
          r.values.push_back(v);
        }
        r.resolved_range = {d(2020, 1, 1), d(2020, 3, 31)};
        truth[{m, c}] = r.values;
        t.rows.push_back(r);
      }
    }
    auto text = fc::render_table(t);
    std::istringstream in(text);
    std::string line, metric;
    std::size_t seen = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line.back() == ':') {
        metric = line.substr(0, line.find(" (u)"));
        continue;
      }
      auto sep = line.find(" : ");
      ASSERT_NE(sep, std::string::npos) << line;
      std::vector<double> values;
      for (const auto& v : fc::text::split(line.substr(sep + 3), ',')) values.push_back(fc::parse_value(v));
      ASSERT_EQ(values, (truth[{metric, line.substr(0, sep)}])) << line;
      ++seen;
    }
    EXPECT_EQ(seen, t.rows.size());
  }
}

TEST(ContextProperty, RenderingIsDeterministic) {
  auto store = fixture_store();
  const auto& ex = ts::worked_example();
  auto table = store->fetch_table(fc::parse_request(ex.request));
  auto a = fc::build_enriched_query(ex.query, table, {}).rendered;
  for (int i = 0; i < 20; ++i) EXPECT_EQ(fc::build_enriched_query(ex.query, table, {}).rendered, a);
}
