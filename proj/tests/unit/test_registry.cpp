#include <gtest/gtest.h>

#include "test_support.hpp"

namespace fc = fincontext;
namespace ts = testsupport;

namespace {

std::string registry_error(std::string_view yaml) {
  try {
    fc::Registry::parse(yaml);
  } catch (const fc::RegistryError& e) {
    return e.what();
  }
  ADD_FAILURE() << "accepted:\n" << yaml;
  return {};
}

bool contains(const std::string& hay, std::string_view needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST(Registry, SeedLoadsWithCoverage) {
  const auto& reg = *ts::seed_registry();
  EXPECT_GE(reg.metrics().size(), 60u);
  EXPECT_GE(reg.companies().size(), 40u);
  EXPECT_GE(reg.sectors().size(), 8u);
  EXPECT_GE(ts::seed_templates().size(), 50u);
  for (const auto& t : ts::seed_templates()) EXPECT_NO_THROW(reg.check_template(t)) << t.template_id;
}

TEST(Registry, SeedCoversReferenceVocabulary) {
  const auto& reg = *ts::seed_registry();
  // Every metric and entity named in the worked requests resolves.
  for (const auto& row : ts::reference_rows()) {
    auto r = fc::parse_request(row.request);
    for (const auto& m : r.metrics) EXPECT_NE(reg.find_metric(m), nullptr) << m;
    for (const auto& e : r.entities) {
      if (e.kind == fc::EntityKind::sector) {
        EXPECT_TRUE(reg.find_sector(e.name)) << e.name;
      } else {
        EXPECT_NE(reg.find_company(e.name), nullptr) << e.name;
      }
    }
  }
}

TEST(Registry, AliasResolutionIsCaseAndPunctuationInsensitive) {
  const auto& reg = *ts::seed_registry();
  EXPECT_EQ(reg.resolve_metric("acid test ratio").canonical_name, "Quick Ratio");
  EXPECT_EQ(reg.resolve_metric("EVA").canonical_name, "Economic Value Added");
  EXPECT_EQ(reg.resolve_metric("ROWC").canonical_name, "Return on Working Capital");
  EXPECT_EQ(reg.resolve_company("pepsi").canonical_name, "PepsiCo, Inc.");
  EXPECT_EQ(reg.resolve_company("Halliburton co.").canonical_name, "Halliburton Co.");
  EXPECT_EQ(reg.resolve_company("adobe").canonical_name, "Adobe Inc.");
  EXPECT_THROW(reg.resolve_metric("not a metric"), fc::UnknownMetricError);
  EXPECT_THROW(reg.resolve_company("Nonexistent Corp"), fc::UnknownEntityError);
}

TEST(Registry, RelatedMetricsAreCanonicalAndOrdered) {
  const auto& reg = *ts::seed_registry();
  const auto& ni = reg.resolve_metric("Net Income");
  EXPECT_EQ(ni.related_metrics,
            (std::vector<std::string>{"Total Revenue", "Cost of Revenue", "Operating Expense",
                                      "Depreciation and Amortization", "Interest Expense"}));
  for (const auto& m : reg.metrics()) {
    for (const auto& r : m.related_metrics) {
      const auto* spec = reg.find_metric(r);
      ASSERT_NE(spec, nullptr);
      EXPECT_EQ(spec->canonical_name, r);
    }
  }
}

TEST(Registry, ResolveEntityForms) {
  const auto& reg = *ts::seed_registry();
  EXPECT_EQ(reg.resolve_entity("Adobe"), fc::EntitySelector::company("Adobe Inc."));
  EXPECT_EQ(reg.resolve_entity("adobe peers"), fc::EntitySelector::peers_of("Adobe Inc."));
  EXPECT_EQ(reg.resolve_entity("Adobe and its competitors"),
            fc::EntitySelector::peers_of("Adobe Inc."));
  EXPECT_EQ(reg.resolve_entity("the energy sector"), fc::EntitySelector::sector("Energy"));
  EXPECT_EQ(reg.resolve_entity("other companies in the energy sector"),
            fc::EntitySelector::sector("Energy"));
  EXPECT_THROW(reg.resolve_entity("widgets"), fc::UnknownEntityError);
}

TEST(Registry, SectorExpansion) {
  const auto& reg = *ts::seed_registry();
  auto energy = reg.companies_in_sector("Energy");
  EXPECT_NE(std::find(energy.begin(), energy.end(), "Halliburton Co."), energy.end());
  EXPECT_EQ(reg.companies_in_sector("All").size(), reg.companies().size());
  EXPECT_EQ(reg.find_sector("all"), std::optional<std::string>("All"));
}

constexpr const char* kMinimal = R"(metrics:
  - name: Revenue
    frequency: quarterly
    unit: USD
companies:
  - name: Acme Corp
    sector: Industrials
)";

TEST(Registry, MinimalParses) {
  auto reg = fc::Registry::parse(kMinimal);
  EXPECT_TRUE(reg.metrics().front().trackable);
  EXPECT_EQ(reg.sectors(), std::vector<std::string>{"Industrials"});
}

TEST(Registry, DuplicateAliasNamesBothOwners) {
  auto msg = registry_error(R"(metrics:
  - name: Revenue
    aliases: [sales]
    frequency: quarterly
    unit: USD
  - name: Sales Revenue
    aliases: [Sales]
    frequency: quarterly
    unit: USD
)");
  EXPECT_TRUE(contains(msg, "duplicate alias 'Sales'")) << msg;
  EXPECT_TRUE(contains(msg, "metric 'Revenue'")) << msg;
  EXPECT_TRUE(contains(msg, "metric 'Sales Revenue'")) << msg;
  EXPECT_TRUE(contains(msg, "line 6")) << msg;
}

TEST(Registry, AliasSharedAcrossKindsRejected) {
  auto msg = registry_error(R"(metrics:
  - name: Apple
    frequency: quarterly
    unit: USD
companies:
  - name: Apple Inc.
    aliases: [apple]
    sector: Technology
)");
  EXPECT_TRUE(contains(msg, "duplicate alias")) << msg;
}

TEST(Registry, ClosureViolations) {
  auto msg = registry_error(R"(metrics:
  - name: Revenue
    related: [Missing Metric]
    frequency: quarterly
    unit: USD
)");
  EXPECT_TRUE(contains(msg, "closure violation")) << msg;
  EXPECT_TRUE(contains(msg, "Missing Metric")) << msg;

  msg = registry_error(R"(metrics:
  - name: Revenue
    frequency: quarterly
    unit: USD
companies:
  - name: Acme Corp
    sector: Industrials
    peers: [Ghost Inc]
)");
  EXPECT_TRUE(contains(msg, "closure violation")) << msg;
  EXPECT_TRUE(contains(msg, "Ghost Inc")) << msg;

  msg = registry_error(R"(metrics:
  - name: Revenue
    related: [revenue]
    frequency: quarterly
    unit: USD
)");
  EXPECT_TRUE(contains(msg, "itself")) << msg;
}

TEST(Registry, NameConstraints) {
  EXPECT_TRUE(contains(registry_error("metrics:\n  - name: \"A; B\"\n    frequency: daily\n    unit: x\n"),
                       "contains ';'"));
  EXPECT_TRUE(contains(registry_error("metrics:\n  - name: \"A (B\"\n    frequency: daily\n    unit: x\n"),
                       "unbalanced"));
  EXPECT_TRUE(contains(registry_error(std::string(kMinimal) + "  - name: Foo Peers\n    sector: Energy\n"),
                       "reserved selector suffix"));
  EXPECT_TRUE(contains(registry_error(std::string(kMinimal) + "  - name: Foo\n    sector: All\n"),
                       "reserved"));
  EXPECT_TRUE(contains(registry_error("metrics: []\n"), "at least one metric"));
}

TEST(Registry, SchemaErrorsCarryLineNumbers) {
  auto msg = registry_error("metrics:\n  - name: Revenue\n    frequency: hourly\n    unit: x\n");
  EXPECT_TRUE(contains(msg, "unknown frequency 'hourly'")) << msg;
  EXPECT_TRUE(contains(msg, "line 3")) << msg;

  msg = registry_error("metrics:\n  - name: Revenue\n    frequency: daily\n    unit: x\n    colour: red\n");
  EXPECT_TRUE(contains(msg, "unknown field 'colour'")) << msg;
  EXPECT_TRUE(contains(msg, "line 5")) << msg;

  msg = registry_error("metrics:\n  - name: Revenue\n    unit: x\n");
  EXPECT_TRUE(contains(msg, "missing field 'frequency'")) << msg;

  msg = registry_error("metrics: [\n");
  EXPECT_TRUE(contains(msg, "parse error")) << msg;
}

TEST(Registry, TemplateLint) {
  auto reg = fc::Registry::parse(kMinimal);
  fc::QueryTemplate ok{"ok", "What was the [metrics] of [company] [date]?", fc::MetricConstraint::any, 3};
  EXPECT_NO_THROW(reg.check_template(ok));
  fc::QueryTemplate literal{"bad", "Compare the revenue of [company] [date].", fc::MetricConstraint::any, 3};
  try {
    reg.check_template(literal);
    ADD_FAILURE();
  } catch (const fc::RegistryError& e) {
    EXPECT_TRUE(contains(e.what(), "registry phrase 'revenue'")) << e.what();
  }
  fc::QueryTemplate unknown{"unk", "Show [metric] for [company].", fc::MetricConstraint::any, 3};
  EXPECT_THROW(reg.check_template(unknown), fc::RegistryError);
  fc::QueryTemplate none{"none", "Nothing to fill.", fc::MetricConstraint::any, 3};
  EXPECT_THROW(reg.check_template(none), fc::RegistryError);

  EXPECT_THROW(fc::Registry::parse_templates("templates:\n  - id: a\n    pattern: \"[company]\"\n"
                                             "  - id: a\n    pattern: \"[metrics]\"\n"),
               fc::RegistryError);
}

TEST(Registry, LoadReportsPath) {
  try {
    fc::Registry::load("/nonexistent/registry.yaml");
    ADD_FAILURE();
  } catch (const fc::RegistryError& e) {
    EXPECT_TRUE(contains(e.what(), "/nonexistent/registry.yaml")) << e.what();
  }
}
