// fincontext command-line tool.
//
// Settings resolve as: command-line flag, then FINCONTEXT_* environment
// variable, then the TOML/INI file given by --config.
// Failures print one JSON line {"error": kind, "message": text} on stderr.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "fincontext/fincontext.hpp"

namespace fc = fincontext;

namespace {

struct Settings {
  std::string registry;
  std::string templates;
  std::string store;
  std::string reference_date = "7/7/2024";
  std::string agent_endpoint;
  int agent_timeout_ms = 5000;
  int agent_retries = 0;
  std::string llm_endpoint;
  std::string log_level = "warn";
};

[[noreturn]] void fail(const std::string& kind, const std::string& message, int code = 1) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
  std::exit(code);
}

std::shared_ptr<const fc::Registry> load_registry(const Settings& s) {
  if (s.registry.empty()) {
    throw fc::ConfigError("no registry configured (--registry or FINCONTEXT_REGISTRY)");
  }
  return std::make_shared<const fc::Registry>(fc::Registry::load(s.registry));
}

std::shared_ptr<fc::DataStore> open_store(const Settings& s,
                                          std::shared_ptr<const fc::Registry> reg) {
  if (s.store.empty()) throw fc::ConfigError("no store configured (--store or FINCONTEXT_STORE)");
  return fc::DataStore::open(s.store, std::move(reg));
}

fc::AgentConfig agent_config(const Settings& s) {
  fc::AgentConfig cfg;
  cfg.reference_date = fc::parse_date_token(s.reference_date);
  cfg.timeout = std::chrono::milliseconds(s.agent_timeout_ms);
  cfg.retries = s.agent_retries;
  if (!s.agent_endpoint.empty()) {
    cfg.mode = fc::AgentMode::external;
    cfg.external_endpoint = s.agent_endpoint;
  }
  cfg.validate();
  return cfg;
}

fc::PipelineConfig pipeline_config(const Settings& s) {
  fc::PipelineConfig cfg;
  cfg.agent = agent_config(s);
  if (!s.llm_endpoint.empty()) cfg.forward.endpoint = s.llm_endpoint;
  return cfg;
}

void print(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << std::endl; }

// CLI11 reads the config file before the environment, so an env variable
// would lose to the file. Dropping file entries whose env variable is set
// restores flag > env > file.
class EnvFirstConfig : public CLI::ConfigTOML {
 public:
  explicit EnvFirstConfig(const CLI::App& app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    std::erase_if(items, [this](const CLI::ConfigItem& item) {
      const CLI::App* scope = &app_;
      for (const auto& parent : item.parents) {
        scope = scope->get_subcommand_no_throw(parent);
        if (!scope) return false;
      }
      const CLI::Option* opt = scope->get_option_no_throw("--" + item.name);
      return opt && !opt->get_envname().empty() && std::getenv(opt->get_envname().c_str());
    });
    return items;
  }

 private:
  const CLI::App& app_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured financial context retrieval for language-model queries"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI settings file");
  app.config_formatter(std::make_shared<EnvFirstConfig>(app));
  Settings s;
  app.add_option("--registry", s.registry, "Registry YAML")->envname("FINCONTEXT_REGISTRY");
  app.add_option("--templates", s.templates, "Templates YAML")->envname("FINCONTEXT_TEMPLATES");
  app.add_option("--store", s.store, "Store directory")->envname("FINCONTEXT_STORE");
  app.add_option("--reference-date", s.reference_date, "Anchor for relative dates, d/m/yyyy")
      ->envname("FINCONTEXT_REFERENCE_DATE");
  app.add_option("--agent-endpoint", s.agent_endpoint, "External agent URL")
      ->envname("FINCONTEXT_AGENT_ENDPOINT");
  app.add_option("--agent-timeout-ms", s.agent_timeout_ms)->envname("FINCONTEXT_AGENT_TIMEOUT_MS");
  app.add_option("--agent-retries", s.agent_retries)->envname("FINCONTEXT_AGENT_RETRIES");
  app.add_option("--llm-endpoint", s.llm_endpoint, "Downstream LLM URL for forwarding")
      ->envname("FINCONTEXT_LLM_ENDPOINT");
  app.add_option("--log-level", s.log_level)
      ->envname("FINCONTEXT_LOG_LEVEL")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  // synth
  auto* synth = app.add_subcommand("synth", "Synthesize a (query, request) dataset");
  std::size_t n = 1000;
  std::uint64_t seed = 42;
  std::string out_path, holdout_path;
  double holdout_fraction = 0.2;
  synth->add_option("--n", n, "Rows to produce")->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed);
  synth->add_option("--out", out_path, "Output JSONL")->required();
  synth->add_option("--holdout", holdout_path, "Write the trailing fraction here");
  synth->add_option("--holdout-fraction", holdout_fraction)->check(CLI::Range(0.0, 1.0));

  // ingestion
  std::string input_file;
  auto* ingest_ts = app.add_subcommand("ingest-ts", "Ingest a time-series CSV into the store");
  ingest_ts->add_option("--file", input_file)->required()->check(CLI::ExistingFile);
  auto* ingest_news = app.add_subcommand("ingest-news", "Ingest a news JSONL file into the store");
  ingest_news->add_option("--file", input_file)->required()->check(CLI::ExistingFile);

  // parse / fetch / render / query
  std::string request_text, query_text;
  auto* parse = app.add_subcommand("parse", "Parse a structured request, print its JSON form");
  parse->add_option("--request", request_text)->required();
  auto* fetch = app.add_subcommand("fetch", "Fetch the retrieval table for a request");
  fetch->add_option("--request", request_text)->required();
  auto* render = app.add_subcommand("render", "Render the enriched prompt for a request");
  render->add_option("--request", request_text)->required();
  render->add_option("--text", query_text, "Original query")->required();
  std::size_t k_news = 5;
  render->add_option("--k-news", k_news);
  auto* query = app.add_subcommand("query", "Compile a query; print its request string");
  query->add_option("--text", query_text)->required();
  bool pipeline = false, forward = false;
  query->add_flag("--pipeline", pipeline, "Run the full pipeline and print its JSON trace");
  query->add_flag("--forward", forward, "Forward the enriched prompt to --llm-endpoint");
  query->add_option("--k-news", k_news);

  // eval
  auto* eval = app.add_subcommand("eval", "Score an agent against a dataset");
  std::string dataset_path, report_path, agent_kind = "rule";
  eval->add_option("--dataset", dataset_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--agent", agent_kind)->check(CLI::IsMember({"rule", "external"}));
  eval->add_option("--report", report_path, "Write the JSON report here");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t workers = 4;
  serve->add_option("--host", host)->envname("FINCONTEXT_HOST");
  serve->add_option("--port", port)->envname("FINCONTEXT_PORT")->check(CLI::Range(1, 65535));
  serve->add_option("--workers", workers)->envname("FINCONTEXT_WORKERS")->check(CLI::Range(1, 256));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what(), 2);
  }

  auto logger = spdlog::stderr_color_mt("fincontext");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(s.log_level));

  try {
    if (*parse) {
      print(fc::json::to_json(fc::parse_request(request_text)));
    } else if (*query && !pipeline) {
      auto cfg = agent_config(s);
      auto reg = load_registry(s);
      std::unique_ptr<fc::ExternalAgentClient> ext;
      if (cfg.mode == fc::AgentMode::external) ext = std::make_unique<fc::ExternalAgentClient>(cfg);
      auto res = fc::run_agent(query_text, *reg, cfg, ext.get());
      std::cout << fc::serialize_request(res.request) << std::endl;
    } else if (*query) {
      auto store = open_store(s, load_registry(s));
      fc::Pipeline p(store, pipeline_config(s));
      fc::QueryOptions o;
      o.forward = forward;
      o.k_news = k_news;
      print(fc::to_json(p.handle_query(query_text, o)));
    } else if (*synth) {
      auto reg = load_registry(s);
      if (s.templates.empty()) throw fc::ConfigError("no templates configured (--templates)");
      auto templates = fc::Registry::load_templates(s.templates);
      auto rows = fc::synthesize_dataset(templates, *reg, n, seed,
                                         fc::parse_date_token(s.reference_date));
      std::size_t held = holdout_path.empty()
                             ? 0
                             : static_cast<std::size_t>(static_cast<double>(n) * holdout_fraction);
      std::vector<fc::DatasetRow> train(rows.begin(), rows.end() - static_cast<std::ptrdiff_t>(held));
      std::vector<fc::DatasetRow> test(rows.end() - static_cast<std::ptrdiff_t>(held), rows.end());
      std::ofstream out(out_path);
      if (!out) throw fc::IngestError("cannot write " + out_path);
      fc::json::write_dataset(out, train);
      if (held) {
        std::ofstream hold(holdout_path);
        if (!hold) throw fc::IngestError("cannot write " + holdout_path);
        fc::json::write_dataset(hold, test);
      }
      print({{"rows", train.size()}, {"holdout_rows", test.size()}, {"seed", seed}});
    } else if (*ingest_ts || *ingest_news) {
      auto store = open_store(s, load_registry(s));
      std::ifstream in(input_file);
      auto rep = *ingest_ts ? store->ingest_timeseries(fc::read_timeseries_csv(in))
                            : store->ingest_news(fc::read_news_jsonl(in));
      store->save(s.store);
      print({{"inserted", rep.inserted},
             {"replaced", rep.replaced},
             {"rejected", rep.rejected},
             {"rejections", rep.rejections}});
    } else if (*fetch) {
      auto store = open_store(s, load_registry(s));
      print(fc::json::to_json(store->fetch_table(fc::parse_request(request_text))));
    } else if (*render) {
      auto store = open_store(s, load_registry(s));
      auto snap = store->snapshot();
      auto table = store->fetch_table(fc::parse_request(request_text), *snap);
      std::vector<fc::NewsItem> news;
      for (auto& m : fc::DataStore::match_news(*snap, query_text, k_news)) {
        if (m.score > 0.0) news.push_back(std::move(m.item));
      }
      std::cout << fc::build_enriched_query(query_text, table, news).rendered << std::endl;
    } else if (*eval) {
      auto reg = load_registry(s);
      std::ifstream in(dataset_path);
      auto rows = fc::json::read_dataset(in);
      auto cfg = agent_config(s);
      if (agent_kind == "external" && cfg.mode != fc::AgentMode::external) {
        throw fc::ConfigError("--agent external requires --agent-endpoint");
      }
      std::unique_ptr<fc::ExternalAgentClient> ext;
      if (agent_kind == "external") ext = std::make_unique<fc::ExternalAgentClient>(cfg);
      auto report = fc::eval::evaluate_agent(rows, [&](std::string_view q) {
        if (ext) return ext->request(q);
        fc::AgentConfig rule = cfg;
        rule.mode = fc::AgentMode::rule_based;
        rule.external_endpoint.reset();
        return fc::serialize_request(fc::compile_query(q, *reg, rule).request);
      });
      auto j = fc::json::to_json(report);
      if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw fc::IngestError("cannot write " + report_path);
        out << j.dump(2) << '\n';
      }
      j.erase("per_row_failures");
      j["failures"] = report.per_row_failures.size();
      print(j);
    } else if (*serve) {
      auto store = open_store(s, load_registry(s));
      fc::Pipeline p(store, pipeline_config(s));
      httplib::Server server;
      fc::install_routes(server, p, workers);
      spdlog::info("listening on {}:{} with {} workers", host, port, workers);
      if (!server.listen(host, port)) throw fc::TransportError("cannot bind " + host + ":" + std::to_string(port));
    }
  } catch (const fc::Error& e) {
    fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    fail("internal", e.what());
  }
  return 0;
}
