#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "test_support.hpp"

namespace fc = fincontext;
namespace ts = testsupport;

namespace {

// httplib server on an ephemeral loopback port, stopped on destruction.
class LocalServer {
 public:
  httplib::Server server;

  void start() {
    port_ = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LocalServer() {
    server.stop();
    if (thread_.joinable()) thread_.join();
  }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }
  int port() const { return port_; }

 private:
  int port_ = 0;
  std::thread thread_;
};

// Agent endpoint replying with a fixed request_text, echoing the id.
void serve_agent(LocalServer& s, std::string reply, std::atomic<int>* hits = nullptr) {
  s.server.Post("/agent", [reply, hits](const httplib::Request& req, httplib::Response& res) {
    if (hits) ++*hits;
    auto in = nlohmann::json::parse(req.body);
    res.set_content(nlohmann::json{{"id", in["id"]}, {"request_text", reply}}.dump(), "application/json");
  });
}

fc::AgentConfig external(const std::string& url, int timeout_ms = 2000, int retries = 0) {
  fc::AgentConfig c;
  c.mode = fc::AgentMode::external;
  c.external_endpoint = url;
  c.timeout = std::chrono::milliseconds(timeout_ms);
  c.retries = retries;
  return c;
}

std::shared_ptr<fc::DataStore> fixture_store() {
  return std::shared_ptr<fc::DataStore>(fc::DataStore::open(ts::fixture_dir(), ts::seed_registry()));
}

fc::PipelineConfig config_at(fc::Date ref) {
  fc::PipelineConfig c;
  c.agent.reference_date = ref;
  return c;
}

}  // namespace

TEST(Pipeline, GoldenPromptEndToEnd) {
  const auto& ex = ts::worked_example();
  fc::Pipeline p(fixture_store(), config_at(ex.reference_date));
  auto res = p.handle_query(ex.query);
  EXPECT_EQ(res.request_string, ex.request);
  EXPECT_EQ(res.enriched.rendered, ts::read_file(ts::fixture_dir() / "prompt.txt"));
  EXPECT_EQ(res.news_ids, std::vector<std::string>{"news-1"});
  EXPECT_FALSE(res.answer);
  EXPECT_GE(res.latency.total_ms(), 0.0);
  auto j = fc::to_json(res);
  EXPECT_EQ(j["request_string"], ex.request);
  EXPECT_TRUE(j["unresolved"].empty());
}

TEST(Pipeline, ReferenceDateOverride) {
  const auto& ex = ts::worked_example();
  fc::Pipeline p(fixture_store(), {});
  fc::QueryOptions o;
  o.reference_date = ex.reference_date;
  EXPECT_EQ(p.handle_query(ex.query, o).request_string, ex.request);
}

TEST(Pipeline, CompileFailurePropagates) {
  fc::Pipeline p(fixture_store(), {});
  EXPECT_THROW(p.handle_query("Explain gibberish of nothing"), fc::CompileError);
}

TEST(Pipeline, MissingDataDegradesToUnresolved) {
  fc::Pipeline p(fixture_store(), config_at(fc::Date::ymd(2023, 7, 7)));
  auto res = p.handle_query("What was the EBITDA of Apple in 2022?");
  EXPECT_FALSE(res.table.unresolved.empty());
  EXPECT_NE(res.enriched.rendered.find("Apple Inc. : data unavailable (no data available)"), std::string::npos);
}

TEST(ExternalAgent, EndpointParsing) {
  auto e = fc::split_endpoint("http://127.0.0.1:8080/v1/agent");
  EXPECT_EQ(e.base, "http://127.0.0.1:8080");
  EXPECT_EQ(e.path, "/v1/agent");
  EXPECT_EQ(fc::split_endpoint("http://host").path, "/");
  EXPECT_THROW(fc::split_endpoint("https://host/x"), fc::ConfigError);
  EXPECT_THROW(fc::split_endpoint("host/x"), fc::ConfigError);
  EXPECT_THROW(fc::ExternalAgentClient(fc::AgentConfig{}), fc::ConfigError);
}

TEST(ExternalAgent, ValidReplyIsUsedVerbatim) {
  LocalServer s;
  serve_agent(s, "(Apple Inc.) (Revenue) (latest)");
  s.start();
  fc::ExternalAgentClient client(external(s.url("/agent")));
  EXPECT_EQ(client.request("anything"), "(Apple Inc.) (Revenue) (latest)");
  auto r = fc::run_agent("anything", *ts::seed_registry(), client.config(), &client);
  EXPECT_FALSE(r.fell_back);
  EXPECT_EQ(fc::serialize_request(r.request), "(Apple Inc.) (Revenue) (latest)");
}

TEST(ExternalAgent, UnparseableReplyFallsBackToRules) {
  LocalServer s;
  serve_agent(s, "not a request");
  s.start();
  auto cfg = external(s.url("/agent"));
  cfg.reference_date = ts::worked_example().reference_date;
  fc::ExternalAgentClient client(cfg);
  auto r = fc::run_agent(ts::worked_example().query, *ts::seed_registry(), cfg, &client);
  EXPECT_TRUE(r.fell_back);
  EXPECT_NE(r.fallback_reason.find("grammar"), std::string::npos) << r.fallback_reason;
  EXPECT_EQ(fc::serialize_request(r.request), ts::worked_example().request);
}

TEST(ExternalAgent, UnreachableEndpointIsTransportError) {
  LocalServer probe;  // bind then release a port so nothing listens on it
  probe.start();
  int port = probe.port();
  probe.server.stop();
  fc::ExternalAgentClient client(external("http://127.0.0.1:" + std::to_string(port) + "/agent", 500));
  EXPECT_THROW(client.request("q"), fc::TransportError);
}

TEST(ExternalAgent, SlowEndpointTimesOut) {
  LocalServer s;
  s.server.Post("/agent", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content("{}", "application/json");
  });
  s.start();
  fc::ExternalAgentClient client(external(s.url("/agent"), 150));
  EXPECT_THROW(client.request("q"), fc::TimeoutError);
}

TEST(ExternalAgent, RetriesServerErrorsOnly) {
  LocalServer s;
  std::atomic<int> hits{0};
  s.server.Post("/e500", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
  });
  std::atomic<int> hits404{0};
  s.server.Post("/e404", [&](const httplib::Request&, httplib::Response& res) {
    ++hits404;
    res.status = 404;
  });
  s.start();
  fc::ExternalAgentClient c500(external(s.url("/e500"), 1000, 2));
  try {
    c500.request("q");
    ADD_FAILURE();
  } catch (const fc::StatusError& e) {
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(hits, 3);
  fc::ExternalAgentClient c404(external(s.url("/e404"), 1000, 2));
  EXPECT_THROW(c404.request("q"), fc::StatusError);
  EXPECT_EQ(hits404, 1);
}

TEST(ExternalAgent, MismatchedCorrelationIdRejected) {
  LocalServer s;
  s.server.Post("/agent", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"x({"id": "other", "request_text": "(A) (B) (latest)"})x", "application/json");
  });
  s.server.Post("/noreq", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"text": "x"})", "application/json");
  });
  s.start();
  fc::ExternalAgentClient a(external(s.url("/agent")));
  EXPECT_THROW(a.request("q"), fc::TransportError);
  fc::ExternalAgentClient b(external(s.url("/noreq")));
  EXPECT_THROW(b.request("q"), fc::TransportError);
}

TEST(ExternalAgent, ConcurrentRequestsKeepIdsApart) {
  LocalServer s;
  std::atomic<int> hits{0};
  serve_agent(s, "(A) (B) (latest)", &hits);
  s.start();
  fc::ExternalAgentClient client(external(s.url("/agent")), 4);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&] {
      if (client.request("q") == "(A) (B) (latest)") ++ok;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok, 12);
  EXPECT_EQ(hits, 12);
}

TEST(Pipeline, ExternalAgentRequestWithUnknownSectorDegrades) {
  LocalServer s;
  serve_agent(s, "(Atlantis Companies) (Revenue) (latest)");
  s.start();
  fc::PipelineConfig cfg;
  cfg.agent = external(s.url("/agent"));
  fc::Pipeline p(fixture_store(), cfg);
  auto res = p.handle_query("How is Atlantis doing?");
  EXPECT_FALSE(res.agent_fallback);
  ASSERT_EQ(res.table.unresolved.size(), 1u);
  EXPECT_EQ(res.table.unresolved[0].entity, "request");
  EXPECT_NE(res.table.unresolved[0].reason.find("Atlantis"), std::string::npos);
}

TEST(Pipeline, ForwardingToDownstreamModel) {
  LocalServer llm;
  std::string seen_prompt;
  llm.server.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen_prompt = nlohmann::json::parse(req.body)["prompt"];
    res.set_content(R"({"answer": "Hold."})", "application/json");
  });
  llm.start();
  auto cfg = config_at(ts::worked_example().reference_date);
  cfg.forward.endpoint = llm.url("/generate");
  fc::Pipeline p(fixture_store(), cfg);
  fc::QueryOptions o;
  o.forward = true;
  auto res = p.handle_query(ts::worked_example().query, o);
  ASSERT_TRUE(res.answer);
  EXPECT_EQ(*res.answer, "Hold.");
  EXPECT_EQ(seen_prompt, res.enriched.rendered);

  cfg.forward.endpoint = "http://127.0.0.1:1/generate";
  cfg.forward.timeout = std::chrono::milliseconds(300);
  fc::Pipeline offline(fixture_store(), cfg);
  auto res2 = offline.handle_query(ts::worked_example().query, o);
  EXPECT_FALSE(res2.answer);
  ASSERT_TRUE(res2.forward_error);
  EXPECT_EQ(res2.enriched.rendered, res.enriched.rendered);
}

TEST(Http, RoutesServeThePipeline) {
  fc::Pipeline p(fixture_store(), config_at(ts::worked_example().reference_date));
  LocalServer s;
  fc::install_routes(s.server, p, 2);
  s.start();
  httplib::Client cli("127.0.0.1", s.port());

  auto health = cli.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(nlohmann::json::parse(health->body)["news"], 1);

  auto q = cli.Post("/query", nlohmann::json{{"query", ts::worked_example().query}}.dump(), "application/json");
  ASSERT_TRUE(q);
  EXPECT_EQ(q->status, 200);
  auto qj = nlohmann::json::parse(q->body);
  EXPECT_EQ(qj["request_string"], ts::worked_example().request);
  EXPECT_EQ(qj["enriched_query"], ts::read_file(ts::fixture_dir() / "prompt.txt"));

  auto bad = cli.Post("/agent/compile", R"({"query": "Explain gibberish of nothing"})", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(nlohmann::json::parse(bad->body)["error"], "no-metric-found");

  auto compiled = cli.Post("/agent/compile",
                           nlohmann::json{{"query", ts::worked_example().query}, {"reference_date", "7/7/2023"}}.dump(),
                           "application/json");
  ASSERT_TRUE(compiled);
  EXPECT_EQ(compiled->status, 200);
  EXPECT_EQ(nlohmann::json::parse(compiled->body)["request"]["request_string"], ts::worked_example().request);

  auto fetch = cli.Post("/data/fetch", nlohmann::json{{"request_string", ts::worked_example().request}}.dump(),
                        "application/json");
  ASSERT_TRUE(fetch);
  EXPECT_EQ(fetch->status, 200);

  auto render = cli.Post("/context/render",
                         nlohmann::json{{"query", ts::worked_example().query},
                                        {"request_string", ts::worked_example().request}}
                             .dump(),
                         "application/json");
  ASSERT_TRUE(render);
  EXPECT_EQ(render->status, 200);
  EXPECT_NE(nlohmann::json::parse(render->body)["enriched_query"].get<std::string>().find("Financial Data:"),
            std::string::npos);

  auto grammar = cli.Post("/data/fetch", R"x({"request_string": "(A)"})x", "application/json");
  ASSERT_TRUE(grammar);
  EXPECT_EQ(grammar->status, 400);
  EXPECT_EQ(nlohmann::json::parse(grammar->body)["error"], "grammar");

  auto junk = cli.Post("/query", "{not json", "application/json");
  ASSERT_TRUE(junk);
  EXPECT_EQ(junk->status, 400);
  auto missing = cli.Post("/query", "{}", "application/json");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 400);
}
