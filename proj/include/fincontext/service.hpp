#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

#include "fincontext/agent.hpp"
#include "fincontext/context_builder.hpp"
#include "fincontext/data_module.hpp"
#include "fincontext/external_agent.hpp"
#include "fincontext/json_io.hpp"

namespace fincontext {

struct QueryOptions {
  bool forward = false;
  std::size_t k_news = 5;
  std::optional<Date> reference_date;  // overrides the agent config
  bool filter_news_by_entity = false;  // keep only items tagged with a requested company
};

struct LatencyBreakdown {
  double compile_ms = 0.0;
  double fetch_ms = 0.0;
  double match_news_ms = 0.0;
  double render_ms = 0.0;
  double forward_ms = 0.0;

  double total_ms() const { return compile_ms + fetch_ms + match_news_ms + render_ms + forward_ms; }
};

struct PipelineResult {
  std::string request_string;
  StructuredDataRequest request;
  EnrichedQuery enriched;
  RetrievalTable table;
  std::vector<std::string> news_ids;
  LatencyBreakdown latency;
  std::optional<std::string> answer;
  std::optional<std::string> forward_error;
  std::optional<std::string> agent_fallback;  // why the external agent was bypassed
};

// Downstream LLM endpoint: POST {"prompt": text} -> {"answer": text}.
struct ForwardConfig {
  std::optional<std::string> endpoint;
  std::chrono::milliseconds timeout{30000};
};

struct PipelineConfig {
  AgentConfig agent;
  RenderOptions render;
  ForwardConfig forward;
  SimilarityScorer scorer;  // empty selects the built-in lexical cosine
};

class Pipeline {
 public:
  Pipeline(std::shared_ptr<DataStore> store, PipelineConfig config)
      : store_(std::move(store)), config_(std::move(config)) {
    config_.agent.validate();
    if (config_.agent.mode == AgentMode::external) {
      external_ = std::make_unique<ExternalAgentClient>(config_.agent);
    }
  }

  const Registry& registry() const { return store_->registry(); }
  DataStore& store() { return *store_; }
  const PipelineConfig& config() const { return config_; }

  // Compile failures propagate; later stages degrade into unresolved
  // entries, an empty news section or a forwarding error.
  PipelineResult handle_query(std::string_view query, const QueryOptions& opts = {}) const {
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t) {
      return std::chrono::duration<double, std::milli>(clock::now() - t).count();
    };
    PipelineResult res;
    AgentConfig agent = config_.agent;
    if (opts.reference_date) agent.reference_date = *opts.reference_date;

    auto t = clock::now();
    auto compiled = run_agent(query, registry(), agent, external_.get());
    res.request = std::move(compiled.request);
    res.request_string = serialize_request(res.request);
    if (compiled.fell_back) res.agent_fallback = compiled.fallback_reason;
    res.latency.compile_ms = ms_since(t);

    auto snap = store_->snapshot();
    t = clock::now();
    try {
      res.table = store_->fetch_table(res.request, *snap);
    } catch (const Error& e) {
      spdlog::warn("fetch failed for {}: {}", res.request_string, e.what());
      res.table = {};
      res.table.unresolved.push_back({"request", "", e.what()});
    }
    res.latency.fetch_ms = ms_since(t);

    t = clock::now();
    std::vector<NewsItem> news;
    try {
      std::string news_query(query);
      for (const auto& e : res.request.entities) {
        if (e.kind != EntityKind::sector) news_query += " " + e.name;
      }
      std::vector<std::string> filter;
      if (opts.filter_news_by_entity) filter = res.table.companies;
      for (auto& n : DataStore::match_news(*snap, news_query, opts.k_news, config_.scorer, filter)) {
        if (n.score > 0.0) news.push_back(std::move(n.item));
      }
    } catch (const std::exception& e) {
      spdlog::warn("news matching failed: {}", e.what());
      news.clear();
    }
    res.latency.match_news_ms = ms_since(t);

    t = clock::now();
    res.enriched = build_enriched_query(query, res.table, news, config_.render);
    res.news_ids = res.enriched.news_ids;
    res.latency.render_ms = ms_since(t);

    if (opts.forward) {
      t = clock::now();
      try {
        res.answer = forward(res.enriched.rendered);
      } catch (const Error& e) {
        res.forward_error = e.kind() + ": " + e.what();
        spdlog::warn("forwarding failed: {}", *res.forward_error);
      }
      res.latency.forward_ms = ms_since(t);
    }
    return res;
  }

 private:
  std::string forward(const std::string& prompt) const {
    if (!config_.forward.endpoint) throw ConfigError("no downstream LLM endpoint configured");
    auto ep = split_endpoint(*config_.forward.endpoint);
    httplib::Client cli(ep.base);
    auto ms = config_.forward.timeout.count();
    cli.set_connection_timeout(static_cast<time_t>(ms / 1000), static_cast<time_t>(ms % 1000 * 1000));
    cli.set_read_timeout(static_cast<time_t>(ms / 1000), static_cast<time_t>(ms % 1000 * 1000));
    auto res = cli.Post(ep.path, nlohmann::json{{"prompt", prompt}}.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
        throw TimeoutError("downstream LLM did not reply in time");
      }
      throw TransportError(httplib::to_string(err) + " (" + ep.base + ")");
    }
    if (res->status < 200 || res->status >= 300) throw StatusError(res->status, res->body.substr(0, 200));
    try {
      return nlohmann::json::parse(res->body).at("answer").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed downstream reply: ") + e.what());
    }
  }

  std::shared_ptr<DataStore> store_;
  PipelineConfig config_;
  std::unique_ptr<ExternalAgentClient> external_;
};

inline nlohmann::ordered_json to_json(const PipelineResult& r) {
  nlohmann::ordered_json j;
  j["request_string"] = r.request_string;
  j["enriched_query"] = r.enriched.rendered;
  j["unresolved"] = nlohmann::ordered_json::array();
  for (const auto& u : r.table.unresolved) j["unresolved"].push_back(json::to_json(u));
  j["news_ids"] = r.news_ids;
  j["latency_ms"] = {{"compile", r.latency.compile_ms},
                     {"fetch", r.latency.fetch_ms},
                     {"match_news", r.latency.match_news_ms},
                     {"render", r.latency.render_ms},
                     {"forward", r.latency.forward_ms}};
  if (r.answer) j["answer"] = *r.answer;
  if (r.forward_error) j["forward_error"] = *r.forward_error;
  if (r.agent_fallback) j["agent_fallback"] = *r.agent_fallback;
  return j;
}

// ---------------------------------------------------------------------------
// HTTP surface

namespace detail {

inline void reply_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline std::string body_string(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string()) {
    throw Error("invalid-request", std::string("missing string field '") + field + "'");
  }
  return j[field].get<std::string>();
}

template <typename F>
void guarded(const httplib::Request& req, httplib::Response& res, F&& body) {
  try {
    nlohmann::json in = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
    if (!in.is_object()) throw Error("invalid-request", "body must be a JSON object");
    reply_json(res, 200, body(in));
  } catch (const nlohmann::json::exception& e) {
    reply_json(res, 400, {{"error", "invalid-json"}, {"message", e.what()}});
  } catch (const Error& e) {
    reply_json(res, 400, json::error_json(e));
  } catch (const std::exception& e) {
    spdlog::error("internal error on {}: {}", req.path, e.what());
    reply_json(res, 500, json::error_json(e));
  }
}

inline QueryOptions query_options(const nlohmann::json& in) {
  QueryOptions o;
  o.forward = in.value("forward", false);
  o.k_news = in.value("k_news", std::size_t{5});
  o.filter_news_by_entity = in.value("filter_news_by_entity", false);
  if (in.contains("reference_date")) {
    o.reference_date = parse_date_token(body_string(in, "reference_date"));
  }
  return o;
}

}  // namespace detail

// Registers the endpoints on `server` and sizes its worker pool.
inline void install_routes(httplib::Server& server, Pipeline& pipeline, std::size_t workers) {
  server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };

  server.Get("/health", [&pipeline](const httplib::Request&, httplib::Response& res) {
    auto snap = pipeline.store().snapshot();
    detail::reply_json(res, 200,
                       {{"status", "ok"},
                        {"observations", snap->observation_count()},
                        {"news", snap->news().size()}});
  });

  server.Post("/query", [&pipeline](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(req, res, [&](const nlohmann::json& in) {
      return to_json(pipeline.handle_query(detail::body_string(in, "query"),
                                           detail::query_options(in)));
    });
  });

  server.Post("/agent/compile", [&pipeline](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(req, res, [&](const nlohmann::json& in) {
      AgentConfig cfg = pipeline.config().agent;
      cfg.mode = AgentMode::rule_based;
      cfg.external_endpoint.reset();
      if (auto o = detail::query_options(in); o.reference_date) cfg.reference_date = *o.reference_date;
      auto c = compile_query(detail::body_string(in, "query"), pipeline.registry(), cfg);
      return nlohmann::ordered_json{{"required_data", json::to_json(c.required)},
                                    {"request", json::to_json(c.request)}};
    });
  });

  server.Post("/data/fetch", [&pipeline](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(req, res, [&](const nlohmann::json& in) {
      auto request = parse_request(detail::body_string(in, "request_string"));
      return json::to_json(pipeline.store().fetch_table(request));
    });
  });

  server.Post("/context/render", [&pipeline](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(req, res, [&](const nlohmann::json& in) {
      auto query = detail::body_string(in, "query");
      auto request = parse_request(detail::body_string(in, "request_string"));
      auto snap = pipeline.store().snapshot();
      auto table = pipeline.store().fetch_table(request, *snap);
      std::vector<NewsItem> news;
      for (auto& n : DataStore::match_news(*snap, query, in.value("k_news", std::size_t{5}),
                                           pipeline.config().scorer)) {
        if (n.score > 0.0) news.push_back(std::move(n.item));
      }
      auto eq = build_enriched_query(query, table, news, pipeline.config().render);
      nlohmann::ordered_json unresolved = nlohmann::ordered_json::array();
      for (const auto& u : table.unresolved) unresolved.push_back(json::to_json(u));
      return nlohmann::ordered_json{{"enriched_query", eq.rendered},
                                    {"request_string", serialize_request(request)},
                                    {"unresolved", unresolved},
                                    {"news_ids", eq.news_ids}};
    });
  });
}

}  // namespace fincontext
