#pragma once

// Client for an externally hosted request-compiling model.
// Protocol: POST <endpoint> with {"id": <correlation id>, "query": <text>},
// reply {"id": <same id>, "request_text": <raw request string>}.

#include <atomic>
#include <chrono>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

#include "fincontext/agent.hpp"
#include "fincontext/errors.hpp"
#include "fincontext/request_grammar.hpp"

namespace fincontext {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // starts with '/'
};

inline Endpoint split_endpoint(std::string_view url) {
  auto scheme = url.find("://");
  if (scheme == std::string_view::npos || url.substr(0, scheme) != "http") {
    throw ConfigError("endpoint must be an http:// URL: " + std::string(url));
  }
  auto slash = url.find('/', scheme + 3);
  if (slash == scheme + 3) throw ConfigError("endpoint has no host: " + std::string(url));
  Endpoint e;
  e.base = std::string(url.substr(0, slash));
  e.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
  return e;
}

class ExternalAgentClient {
 public:
  static constexpr std::ptrdiff_t kMaxInFlight = 64;

  ExternalAgentClient(AgentConfig config, std::ptrdiff_t max_in_flight = 8)
      : config_(std::move(config)), slots_(max_in_flight) {
    config_.validate();
    if (config_.mode != AgentMode::external) {
      throw ConfigError("external client requires mode=external");
    }
    if (max_in_flight < 1 || max_in_flight > kMaxInFlight) {
      throw ConfigError("max in-flight requests must be in [1, 64]");
    }
    endpoint_ = split_endpoint(*config_.external_endpoint);
  }

  const AgentConfig& config() const { return config_; }

  // Returns the model's request string unmodified. Retries timeouts,
  // transport failures and 5xx replies up to config.retries extra times.
  std::string request(std::string_view query) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<kMaxInFlight>& s;
      ~Release() { s.release(); }
    } release{slots_};
    std::string id = std::to_string(next_id_.fetch_add(1));
    for (int attempt = 0;; ++attempt) {
      try {
        return attempt_once(id, query);
      } catch (const StatusError& e) {
        if (e.status() < 500 || attempt >= config_.retries) throw;
      } catch (const TimeoutError&) {
        if (attempt >= config_.retries) throw;
      } catch (const TransportError&) {
        if (attempt >= config_.retries) throw;
      }
      spdlog::warn("external agent: attempt {} failed, retrying", attempt + 1);
    }
  }

 private:
  std::string attempt_once(const std::string& id, std::string_view query) {
    httplib::Client cli(endpoint_.base);
    auto ms = config_.timeout.count();
    auto sec = static_cast<time_t>(ms / 1000);
    auto usec = static_cast<time_t>((ms % 1000) * 1000);
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    nlohmann::json body = {{"id", id}, {"query", std::string(query)}};
    auto res = cli.Post(endpoint_.path, body.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
        throw TimeoutError("no reply from " + endpoint_.base + " within " + std::to_string(ms) +
                           " ms");
      }
      throw TransportError(httplib::to_string(err) + " (" + endpoint_.base + ")");
    }
    if (res->status < 200 || res->status >= 300) {
      throw StatusError(res->status, res->body.substr(0, 200));
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed reply: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("request_text") ||
        !reply["request_text"].is_string()) {
      throw TransportError("reply lacks a request_text string");
    }
    if (reply.contains("id") && reply["id"] != id) {
      throw TransportError("reply correlation id does not match request");
    }
    return reply["request_text"].get<std::string>();
  }

  AgentConfig config_;
  Endpoint endpoint_;
  std::counting_semaphore<kMaxInFlight> slots_;
  std::atomic<std::uint64_t> next_id_{1};
};

struct AgentResult {
  StructuredDataRequest request;
  std::string raw;        // what the chosen agent emitted
  bool fell_back = false;  // external reply unusable, rule-based result used
  std::string fallback_reason;
};

// External agent with rule-based fallback on any client or parse failure.
// With no external client configured this is the rule-based agent.
inline AgentResult run_agent(std::string_view query, const Registry& registry,
                             const AgentConfig& config, ExternalAgentClient* external) {
  AgentResult out;
  if (external) {
    try {
      out.raw = external->request(query);
      out.request = parse_request(out.raw);
      return out;
    } catch (const Error& e) {
      out.fell_back = true;
      out.fallback_reason = e.kind() + ": " + e.what();
      spdlog::warn("external agent unusable, falling back to rule-based: {}", out.fallback_reason);
    }
  }
  AgentConfig rule = config;
  rule.mode = AgentMode::rule_based;
  rule.external_endpoint.reset();
  out.request = compile_query(query, registry, rule).request;
  out.raw = serialize_request(out.request);
  return out;
}

}  // namespace fincontext
