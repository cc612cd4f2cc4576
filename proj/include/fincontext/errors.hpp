#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fincontext {

// Base for every error thrown by the library. `kind()` is a stable
// machine-readable tag used by the CLI and the HTTP service.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class RegistryError : public Error {
 public:
  RegistryError(const std::string& message, std::size_t line = 0)
      : Error("registry", line ? "line " + std::to_string(line) + ": " + message
                               : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnknownMetricError : public Error {
 public:
  explicit UnknownMetricError(std::string surface)
      : Error("unknown-metric", "unknown metric: \"" + surface + "\""),
        surface_(std::move(surface)) {}

  const std::string& surface() const noexcept { return surface_; }

 private:
  std::string surface_;
};

class UnknownEntityError : public Error {
 public:
  explicit UnknownEntityError(std::string surface)
      : Error("unknown-entity", "unknown entity: \"" + surface + "\""),
        surface_(std::move(surface)) {}

  const std::string& surface() const noexcept { return surface_; }

 private:
  std::string surface_;
};

class DateError : public Error {
 public:
  enum class Reason { format, calendar };

  DateError(Reason reason, const std::string& message)
      : Error(reason == Reason::format ? "date-format" : "date-calendar", message),
        reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

// Structured Data Request grammar violation. `group` names the offending
// group ("entity", "metric", "date-range" or "request") and `offset` is the
// byte offset into the input where the problem was detected.
class GrammarError : public Error {
 public:
  GrammarError(std::string group, std::size_t offset, const std::string& message)
      : Error("grammar", message + " (group: " + group + ", offset " +
                             std::to_string(offset) + ")"),
        group_(std::move(group)),
        offset_(offset) {}

  const std::string& group() const noexcept { return group_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string group_;
  std::size_t offset_;
};

class DatePhraseError : public Error {
 public:
  explicit DatePhraseError(const std::string& phrase)
      : Error("date-phrase", "unparseable date phrase: \"" + phrase + "\"") {}
};

class CompileError : public Error {
 public:
  enum class Reason { no_metric, no_entity, unsupported_mode };

  CompileError(Reason reason, std::string query)
      : Error(tag(reason), std::string(describe(reason)) + ": \"" + query + "\""),
        reason_(reason),
        query_(std::move(query)) {}

  Reason reason() const noexcept { return reason_; }
  const std::string& query() const noexcept { return query_; }

 private:
  static std::string tag(Reason r) {
    switch (r) {
      case Reason::no_metric: return "no-metric-found";
      case Reason::no_entity: return "no-entity-found";
      default: return "unsupported-mode";
    }
  }
  static const char* describe(Reason r) {
    switch (r) {
      case Reason::no_metric: return "no metric found in query";
      case Reason::no_entity: return "no entity found in query";
      default: return "rule-based compilation requires mode=rule_based";
    }
  }

  Reason reason_;
  std::string query_;
};

class SynthesisError : public Error {
 public:
  explicit SynthesisError(const std::string& message) : Error("synthesis", message) {}
};

class ArityError : public Error {
 public:
  explicit ArityError(const std::string& message) : Error("arity-mismatch", message) {}
};

class IngestError : public Error {
 public:
  IngestError(const std::string& message, std::size_t line = 0)
      : Error("ingest", line ? "line " + std::to_string(line) + ": " + message : message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

// External client failures. The three transport outcomes are distinct types
// so callers can react differently to each.
class TimeoutError : public Error {
 public:
  explicit TimeoutError(const std::string& message) : Error("timeout", message) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message) : Error("transport", message) {}
};

class StatusError : public Error {
 public:
  StatusError(int status, const std::string& message)
      : Error("status", "HTTP " + std::to_string(status) + ": " + message), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace fincontext
