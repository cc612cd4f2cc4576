#pragma once

// Structured Data Request wire format:
//
//   (Adobe Inc.; Adobe Inc. Peers) (Sales Revenue; Total Revenue) (1/9/2018 - 30/9/2018)
//
// Three parenthesized groups: entities, metrics, date ranges. Items inside a
// group are separated by "; ". Dates are day/month/year without padding, so
// 7/1/2024 is 7 January. A company's competitors render as "<Company> Peers",
// a sector as "<Sector> Companies". The reserved range item "latest" asks the
// data module for the most recent available period.
//
// Metric names may contain balanced parentheses ("Net operating profit after
// tax (NOPAT)"); groups are located by depth counting. Semicolons never occur
// inside names, which the registry loader enforces.

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fincontext/date.hpp"
#include "fincontext/errors.hpp"
#include "fincontext/text.hpp"

namespace fincontext {

enum class EntityKind { company, peers_of, sector };

inline constexpr std::string_view kPeersSuffix = " Peers";
inline constexpr std::string_view kSectorSuffix = " Companies";
inline constexpr std::string_view kAllSectors = "All";
inline constexpr std::string_view kLatestToken = "latest";

struct EntitySelector {
  EntityKind kind = EntityKind::company;
  std::string name;

  static EntitySelector company(std::string name) { return {EntityKind::company, std::move(name)}; }
  static EntitySelector peers_of(std::string name) { return {EntityKind::peers_of, std::move(name)}; }
  static EntitySelector sector(std::string name) { return {EntityKind::sector, std::move(name)}; }

  friend bool operator==(const EntitySelector&, const EntitySelector&) = default;
};

inline std::string to_string(const EntitySelector& e) {
  switch (e.kind) {
    case EntityKind::peers_of: return e.name + std::string(kPeersSuffix);
    case EntityKind::sector: return e.name + std::string(kSectorSuffix);
    default: return e.name;
  }
}

// Sentinel for a request without an explicit period.
struct LatestAvailable {
  friend bool operator==(const LatestAvailable&, const LatestAvailable&) = default;
};

using RangeSpec = std::variant<DateRange, LatestAvailable>;

inline bool is_latest(const RangeSpec& r) { return std::holds_alternative<LatestAvailable>(r); }

inline std::string to_string(const RangeSpec& r) {
  if (const auto* dr = std::get_if<DateRange>(&r)) return format_range(*dr);
  return std::string(kLatestToken);
}

struct StructuredDataRequest {
  std::vector<EntitySelector> entities;
  std::vector<std::string> metrics;  // duplicates permitted
  std::vector<RangeSpec> ranges;

  friend bool operator==(const StructuredDataRequest&, const StructuredDataRequest&) = default;
};

inline std::string serialize_request(const StructuredDataRequest& r) {
  std::string out = "(";
  for (std::size_t i = 0; i < r.entities.size(); ++i) {
    if (i) out += "; ";
    out += to_string(r.entities[i]);
  }
  out += ") (";
  for (std::size_t i = 0; i < r.metrics.size(); ++i) {
    if (i) out += "; ";
    out += r.metrics[i];
  }
  out += ") (";
  for (std::size_t i = 0; i < r.ranges.size(); ++i) {
    if (i) out += "; ";
    out += to_string(r.ranges[i]);
  }
  out += ")";
  return out;
}

namespace detail {

inline bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

struct Group {
  std::size_t open = 0;  // offset of '('
  std::string_view body;
};

struct Item {
  std::size_t offset = 0;
  std::string text;  // whitespace-collapsed
};

inline std::vector<Item> split_items(const Group& g, const char* group_name) {
  std::vector<Item> items;
  std::size_t start = 0;
  int depth = 0;
  auto flush = [&](std::size_t end) {
    std::string text = text::collapse_whitespace(g.body.substr(start, end - start));
    std::size_t offset = g.open + 1 + start;
    if (text.empty()) throw GrammarError(group_name, offset, "empty item in group");
    items.push_back({offset, std::move(text)});
  };
  for (std::size_t i = 0; i < g.body.size(); ++i) {
    char c = g.body[i];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ';' && depth == 0) {
      flush(i);
      start = i + 1;
    }
  }
  flush(g.body.size());
  return items;
}

inline EntitySelector parse_entity(const Item& item) {
  std::string_view t = item.text;
  if (text::ends_with(t, kPeersSuffix) && t.size() > kPeersSuffix.size()) {
    return EntitySelector::peers_of(std::string(t.substr(0, t.size() - kPeersSuffix.size())));
  }
  if (text::ends_with(t, kSectorSuffix) && t.size() > kSectorSuffix.size()) {
    return EntitySelector::sector(std::string(t.substr(0, t.size() - kSectorSuffix.size())));
  }
  return EntitySelector::company(std::string(t));
}

inline RangeSpec parse_range(const Item& item) {
  std::string_view t = item.text;
  if (t == kLatestToken) return LatestAvailable{};
  auto dash = t.find('-');
  if (dash == std::string_view::npos || t.find('-', dash + 1) != std::string_view::npos) {
    throw GrammarError("date-range", item.offset,
                       "expected \"d/m/yyyy - d/m/yyyy\", got \"" + item.text + "\"");
  }
  DateRange r;
  try {
    r.start = parse_date_token(text::trim(t.substr(0, dash)));
    r.end = parse_date_token(text::trim(t.substr(dash + 1)));
  } catch (const DateError& e) {
    throw GrammarError("date-range", item.offset, std::string("invalid date: ") + e.what());
  }
  if (r.end < r.start) {
    throw GrammarError("date-range", item.offset, "range start is after its end");
  }
  return r;
}

}  // namespace detail

// Accepts any whitespace (including newlines) between and inside groups.
inline StructuredDataRequest parse_request(std::string_view input) {
  static constexpr const char* kNames[] = {"entity", "metric", "date-range"};
  std::vector<detail::Group> groups;
  std::size_t i = 0;
  while (true) {
    while (i < input.size() && detail::is_ws(input[i])) ++i;
    if (i == input.size()) break;
    if (groups.size() == 3) {
      throw GrammarError("request", i, "unexpected text after date-range group");
    }
    const char* name = kNames[groups.size()];
    if (input[i] != '(') {
      throw GrammarError(name, i, std::string("expected '(' to open ") + name + " group");
    }
    std::size_t open = i;
    int depth = 0;
    std::size_t close = std::string_view::npos;
    for (std::size_t j = i; j < input.size(); ++j) {
      if (input[j] == '(') ++depth;
      if (input[j] == ')' && --depth == 0) {
        close = j;
        break;
      }
    }
    if (close == std::string_view::npos) {
      throw GrammarError(name, open, "unbalanced parentheses");
    }
    groups.push_back({open, input.substr(open + 1, close - open - 1)});
    i = close + 1;
  }
  if (groups.size() < 3) {
    throw GrammarError(kNames[groups.size()], input.size(),
                       std::string("missing ") + kNames[groups.size()] + " group");
  }
  for (std::size_t g = 0; g < 3; ++g) {
    if (text::trim(groups[g].body).empty()) {
      throw GrammarError(kNames[g], groups[g].open, std::string("empty ") + kNames[g] + " group");
    }
    int depth = 0;
    for (char c : groups[g].body) {
      if (c == '(') ++depth;
      if (c == ')' && --depth < 0) break;
    }
    if (depth != 0) throw GrammarError(kNames[g], groups[g].open, "unbalanced parentheses");
  }

  StructuredDataRequest r;
  for (const auto& item : detail::split_items(groups[0], kNames[0])) {
    r.entities.push_back(detail::parse_entity(item));
  }
  for (auto& item : detail::split_items(groups[1], kNames[1])) {
    r.metrics.push_back(std::move(item.text));
  }
  for (const auto& item : detail::split_items(groups[2], kNames[2])) {
    r.ranges.push_back(detail::parse_range(item));
  }
  return r;
}

}  // namespace fincontext
