#pragma once

// Prompt layout:
//
//   <preamble>
//
//   Financial Data:
//
//   Net Income (in thousands) (30/3/2023 - 29/6/2023) (Quarterly):
//   PepsiCo, Inc. : 1932000, 2748000
//   Coca-Cola Co : 3107000, 2547000
//
//   <next block>
//
//   News: <headline>[: <body>]
//   <headline>
//
//   Financial Query:
//   <query>
//
// No trailing newline. Empty sections are omitted.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fincontext/data_module.hpp"
#include "fincontext/errors.hpp"
#include "fincontext/text.hpp"

namespace fincontext {

inline constexpr std::string_view kDefaultPreamble =
    "You are an expert financial advisor. You will be provided with financial data and a "
    "financial query, and you have to answer the query based on the analysis of the data.";

struct EnrichedQuery {
  std::string preamble;    // includes its "\n\n" separator
  std::string table_text;  // "Financial Data:\n\n" + blocks + "\n\n", or empty
  std::string news_text;   // "News: " + items + "\n\n", or empty
  std::string query;
  std::string rendered;
  std::vector<std::string> news_ids;  // items kept after budgeting
};

struct RenderOptions {
  std::string preamble{kDefaultPreamble};
  std::size_t max_chars = 0;  // 0 disables the budget; only news is ever dropped
};

namespace detail {

struct Block {
  std::string metric;
  std::string header;
  std::vector<std::string> lines;
  bool has_range = false;
  DateRange range;
};

inline std::string block_header(const TableRow& r) {
  std::string h = r.metric;
  if (!r.unit.empty()) h += " (" + r.unit + ")";
  h += " (" + format_range(r.resolved_range) + ") (" + std::string(display_name(r.frequency)) +
       "):";
  return h;
}

inline std::string value_line(const TableRow& r) {
  std::string line = r.company + " : ";
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    if (i) line += ", ";
    line += format_value(r.values[i]);
  }
  return line;
}

inline std::string unavailable_line(const UnresolvedEntry& u) {
  return u.entity + " : data unavailable (" + u.reason + ")";
}

inline std::string news_line(const NewsItem& n) {
  std::string line = text::collapse_whitespace(n.headline);
  auto body = text::collapse_whitespace(n.body);
  if (!body.empty()) line += ": " + body;
  return line;
}

}  // namespace detail

// One block per (metric, resolved range), metrics in table order and
// companies in table order within a block. Unresolved pairs join the
// metric's first block; a metric with no data at all gets a bare
// "<Metric>:" header. Selector-level failures ("X Peers") form a final block.
inline std::string render_table(const RetrievalTable& table) {
  std::vector<detail::Block> blocks;
  for (const auto& metric : table.metrics) {
    std::size_t first = blocks.size();
    for (const auto& company : table.companies) {
      const TableRow* row = nullptr;
      for (const auto& r : table.rows) {
        if (r.metric == metric && r.company == company) {
          row = &r;
          break;
        }
      }
      if (row) {
        auto header = detail::block_header(*row);
        std::size_t b = first;
        while (b < blocks.size() && blocks[b].header != header) ++b;
        if (b == blocks.size()) {
          blocks.push_back({metric, header, {}, true, row->resolved_range});
        }
        blocks[b].lines.push_back(detail::value_line(*row));
        continue;
      }
      for (const auto& u : table.unresolved) {
        if (u.metric == metric && u.entity == company) {
          if (first == blocks.size()) blocks.push_back({metric, metric + ":", {}, false, {}});
          blocks[first].lines.push_back(detail::unavailable_line(u));
          break;
        }
      }
    }
  }
  detail::Block selectors;
  for (const auto& u : table.unresolved) {
    if (u.metric.empty()) selectors.lines.push_back(detail::unavailable_line(u));
  }
  if (!selectors.lines.empty()) blocks.push_back(std::move(selectors));

  std::string out;
  for (const auto& b : blocks) {
    if (!out.empty()) out += "\n\n";
    if (!b.header.empty()) out += b.header + "\n";
    out += text::join(b.lines, "\n");
  }
  return out;
}

inline EnrichedQuery build_enriched_query(std::string_view query, const RetrievalTable& table,
                                          const std::vector<NewsItem>& news,
                                          const RenderOptions& options = {}) {
  if (text::trim(query).empty()) throw Error("empty-query", "query must not be empty");
  EnrichedQuery eq;
  eq.query = std::string(query);
  if (!options.preamble.empty()) eq.preamble = options.preamble + "\n\n";
  if (auto blocks = render_table(table); !blocks.empty()) {
    eq.table_text = "Financial Data:\n\n" + blocks + "\n\n";
  }
  const std::string tail = "Financial Query:\n" + eq.query;
  std::size_t fixed = eq.preamble.size() + eq.table_text.size() + tail.size();

  std::vector<std::string> lines;
  for (const auto& n : news) lines.push_back(detail::news_line(n));
  auto news_size = [&](std::size_t count) {
    if (count == 0) return std::size_t{0};
    std::size_t s = 6 + 2;  // "News: " and the trailing separator
    for (std::size_t i = 0; i < count; ++i) s += lines[i].size() + (i ? 1 : 0);
    return s;
  };
  std::size_t keep = lines.size();
  // Items arrive best-first, so the lowest-ranked are dropped.
  while (options.max_chars && keep > 0 && fixed + news_size(keep) > options.max_chars) --keep;
  lines.resize(keep);
  for (std::size_t i = 0; i < keep; ++i) eq.news_ids.push_back(news[i].id);
  if (keep) eq.news_text = "News: " + text::join(lines, "\n") + "\n\n";

  eq.rendered = eq.preamble + eq.table_text + eq.news_text + tail;
  return eq;
}

}  // namespace fincontext
