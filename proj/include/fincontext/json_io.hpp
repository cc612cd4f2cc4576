#pragma once

// JSON mirrors of the domain types used by the CLI, the dataset files and
// the HTTP service. Dates are d/m/yyyy strings everywhere.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fincontext/agent.hpp"
#include "fincontext/context_builder.hpp"
#include "fincontext/data_module.hpp"
#include "fincontext/eval.hpp"
#include "fincontext/query_synthesis.hpp"
#include "fincontext/request_grammar.hpp"

namespace fincontext::json {

using nlohmann::json;
using nlohmann::ordered_json;

inline std::string_view kind_name(EntityKind k) {
  switch (k) {
    case EntityKind::peers_of: return "peers_of";
    case EntityKind::sector: return "sector";
    default: return "company";
  }
}

inline EntityKind parse_kind(const std::string& s) {
  if (s == "company") return EntityKind::company;
  if (s == "peers_of") return EntityKind::peers_of;
  if (s == "sector") return EntityKind::sector;
  throw Error("invalid-json", "unknown entity kind '" + s + "'");
}

inline ordered_json to_json(const EntitySelector& e) {
  return {{"kind", kind_name(e.kind)}, {"name", e.name}};
}

inline ordered_json to_json(const RangeSpec& r) {
  if (const auto* d = std::get_if<DateRange>(&r)) {
    return {{"start", format_date(d->start)}, {"end", format_date(d->end)}};
  }
  return std::string(kLatestToken);
}

inline ordered_json to_json(const StructuredDataRequest& r) {
  ordered_json j;
  j["entities"] = ordered_json::array();
  for (const auto& e : r.entities) j["entities"].push_back(to_json(e));
  j["metrics"] = r.metrics;
  j["ranges"] = ordered_json::array();
  for (const auto& x : r.ranges) j["ranges"].push_back(to_json(x));
  j["request_string"] = serialize_request(r);
  return j;
}

inline ordered_json to_json(const RequiredData& rd) {
  ordered_json j;
  j["companies"] = ordered_json::array();
  for (const auto& e : rd.companies) j["companies"].push_back(to_json(e));
  j["metrics"] = ordered_json::array();
  for (const auto& m : rd.metrics) {
    j["metrics"].push_back({{"primary", m.primary}, {"related", m.related}});
  }
  j["date_phrase"] = rd.date_phrase;
  return j;
}

inline RequiredData required_data_from_json(const json& j) {
  RequiredData rd;
  for (const auto& e : j.at("companies")) {
    rd.companies.push_back({parse_kind(e.at("kind").get<std::string>()),
                            e.at("name").get<std::string>()});
  }
  for (const auto& m : j.at("metrics")) {
    rd.metrics.push_back({m.at("primary").get<std::string>(),
                          m.at("related").get<std::vector<std::string>>()});
  }
  rd.date_phrase = j.at("date_phrase").get<std::string>();
  return rd;
}

inline ordered_json to_json(const DatasetRow& row) {
  return {{"query", row.query},
          {"required_data", to_json(row.required_data)},
          {"structured_request", row.structured_request},
          {"template_id", row.template_id},
          {"seed", row.seed},
          {"reference_date", format_date(row.reference_date)}};
}

inline DatasetRow row_from_json(const json& j) {
  DatasetRow row;
  row.query = j.at("query").get<std::string>();
  row.required_data = required_data_from_json(j.at("required_data"));
  row.structured_request = j.at("structured_request").get<std::string>();
  row.template_id = j.value("template_id", std::string());
  row.seed = j.value("seed", std::uint64_t{0});
  row.reference_date = parse_date_token(j.at("reference_date").get<std::string>());
  return row;
}

inline void write_dataset(std::ostream& out, const std::vector<DatasetRow>& rows) {
  for (const auto& r : rows) out << to_json(r).dump() << '\n';
}

inline std::vector<DatasetRow> read_dataset(std::istream& in) {
  std::vector<DatasetRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      rows.push_back(row_from_json(json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(std::string("invalid dataset row: ") + e.what(), line_no);
    } catch (const Error& e) {
      throw IngestError(e.what(), line_no);
    }
  }
  return rows;
}

inline ordered_json to_json(const UnresolvedEntry& u) {
  return {{"entity", u.entity}, {"metric", u.metric}, {"reason", u.reason}};
}

inline ordered_json to_json(const RetrievalTable& t) {
  ordered_json j;
  j["companies"] = t.companies;
  j["metrics"] = t.metrics;
  j["rows"] = ordered_json::array();
  for (const auto& r : t.rows) {
    ordered_json periods = ordered_json::array();
    for (const auto& p : r.periods) periods.push_back(format_range(p));
    j["rows"].push_back({{"company", r.company},
                         {"metric", r.metric},
                         {"values", r.values},
                         {"periods", periods},
                         {"resolved_range", format_range(r.resolved_range)},
                         {"frequency", to_string(r.frequency)},
                         {"unit", r.unit},
                         {"substituted", r.substituted}});
  }
  j["unresolved"] = ordered_json::array();
  for (const auto& u : t.unresolved) j["unresolved"].push_back(to_json(u));
  return j;
}

inline ordered_json to_json(const eval::EvalReport& r) {
  ordered_json j;
  j["rows"] = r.rows;
  j["bleu"] = r.bleu;
  j["sentence_bleu"] = r.sentence_bleu;
  j["rouge1_f1"] = r.rouge1_f1;
  j["rouge2_f1"] = r.rouge2_f1;
  j["rougeL_f1"] = r.rougeL_f1;
  j["exact_match_rate"] = r.exact_match_rate;
  j["agent_errors"] = r.agent_errors;
  j["per_row_failures"] = ordered_json::array();
  for (const auto& f : r.per_row_failures) {
    ordered_json e = {{"row", f.row}, {"label", f.label}, {"prediction", f.prediction}};
    if (!f.error.empty()) e["error"] = f.error;
    j["per_row_failures"].push_back(std::move(e));
  }
  j["reference_scores"] = {{"bleu", eval::ReferenceScores::bleu},
                           {"rouge1_f1", eval::ReferenceScores::rouge1_f1},
                           {"rouge2_f1", eval::ReferenceScores::rouge2_f1},
                           {"rougeL_f1", eval::ReferenceScores::rougeL_f1},
                           {"note", "finetuned-model scores; not reproducible in-repo"}};
  return j;
}

inline ordered_json error_json(const std::exception& e) {
  const auto* fe = dynamic_cast<const Error*>(&e);
  return {{"error", fe ? fe->kind() : std::string("internal")}, {"message", e.what()}};
}

}  // namespace fincontext::json
