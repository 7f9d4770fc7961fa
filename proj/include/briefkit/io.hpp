#pragma once

// jsonl artifact formats shared by the pipeline tools: briefings, gold
// records, raw model outputs, predictions, and cleaning stats. all writers
// are deterministic so artifacts diff cleanly between runs.

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "briefkit/corpus.hpp"
#include "briefkit/errors.hpp"
#include "briefkit/eval.hpp"
#include "briefkit/schema.hpp"

namespace briefkit::io {

class FileError : public Error {
 public:
  FileError(const std::string& path, const std::string& detail)
      : Error(path + ": " + detail) {}
};

class LineError : public Error {
 public:
  LineError(std::size_t line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + detail) {}
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError(path, "cannot open for writing");
  out << content;
  if (!out) throw FileError(path, "write failed");
}

// one json document per line; blank lines are tolerated and skipped.
inline std::vector<nlohmann::json> parse_jsonl(std::istream& in) {
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw LineError(line_no, "not valid json");
    out.push_back(std::move(j));
  }
  return out;
}

// ---- briefings ----

inline std::string briefing_line(const corpus::BriefingRecord& r) {
  nlohmann::ordered_json j{
      {"record_id", r.record_id},
      {"source_post_id", r.source_post_id},
      {"text", r.text},
      {"cjk_count", r.cjk_count},
  };
  return j.dump();
}

inline corpus::BriefingRecord briefing_from_json(const nlohmann::json& j) {
  corpus::BriefingRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  r.source_post_id = j.at("source_post_id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.cjk_count = j.at("cjk_count").get<std::size_t>();
  r.dropped = false;
  r.drop_reason = corpus::DropReason::kNone;
  return r;
}

inline std::vector<corpus::BriefingRecord> briefings_from_jsonl(
    std::istream& in) {
  std::vector<corpus::BriefingRecord> out;
  std::size_t line_no = 0;
  for (const auto& j : parse_jsonl(in)) {
    ++line_no;
    try {
      out.push_back(briefing_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw LineError(line_no, e.what());
    }
  }
  return out;
}

// ---- gold records ----

// the record body reuses the canonical serialization byte for byte
inline std::string gold_line(const schema::GoldRecord& g) {
  nlohmann::ordered_json id = g.record_id;
  return "{\"record_id\":" + id.dump() +
         ",\"record\":" + schema::canonical_json(g.record) + "}";
}

inline schema::GoldRecord gold_from_json(const nlohmann::json& j) {
  schema::GoldRecord g;
  g.record_id = j.at("record_id").get<std::string>();
  g.record = schema::record_from_json(j.at("record"));
  auto rep = schema::validate(g.record);
  if (!rep.violations.empty()) {
    std::string detail = "invalid gold record " + g.record_id + ":";
    for (const auto& v : rep.violations) detail += " " + v.path;
    throw schema::SchemaViolation(detail);
  }
  return g;
}

inline std::vector<schema::GoldRecord> golds_from_jsonl(std::istream& in) {
  std::vector<schema::GoldRecord> out;
  std::size_t line_no = 0;
  for (const auto& j : parse_jsonl(in)) {
    ++line_no;
    try {
      out.push_back(gold_from_json(j));
    } catch (const LineError&) {
      throw;
    } catch (const std::exception& e) {
      throw LineError(line_no, e.what());
    }
  }
  return out;
}

// ---- raw model outputs ----

struct RawOutput {
  std::string record_id;
  std::string output;
  bool operator==(const RawOutput&) const = default;
};

inline std::string raw_output_line(const RawOutput& r) {
  nlohmann::ordered_json j{{"record_id", r.record_id},
                           {"output", r.output}};
  return j.dump();
}

inline std::vector<RawOutput> raw_outputs_from_jsonl(std::istream& in) {
  std::vector<RawOutput> out;
  std::size_t line_no = 0;
  for (const auto& j : parse_jsonl(in)) {
    ++line_no;
    try {
      out.push_back({j.at("record_id").get<std::string>(),
                     j.at("output").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw LineError(line_no, e.what());
    }
  }
  return out;
}

// ---- predictions ----

// a scored prediction: the lenient parse of one raw output, flattened to
// field paths for inspection
inline std::string prediction_line(const eval::PredRecord& p) {
  nlohmann::ordered_json j;
  j["record_id"] = p.record_id;
  if (p.parsed.error.has_value())
    j["error"] = *p.parsed.error;
  else
    j["error"] = nullptr;

  nlohmann::ordered_json fields = nlohmann::ordered_json::object();
  const auto& r = p.parsed.record;
  auto put = [&](schema::Field f, nlohmann::ordered_json v) {
    if (p.parsed.present_fields.count(f) != 0)
      fields[schema::field_path(f)] = std::move(v);
  };
  auto opt = [](const auto& o) -> nlohmann::ordered_json {
    if (o.has_value()) return *o;
    return nullptr;
  };
  using F = schema::Field;
  put(F::kProvince, opt(r.province));
  put(F::kCity, opt(r.city));
  put(F::kTypeCodes, opt(r.type_codes));
  put(F::kIllegalMeans, opt(r.illegal_means));
  put(F::kCybercrime, opt(r.cybercrime));
  put(F::kCompletedIllegalAct, opt(r.completed_illegal_act));
  put(F::kCaseClosure, opt(r.case_closure));
  put(F::kPoliceHandling, opt(r.police_handling));
  put(F::kDeathsExistence, opt(r.deaths_existence));
  put(F::kDeathsNumber, opt(r.deaths_number));
  put(F::kInjuriesExistence, opt(r.injuries_existence));
  put(F::kInjuriesNumber, opt(r.injuries_number));
  put(F::kEconomicLossesExistence, opt(r.economic_losses_existence));
  if (p.parsed.present_fields.count(F::kEconomicLossesAmount) != 0) {
    if (r.economic_losses_amount_cents.has_value()) {
      fields[schema::field_path(F::kEconomicLossesAmount)] =
          nlohmann::ordered_json::parse(schema::detail::amount_literal(
              *r.economic_losses_amount_cents));
    } else {
      fields[schema::field_path(F::kEconomicLossesAmount)] = nullptr;
    }
  }
  put(F::kSocialImpact, opt(r.social_impact));
  j["fields"] = std::move(fields);

  nlohmann::ordered_json absent = nlohmann::ordered_json::array();
  for (schema::Field f : schema::all_fields()) {
    if (p.parsed.present_fields.count(f) == 0)
      absent.push_back(schema::field_path(f));
  }
  j["absent_fields"] = std::move(absent);

  nlohmann::ordered_json repairs = nlohmann::ordered_json::array();
  for (auto rk : p.parsed.repairs)
    repairs.push_back(outparse::repair_kind_name(rk));
  j["repairs"] = std::move(repairs);
  j["warnings"] = p.parsed.warnings;

  nlohmann::ordered_json violations = nlohmann::ordered_json::array();
  for (const auto& v : p.parsed.violations) {
    violations.push_back(nlohmann::ordered_json{
        {"path", v.path}, {"kind", v.kind}, {"detail", v.detail}});
  }
  j["violations"] = std::move(violations);
  return j.dump();
}

// ---- cleaning stats ----

inline std::string cleaning_stats_json(const corpus::CleaningStats& s,
                                       std::size_t excluded_count) {
  nlohmann::ordered_json j{
      {"input_count", s.input_count},
      {"excluded_count", excluded_count},
      {"url_stripped_count", s.url_stripped_count},
      {"short_dropped_count", s.short_dropped_count},
      {"duplicate_dropped_count", s.duplicate_dropped_count},
      {"output_count", s.output_count},
  };
  return j.dump(2) + "\n";
}

}  // namespace briefkit::io
