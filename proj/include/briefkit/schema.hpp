#pragma once

// the 15-field structured record extracted from a police briefing, its
// validation rules, and the canonical JSON form used as the fine-tuning
// target and the evaluation gold string. the canonical form is byte-stable:
// fixed key order, no insignificant whitespace, type codes ascending.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "briefkit/errors.hpp"

namespace briefkit::schema {

class MalformedJson : public Error {
 public:
  explicit MalformedJson(const std::string& detail)
      : Error("malformed json: " + detail) {}
};

class SchemaViolation : public Error {
 public:
  explicit SchemaViolation(const std::string& detail)
      : Error("schema violation: " + detail) {}
};

class InvalidRecord : public Error {
 public:
  explicit InvalidRecord(const std::string& detail)
      : Error("invalid record: " + detail) {}
};

class UnknownTypeCode : public Error {
 public:
  explicit UnknownTypeCode(const std::string& code)
      : Error("unknown type code: " + code) {}
};

// case type coding table; codes are two-digit strings with leading zeros.
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 11>
    kTypeCodeTable = {{
        {"01", "Endangering national security"},
        {"02", "Endangering public safety"},
        {"03", "Economic and financial crimes"},
        {"04", "Infringement of personal rights"},
        {"05", "Infringement of property"},
        {"06", "Obstructing social management"},
        {"07", "Endangering national defense interests"},
        {"08", "Bribery and corruption"},
        {"09", "Dereliction of duty"},
        {"10", "Crimes committed by military personnel"},
        {"11", "Suicide"},
    }};

inline bool is_valid_type_code(std::string_view code) {
  for (const auto& [c, label] : kTypeCodeTable) {
    (void)label;
    if (c == code) return true;
  }
  return false;
}

inline std::string code_label(std::string_view code) {
  for (const auto& [c, label] : kTypeCodeTable) {
    if (c == code) return std::string(label);
  }
  throw UnknownTypeCode(std::string(code));
}

inline std::vector<std::string> all_type_codes() {
  std::vector<std::string> out;
  for (const auto& [c, label] : kTypeCodeTable) {
    (void)label;
    out.emplace_back(c);
  }
  return out;
}

struct CountedClaim {
  bool existence = false;
  long long number = 0;
  bool operator==(const CountedClaim&) const = default;
};

// money is held in cents so canonical serialization and equality are exact.
struct MoneyClaim {
  bool existence = false;
  long long amount_cents = 0;
  bool operator==(const MoneyClaim&) const = default;
};

struct Location {
  std::string province;
  std::string city;
  bool operator==(const Location&) const = default;
};

struct EventCharacteristics {
  std::set<std::string> type_codes;
  std::string illegal_means;
  bool cybercrime = false;
  bool completed_illegal_act = false;
  bool case_closure = false;
  std::string police_handling;
  bool operator==(const EventCharacteristics&) const = default;
};

struct ImpactAssessment {
  CountedClaim deaths;
  CountedClaim injuries;
  MoneyClaim economic_losses;
  bool social_impact = false;
  bool operator==(const ImpactAssessment&) const = default;
};

struct ExtractionRecord {
  Location location;
  EventCharacteristics event;
  ImpactAssessment impact;
  bool operator==(const ExtractionRecord&) const = default;
};

// a gold annotation is a record keyed by the briefing it labels.
struct GoldRecord {
  std::string record_id;
  ExtractionRecord record;
  bool operator==(const GoldRecord&) const = default;
};

// the 15 scored leaf fields.
enum class Field {
  kProvince,
  kCity,
  kTypeCodes,
  kIllegalMeans,
  kCybercrime,
  kCompletedIllegalAct,
  kCaseClosure,
  kPoliceHandling,
  kDeathsExistence,
  kDeathsNumber,
  kInjuriesExistence,
  kInjuriesNumber,
  kEconomicLossesExistence,
  kEconomicLossesAmount,
  kSocialImpact,
};

inline constexpr std::size_t kFieldCount = 15;

inline const std::array<Field, kFieldCount>& all_fields() {
  static const std::array<Field, kFieldCount> fields = {
      Field::kProvince,
      Field::kCity,
      Field::kTypeCodes,
      Field::kIllegalMeans,
      Field::kCybercrime,
      Field::kCompletedIllegalAct,
      Field::kCaseClosure,
      Field::kPoliceHandling,
      Field::kDeathsExistence,
      Field::kDeathsNumber,
      Field::kInjuriesExistence,
      Field::kInjuriesNumber,
      Field::kEconomicLossesExistence,
      Field::kEconomicLossesAmount,
      Field::kSocialImpact,
  };
  return fields;
}

inline std::string field_path(Field f) {
  switch (f) {
    case Field::kProvince: return "location.province";
    case Field::kCity: return "location.city";
    case Field::kTypeCodes: return "event.type_codes";
    case Field::kIllegalMeans: return "event.illegal_means";
    case Field::kCybercrime: return "event.cybercrime";
    case Field::kCompletedIllegalAct: return "event.completed_illegal_act";
    case Field::kCaseClosure: return "event.case_closure";
    case Field::kPoliceHandling: return "event.police_handling";
    case Field::kDeathsExistence: return "impact.deaths.existence";
    case Field::kDeathsNumber: return "impact.deaths.number";
    case Field::kInjuriesExistence: return "impact.injuries.existence";
    case Field::kInjuriesNumber: return "impact.injuries.number";
    case Field::kEconomicLossesExistence:
      return "impact.economic_losses.existence";
    case Field::kEconomicLossesAmount:
      return "impact.economic_losses.amount";
    case Field::kSocialImpact: return "impact.social_impact";
  }
  throw Error("unreachable field");
}

inline std::optional<Field> field_from_path(std::string_view path) {
  for (Field f : all_fields()) {
    if (field_path(f) == path) return f;
  }
  return std::nullopt;
}

struct Violation {
  std::string path;
  std::string kind;
  std::string detail;
  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<Violation> warnings;
  bool valid() const { return violations.empty(); }
};

inline ValidationReport validate(const ExtractionRecord& r) {
  ValidationReport rep;
  for (const auto& code : r.event.type_codes) {
    if (!is_valid_type_code(code)) {
      rep.violations.push_back(
          {"event.type_codes", "unknown_type_code", code});
    }
  }
  if (r.event.type_codes.empty()) {
    rep.warnings.push_back(
        {"event.type_codes", "empty_type_codes", "no case type assigned"});
  }
  auto check_counted = [&](const CountedClaim& c, const std::string& path) {
    if (c.number < 0) {
      rep.violations.push_back(
          {path + ".number", "negative_count", std::to_string(c.number)});
    }
    if (!c.existence && c.number > 0) {
      rep.violations.push_back({path, "existence_inconsistent",
                                "number > 0 while existence is false"});
    }
  };
  check_counted(r.impact.deaths, "impact.deaths");
  check_counted(r.impact.injuries, "impact.injuries");
  if (r.impact.economic_losses.amount_cents < 0) {
    rep.violations.push_back({"impact.economic_losses.amount",
                              "negative_amount",
                              std::to_string(r.impact.economic_losses.amount_cents)});
  }
  if (!r.impact.economic_losses.existence &&
      r.impact.economic_losses.amount_cents > 0) {
    rep.violations.push_back({"impact.economic_losses",
                              "existence_inconsistent",
                              "amount > 0 while existence is false"});
  }
  return rep;
}

namespace detail {

inline std::string json_quote(std::string_view s) {
  return nlohmann::json(std::string(s)).dump();
}

// amounts print as plain integers when whole, otherwise with exactly two
// fractional digits.
inline std::string amount_literal(long long cents) {
  std::string out = std::to_string(cents / 100);
  const long long frac = cents % 100;
  if (frac != 0) {
    out.push_back('.');
    out.push_back(static_cast<char>('0' + frac / 10));
    out.push_back(static_cast<char>('0' + frac % 10));
  }
  return out;
}

}  // namespace detail

// byte-stable canonical serialization. hand-built rather than routed through
// a json library so key order, spacing, and the amount format cannot drift.
inline std::string canonical_json(const ExtractionRecord& r) {
  auto rep = validate(r);
  if (!rep.valid()) {
    std::string what;
    for (const auto& v : rep.violations) {
      if (!what.empty()) what += "; ";
      what += v.path + ": " + v.kind;
    }
    throw InvalidRecord(what);
  }
  const char* b = "false";
  const char* t = "true";
  std::string out;
  out.reserve(384);
  out += "{\"Location\":{\"Province\":";
  out += detail::json_quote(r.location.province);
  out += ",\"City\":";
  out += detail::json_quote(r.location.city);
  out += "},\"Event Characteristics\":{\"Type Code\":[";
  bool first = true;
  for (const auto& code : r.event.type_codes) {  // std::set is ascending
    if (!first) out += ",";
    first = false;
    out += detail::json_quote(code);
  }
  out += "],\"Illegal Means\":";
  out += detail::json_quote(r.event.illegal_means);
  out += ",\"Cybercrime\":";
  out += r.event.cybercrime ? t : b;
  out += ",\"Completed Illegal Act\":";
  out += r.event.completed_illegal_act ? t : b;
  out += ",\"Case Closure\":";
  out += r.event.case_closure ? t : b;
  out += ",\"Police Handling\":";
  out += detail::json_quote(r.event.police_handling);
  out += "},\"Impact Assessment\":{\"Deaths\":{\"Existence\":";
  out += r.impact.deaths.existence ? t : b;
  out += ",\"Number\":";
  out += std::to_string(r.impact.deaths.number);
  out += "},\"Injuries\":{\"Existence\":";
  out += r.impact.injuries.existence ? t : b;
  out += ",\"Number\":";
  out += std::to_string(r.impact.injuries.number);
  out += "},\"Economic Losses\":{\"Existence\":";
  out += r.impact.economic_losses.existence ? t : b;
  out += ",\"Amount\":";
  out += detail::amount_literal(r.impact.economic_losses.amount_cents);
  out += "},\"Social Impact\":";
  out += r.impact.social_impact ? t : b;
  out += "}}";
  return out;
}

namespace detail {

inline const nlohmann::json& member(const nlohmann::json& obj,
                                    const std::string& key,
                                    const std::string& path) {
  if (!obj.is_object()) throw SchemaViolation(path + " is not an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaViolation(path + "." + key + " missing");
  return *it;
}

inline bool as_bool(const nlohmann::json& v, const std::string& path) {
  if (!v.is_boolean()) throw SchemaViolation(path + " must be a boolean");
  return v.get<bool>();
}

inline std::string as_string(const nlohmann::json& v,
                             const std::string& path) {
  if (!v.is_string()) throw SchemaViolation(path + " must be a string");
  return v.get<std::string>();
}

inline long long as_count(const nlohmann::json& v, const std::string& path) {
  if (v.is_number_integer() || v.is_number_unsigned())
    return v.get<long long>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    long long i = static_cast<long long>(d);
    if (static_cast<double>(i) != d)
      throw SchemaViolation(path + " must be an integer");
    return i;
  }
  throw SchemaViolation(path + " must be a number");
}

inline long long as_cents(const nlohmann::json& v, const std::string& path) {
  if (v.is_number_integer() || v.is_number_unsigned())
    return v.get<long long>() * 100;
  if (v.is_number_float())
    return std::llround(v.get<double>() * 100.0);
  throw SchemaViolation(path + " must be a number");
}

}  // namespace detail

// converts an already parsed json value with canonical keys into a record.
// key order and whitespace are irrelevant; missing or mistyped members and
// duplicate type codes are schema violations.
inline ExtractionRecord record_from_json(const nlohmann::json& j) {
  namespace d = detail;
  ExtractionRecord r;
  const auto& loc = d::member(j, "Location", "$");
  r.location.province = d::as_string(d::member(loc, "Province", "Location"),
                                     "Location.Province");
  r.location.city =
      d::as_string(d::member(loc, "City", "Location"), "Location.City");

  const auto& ev = d::member(j, "Event Characteristics", "$");
  const auto& codes = d::member(ev, "Type Code", "Event Characteristics");
  if (!codes.is_array())
    throw SchemaViolation("Type Code must be an array");
  for (const auto& c : codes) {
    std::string code = d::as_string(c, "Type Code[]");
    if (!r.event.type_codes.insert(code).second)
      throw SchemaViolation("duplicate type code " + code);
  }
  r.event.illegal_means =
      d::as_string(d::member(ev, "Illegal Means", "Event Characteristics"),
                   "Illegal Means");
  r.event.cybercrime = d::as_bool(
      d::member(ev, "Cybercrime", "Event Characteristics"), "Cybercrime");
  r.event.completed_illegal_act = d::as_bool(
      d::member(ev, "Completed Illegal Act", "Event Characteristics"),
      "Completed Illegal Act");
  r.event.case_closure = d::as_bool(
      d::member(ev, "Case Closure", "Event Characteristics"), "Case Closure");
  r.event.police_handling =
      d::as_string(d::member(ev, "Police Handling", "Event Characteristics"),
                   "Police Handling");

  const auto& imp = d::member(j, "Impact Assessment", "$");
  auto counted = [&](const char* key) {
    const auto& o = d::member(imp, key, "Impact Assessment");
    CountedClaim c;
    c.existence = d::as_bool(d::member(o, "Existence", key), "Existence");
    c.number = d::as_count(d::member(o, "Number", key), "Number");
    return c;
  };
  r.impact.deaths = counted("Deaths");
  r.impact.injuries = counted("Injuries");
  const auto& losses = d::member(imp, "Economic Losses", "Impact Assessment");
  r.impact.economic_losses.existence = d::as_bool(
      d::member(losses, "Existence", "Economic Losses"), "Existence");
  r.impact.economic_losses.amount_cents =
      d::as_cents(d::member(losses, "Amount", "Economic Losses"), "Amount");
  r.impact.social_impact = d::as_bool(
      d::member(imp, "Social Impact", "Impact Assessment"), "Social Impact");
  return r;
}

// strict parse of a canonical record text: json, schema shape, semantics.
inline ExtractionRecord parse_record(const std::string& textual) {
  nlohmann::json j = nlohmann::json::parse(textual, nullptr, false);
  if (j.is_discarded()) throw MalformedJson("unparseable record text");
  ExtractionRecord r = record_from_json(j);
  auto rep = validate(r);
  if (!rep.valid()) {
    throw SchemaViolation(rep.violations.front().path + ": " +
                          rep.violations.front().kind);
  }
  return r;
}

}  // namespace briefkit::schema
