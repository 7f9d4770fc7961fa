#pragma once

// recovery of structured records from raw model output: find the JSON blob,
// repair the usual damage (full-width punctuation, single quotes, trailing
// commas, miscased literals), then parse either strictly (any flaw is an
// error) or leniently (flaws become data in the parse report).

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "briefkit/errors.hpp"
#include "briefkit/schema.hpp"
#include "briefkit/text.hpp"

namespace briefkit::outparse {

class NoJsonFound : public Error {
 public:
  NoJsonFound() : Error("no json blob in model output") {}
};

class MalformedJson : public Error {
 public:
  explicit MalformedJson(const std::string& detail)
      : Error("unparseable model output: " + detail) {}
};

// returns the interior of the first ```json fence, or failing that the
// first balanced top-level {...} (ignoring braces inside double-quoted
// strings). the extracted text is not guaranteed to parse.
inline std::string extract_json_blob(const std::string& raw) {
  const std::string fence = "```json";
  auto f = raw.find(fence);
  if (f != std::string::npos) {
    auto body = f + fence.size();
    auto close = raw.find("```", body);
    if (close != std::string::npos) {
      return text::trim(raw.substr(body, close - body));
    }
  }
  bool in_str = false, escaped = false;
  std::size_t start = std::string::npos;
  int depth = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (in_str) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_str = false;
      continue;
    }
    if (c == '"' && depth > 0) {
      in_str = true;
    } else if (c == '{') {
      if (depth == 0) start = i;
      ++depth;
    } else if (c == '}' && depth > 0) {
      if (--depth == 0) return raw.substr(start, i - start + 1);
    }
  }
  throw NoJsonFound();
}

enum class RepairKind {
  kFullWidthPunct,
  kSingleQuotes,
  kTrailingComma,
  kLiteralCasing,
};

inline std::string repair_kind_name(RepairKind k) {
  switch (k) {
    case RepairKind::kFullWidthPunct: return "fullwidth_punct";
    case RepairKind::kSingleQuotes: return "single_quotes";
    case RepairKind::kTrailingComma: return "trailing_comma";
    case RepairKind::kLiteralCasing: return "literal_casing";
  }
  throw Error("unreachable repair kind");
}

namespace detail {

// pass 1: full-width structural punctuation and curly quotes to ASCII.
// quote pairs of any style delimit literals whose interiors are preserved.
inline std::string repair_fullwidth(const std::string& blob, bool& changed) {
  std::string out;
  out.reserve(blob.size());
  char32_t closer = 0;       // expected closing quote, 0 when outside
  bool ascii_escapes = false;
  bool escaped = false;
  std::size_t i = 0;
  while (i < blob.size()) {
    char32_t cp = text::decode_at(blob, i);
    if (closer != 0) {
      if (ascii_escapes) {
        if (escaped) {
          escaped = false;
        } else if (cp == '\\') {
          escaped = true;
        } else if (cp == closer) {
          closer = 0;
        }
        text::append(out, cp);
      } else if (cp == closer) {
        // curly or full-width closer becomes its ASCII equivalent
        out.push_back(closer == 0x2019 || closer == 0xFF07 ? '\'' : '"');
        changed = true;
        closer = 0;
      } else {
        text::append(out, cp);
      }
      continue;
    }
    switch (cp) {
      case 0xFF0C: out.push_back(','); changed = true; break;  // ，
      case 0xFF1A: out.push_back(':'); changed = true; break;  // ：
      case 0xFF1B: out.push_back(';'); changed = true; break;  // ；
      case 0xFF5B: out.push_back('{'); changed = true; break;  // ｛
      case 0xFF5D: out.push_back('}'); changed = true; break;  // ｝
      case 0xFF3B: out.push_back('['); changed = true; break;  // ［
      case 0xFF3D: out.push_back(']'); changed = true; break;  // ］
      case '"':
        out.push_back('"');
        closer = '"';
        ascii_escapes = true;
        escaped = false;
        break;
      case '\'':
        out.push_back('\'');
        closer = '\'';
        ascii_escapes = true;
        escaped = false;
        break;
      case 0x201C:  // “
        out.push_back('"');
        closer = 0x201D;
        ascii_escapes = false;
        changed = true;
        break;
      case 0xFF02:  // ＂
        out.push_back('"');
        closer = 0xFF02;
        ascii_escapes = false;
        changed = true;
        break;
      case 0x2018:  // ‘
        out.push_back('\'');
        closer = 0x2019;
        ascii_escapes = false;
        changed = true;
        break;
      case 0xFF07:  // ＇
        out.push_back('\'');
        closer = 0xFF07;
        ascii_escapes = false;
        changed = true;
        break;
      default:
        text::append(out, cp);
    }
  }
  return out;
}

// pass 2: single-quoted strings become double-quoted; interior double
// quotes get escaped, escaped single quotes get unescaped.
inline std::string repair_single_quotes(const std::string& s, bool& changed) {
  std::string out;
  out.reserve(s.size());
  bool in_dq = false, escaped = false;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (in_dq) {
      out.push_back(c);
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_dq = false;
      ++i;
      continue;
    }
    if (c == '"') {
      in_dq = true;
      out.push_back(c);
      ++i;
      continue;
    }
    if (c != '\'') {
      out.push_back(c);
      ++i;
      continue;
    }
    changed = true;
    out.push_back('"');
    ++i;
    bool sq_escaped = false;
    while (i < s.size()) {
      char d = s[i];
      if (sq_escaped) {
        if (d != '\'') out.push_back('\\');
        out.push_back(d);
        sq_escaped = false;
        ++i;
        continue;
      }
      if (d == '\\') {
        sq_escaped = true;
        ++i;
        continue;
      }
      if (d == '\'') {
        ++i;
        break;
      }
      if (d == '"') out.push_back('\\');
      out.push_back(d);
      ++i;
    }
    out.push_back('"');
  }
  return out;
}

// pass 3: drop commas that directly precede a closing brace or bracket.
inline std::string repair_trailing_commas(const std::string& s,
                                          bool& changed) {
  std::string out;
  out.reserve(s.size());
  bool in_str = false, escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_str) {
      out.push_back(c);
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_str = false;
      continue;
    }
    if (c == '"') {
      in_str = true;
      out.push_back(c);
      continue;
    }
    if (c == ',') {
      std::size_t k = i + 1;
      while (k < s.size() &&
             std::isspace(static_cast<unsigned char>(s[k])) != 0)
        ++k;
      if (k < s.size() && (s[k] == '}' || s[k] == ']')) {
        changed = true;
        continue;  // swallow the comma, keep the whitespace
      }
    }
    out.push_back(c);
  }
  return out;
}

// pass 4: True/FALSE/Null and friends to canonical lowercase.
inline std::string repair_literal_casing(const std::string& s,
                                         bool& changed) {
  std::string out;
  out.reserve(s.size());
  bool in_str = false, escaped = false;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (in_str) {
      out.push_back(c);
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_str = false;
      ++i;
      continue;
    }
    if (c == '"') {
      in_str = true;
      out.push_back(c);
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) == 0) {
      out.push_back(c);
      ++i;
      continue;
    }
    std::string word;
    while (i < s.size() &&
           std::isalpha(static_cast<unsigned char>(s[i])) != 0)
      word.push_back(s[i++]);
    std::string lower = word;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if ((lower == "true" || lower == "false" || lower == "null") &&
        lower != word) {
      changed = true;
      out += lower;
    } else {
      out += word;
    }
  }
  return out;
}

}  // namespace detail

// applies the fixed repair sequence and records which repairs fired.
inline std::string repair_json(const std::string& blob,
                               std::vector<RepairKind>* applied = nullptr) {
  bool c1 = false, c2 = false, c3 = false, c4 = false;
  std::string s = detail::repair_fullwidth(blob, c1);
  s = detail::repair_single_quotes(s, c2);
  s = detail::repair_trailing_commas(s, c3);
  s = detail::repair_literal_casing(s, c4);
  if (applied != nullptr) {
    if (c1) applied->push_back(RepairKind::kFullWidthPunct);
    if (c2) applied->push_back(RepairKind::kSingleQuotes);
    if (c3) applied->push_back(RepairKind::kTrailingComma);
    if (c4) applied->push_back(RepairKind::kLiteralCasing);
  }
  return s;
}

// accepted key spellings mapped to canonical key names, applied per
// nesting level. lenient lookups fold case and trim; strict lookups are
// exact. the defaults cover the canonical English keys plus common
// Chinese spellings; extend via add().
struct KeyAliasMap {
  std::map<std::string, std::string> exact;
  std::map<std::string, std::string> folded;

  static std::string fold(std::string_view key) {
    std::string k = text::trim(key);
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) {
      return static_cast<char>(std::tolower(c));
    });
    return k;
  }

  void add(const std::string& alias, const std::string& canonical) {
    exact[alias] = canonical;
    folded[fold(alias)] = canonical;
  }

  std::optional<std::string> resolve_exact(const std::string& key) const {
    auto it = exact.find(key);
    if (it == exact.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::string> resolve_lenient(const std::string& key) const {
    auto it = folded.find(fold(key));
    if (it == folded.end()) return std::nullopt;
    return it->second;
  }

  static KeyAliasMap defaults() {
    KeyAliasMap m;
    const char* canonical[] = {
        "Location",        "Province",       "City",
        "Event Characteristics", "Type Code", "Illegal Means",
        "Cybercrime",      "Completed Illegal Act", "Case Closure",
        "Police Handling", "Impact Assessment", "Deaths",
        "Injuries",        "Economic Losses", "Existence",
        "Number",          "Amount",          "Social Impact"};
    for (const char* k : canonical) m.add(k, k);
    const std::pair<const char*, const char*> zh[] = {
        {"位置", "Location"},         {"地点", "Location"},
        {"省份", "Province"},         {"省", "Province"},
        {"城市", "City"},             {"市", "City"},
        {"事件特征", "Event Characteristics"},
        {"类型代码", "Type Code"},    {"案件类型", "Type Code"},
        {"非法手段", "Illegal Means"},{"违法手段", "Illegal Means"},
        {"网络犯罪", "Cybercrime"},   {"是否网络犯罪", "Cybercrime"},
        {"违法行为完成", "Completed Illegal Act"},
        {"既遂", "Completed Illegal Act"},
        {"结案", "Case Closure"},     {"是否结案", "Case Closure"},
        {"警方处置", "Police Handling"},
        {"处置措施", "Police Handling"},
        {"影响评估", "Impact Assessment"},
        {"死亡", "Deaths"},           {"死亡情况", "Deaths"},
        {"受伤", "Injuries"},         {"受伤情况", "Injuries"},
        {"经济损失", "Economic Losses"},
        {"存在", "Existence"},        {"是否存在", "Existence"},
        {"数量", "Number"},           {"人数", "Number"},
        {"金额", "Amount"},           {"损失金额", "Amount"},
        {"社会影响", "Social Impact"},
    };
    for (const auto& [a, c] : zh) m.add(a, c);
    return m;
  }
};

// the 15 leaves as individually optional values. a leaf can be present in
// the output yet carry no usable value (wrong type); it then appears in
// present_fields with an empty optional and a recorded violation.
struct PartialRecord {
  std::optional<std::string> province;
  std::optional<std::string> city;
  std::optional<std::vector<std::string>> type_codes;  // output order kept
  std::optional<std::string> illegal_means;
  std::optional<bool> cybercrime;
  std::optional<bool> completed_illegal_act;
  std::optional<bool> case_closure;
  std::optional<std::string> police_handling;
  std::optional<bool> deaths_existence;
  std::optional<long long> deaths_number;
  std::optional<bool> injuries_existence;
  std::optional<long long> injuries_number;
  std::optional<bool> economic_losses_existence;
  std::optional<long long> economic_losses_amount_cents;
  std::optional<bool> social_impact;
  bool operator==(const PartialRecord&) const = default;
};

struct ParsedExtraction {
  PartialRecord record;
  std::set<schema::Field> present_fields;
  std::vector<RepairKind> repairs;
  std::vector<schema::Violation> violations;
  std::vector<std::string> warnings;
  std::optional<std::string> error;  // lenient-mode hard failure kind

  std::set<schema::Field> absent_fields() const {
    std::set<schema::Field> out;
    for (auto f : schema::all_fields()) {
      if (present_fields.count(f) == 0) out.insert(f);
    }
    return out;
  }
};

enum class ParseMode { kStrict, kLenient };

namespace detail {

inline std::optional<long long> integer_from_string(const std::string& raw) {
  std::string folded = text::trim(text::fold_digit_width(raw));
  if (folded.empty()) return std::nullopt;
  std::size_t i = folded[0] == '-' ? 1 : 0;
  if (i == folded.size()) return std::nullopt;
  for (std::size_t k = i; k < folded.size(); ++k) {
    if (folded[k] < '0' || folded[k] > '9') {
      // allow a trailing ".0" style fraction
      if (folded[k] == '.') {
        for (std::size_t z = k + 1; z < folded.size(); ++z) {
          if (folded[z] != '0') return std::nullopt;
        }
        folded = folded.substr(0, k);
        break;
      }
      return std::nullopt;
    }
  }
  try {
    return std::stoll(folded);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<long long> cents_from_string(const std::string& raw) {
  std::string folded = text::trim(text::fold_digit_width(raw));
  if (folded.empty()) return std::nullopt;
  bool neg = false;
  std::size_t i = 0;
  if (folded[0] == '-') {
    neg = true;
    i = 1;
  }
  std::string ints, frac;
  while (i < folded.size() && folded[i] >= '0' && folded[i] <= '9')
    ints.push_back(folded[i++]);
  if (i < folded.size() && folded[i] == '.') {
    ++i;
    while (i < folded.size() && folded[i] >= '0' && folded[i] <= '9')
      frac.push_back(folded[i++]);
  }
  if (i != folded.size() || (ints.empty() && frac.empty()))
    return std::nullopt;
  while (frac.size() < 2) frac.push_back('0');
  if (frac.size() > 2) frac.resize(2);  // cents precision
  try {
    long long cents = (ints.empty() ? 0 : std::stoll(ints)) * 100 +
                      std::stoll(frac);
    return neg ? -cents : cents;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

struct WalkContext {
  const KeyAliasMap& aliases;
  bool strict;
  ParsedExtraction& out;

  std::optional<std::string> resolve(const std::string& key) const {
    return strict ? aliases.resolve_exact(key)
                  : aliases.resolve_lenient(key);
  }

  void problem(const std::string& path, const std::string& kind,
               const std::string& detail) const {
    if (strict) throw schema::SchemaViolation(path + ": " + kind);
    out.violations.push_back({path, kind, detail});
  }

  void warn(const std::string& message) const {
    if (strict) throw schema::SchemaViolation(message);
    out.warnings.push_back(message);
  }
};

inline void assign_string(const WalkContext& ctx, const nlohmann::json& v,
                          schema::Field f,
                          std::optional<std::string>& slot) {
  ctx.out.present_fields.insert(f);
  if (v.is_string()) {
    slot = v.get<std::string>();
  } else {
    ctx.problem(schema::field_path(f), "wrong_type", "expected a string");
  }
}

inline void assign_bool(const WalkContext& ctx, const nlohmann::json& v,
                        schema::Field f, std::optional<bool>& slot) {
  ctx.out.present_fields.insert(f);
  if (v.is_boolean()) {
    slot = v.get<bool>();
    return;
  }
  if (v.is_string()) {
    std::string folded = KeyAliasMap::fold(v.get<std::string>());
    if (folded == "true" || folded == "false") {
      if (ctx.strict)
        ctx.problem(schema::field_path(f), "wrong_type",
                    "boolean given as a string");
      slot = folded == "true";
      ctx.warn("coerced quoted boolean at " + schema::field_path(f));
      return;
    }
  }
  ctx.problem(schema::field_path(f), "wrong_type", "expected a boolean");
}

inline void assign_count(const WalkContext& ctx, const nlohmann::json& v,
                         schema::Field f, std::optional<long long>& slot) {
  ctx.out.present_fields.insert(f);
  if (v.is_number_integer() || v.is_number_unsigned()) {
    slot = v.get<long long>();
    return;
  }
  if (v.is_number_float()) {
    double d = v.get<double>();
    auto i = static_cast<long long>(d);
    if (static_cast<double>(i) == d) {
      slot = i;
    } else {
      ctx.problem(schema::field_path(f), "non_integral_count",
                  v.dump());
    }
    return;
  }
  if (v.is_string()) {
    if (auto n = integer_from_string(v.get<std::string>())) {
      if (ctx.strict)
        ctx.problem(schema::field_path(f), "wrong_type",
                    "number given as a string");
      slot = *n;
      ctx.warn("coerced quoted numeral at " + schema::field_path(f));
      return;
    }
  }
  ctx.problem(schema::field_path(f), "wrong_type", "expected an integer");
}

inline void assign_amount(const WalkContext& ctx, const nlohmann::json& v,
                          std::optional<long long>& slot) {
  const auto f = schema::Field::kEconomicLossesAmount;
  ctx.out.present_fields.insert(f);
  if (v.is_number_integer() || v.is_number_unsigned()) {
    slot = v.get<long long>() * 100;
    return;
  }
  if (v.is_number_float()) {
    slot = std::llround(v.get<double>() * 100.0);
    return;
  }
  if (v.is_string()) {
    if (auto cents = cents_from_string(v.get<std::string>())) {
      if (ctx.strict)
        ctx.problem(schema::field_path(f), "wrong_type",
                    "number given as a string");
      slot = *cents;
      ctx.warn("coerced quoted numeral at " + schema::field_path(f));
      return;
    }
  }
  ctx.problem(schema::field_path(f), "wrong_type", "expected a number");
}

inline void assign_type_codes(const WalkContext& ctx,
                              const nlohmann::json& v,
                              std::optional<std::vector<std::string>>& slot) {
  const auto f = schema::Field::kTypeCodes;
  ctx.out.present_fields.insert(f);
  if (!v.is_array()) {
    ctx.problem(schema::field_path(f), "wrong_type", "expected an array");
    return;
  }
  std::vector<std::string> codes;
  for (const auto& item : v) {
    if (item.is_string()) {
      codes.push_back(text::trim(text::fold_digit_width(
          item.get<std::string>())));
    } else if (item.is_number_integer() || item.is_number_unsigned()) {
      long long n = item.get<long long>();
      if (ctx.strict)
        ctx.problem(schema::field_path(f), "wrong_type",
                    "type code given as a number");
      std::string code = std::to_string(n);
      if (code.size() < 2) code.insert(code.begin(), '0');
      codes.push_back(code);
      ctx.warn("coerced numeric type code " + code);
    } else {
      ctx.problem(schema::field_path(f), "wrong_type",
                  "type code entries must be strings");
      return;
    }
  }
  std::set<std::string> seen;
  for (const auto& code : codes) {
    if (!schema::is_valid_type_code(code)) {
      ctx.problem(schema::field_path(f), "unknown_type_code", code);
    }
    if (!seen.insert(code).second) {
      ctx.problem(schema::field_path(f), "duplicate_type_code", code);
    }
  }
  slot = std::move(codes);
}

inline void walk_object(const WalkContext& ctx, const nlohmann::json& obj);

inline void walk_section(const WalkContext& ctx, const std::string& name,
                         const nlohmann::json& v) {
  if (!v.is_object()) {
    ctx.problem(name, "wrong_type", "expected an object");
    return;
  }
  auto& rec = ctx.out.record;
  for (const auto& [raw_key, value] : v.items()) {
    auto key = ctx.resolve(raw_key);
    if (!key) {
      ctx.warn("unknown key: " + name + "." + raw_key);
      continue;
    }
    if (name == "Location") {
      if (*key == "Province") {
        assign_string(ctx, value, schema::Field::kProvince, rec.province);
      } else if (*key == "City") {
        assign_string(ctx, value, schema::Field::kCity, rec.city);
      } else {
        ctx.warn("unknown key: " + name + "." + raw_key);
      }
    } else if (name == "Event Characteristics") {
      if (*key == "Type Code") {
        assign_type_codes(ctx, value, rec.type_codes);
      } else if (*key == "Illegal Means") {
        assign_string(ctx, value, schema::Field::kIllegalMeans,
                      rec.illegal_means);
      } else if (*key == "Cybercrime") {
        assign_bool(ctx, value, schema::Field::kCybercrime, rec.cybercrime);
      } else if (*key == "Completed Illegal Act") {
        assign_bool(ctx, value, schema::Field::kCompletedIllegalAct,
                    rec.completed_illegal_act);
      } else if (*key == "Case Closure") {
        assign_bool(ctx, value, schema::Field::kCaseClosure,
                    rec.case_closure);
      } else if (*key == "Police Handling") {
        assign_string(ctx, value, schema::Field::kPoliceHandling,
                      rec.police_handling);
      } else {
        ctx.warn("unknown key: " + name + "." + raw_key);
      }
    } else if (name == "Deaths" || name == "Injuries") {
      const bool deaths = name == "Deaths";
      if (*key == "Existence") {
        assign_bool(ctx, value,
                    deaths ? schema::Field::kDeathsExistence
                           : schema::Field::kInjuriesExistence,
                    deaths ? rec.deaths_existence : rec.injuries_existence);
      } else if (*key == "Number") {
        assign_count(ctx, value,
                     deaths ? schema::Field::kDeathsNumber
                            : schema::Field::kInjuriesNumber,
                     deaths ? rec.deaths_number : rec.injuries_number);
      } else {
        ctx.warn("unknown key: " + name + "." + raw_key);
      }
    } else if (name == "Economic Losses") {
      if (*key == "Existence") {
        assign_bool(ctx, value, schema::Field::kEconomicLossesExistence,
                    rec.economic_losses_existence);
      } else if (*key == "Amount") {
        assign_amount(ctx, value, rec.economic_losses_amount_cents);
      } else {
        ctx.warn("unknown key: " + name + "." + raw_key);
      }
    } else if (name == "Impact Assessment") {
      if (*key == "Deaths" || *key == "Injuries" ||
          *key == "Economic Losses") {
        walk_section(ctx, *key, value);
      } else if (*key == "Social Impact") {
        assign_bool(ctx, value, schema::Field::kSocialImpact,
                    rec.social_impact);
      } else {
        ctx.warn("unknown key: " + name + "." + raw_key);
      }
    }
  }
}

inline void walk_object(const WalkContext& ctx, const nlohmann::json& obj) {
  for (const auto& [raw_key, value] : obj.items()) {
    auto key = ctx.resolve(raw_key);
    if (!key) {
      ctx.warn("unknown key: " + raw_key);
      continue;
    }
    if (*key == "Location" || *key == "Event Characteristics" ||
        *key == "Impact Assessment") {
      walk_section(ctx, *key, value);
    } else {
      ctx.warn("unknown key: " + raw_key);
    }
  }
}

// semantic checks that only fire when both sides of a constraint are
// usable; the partial nature of lenient output must not invent problems.
inline void validate_partial(ParsedExtraction& out) {
  auto& r = out.record;
  auto check_counted = [&](const std::optional<bool>& exist,
                           const std::optional<long long>& num,
                           const std::string& path) {
    if (num && *num < 0) {
      out.violations.push_back(
          {path + ".number", "negative_count", std::to_string(*num)});
    }
    if (exist && num && !*exist && *num > 0) {
      out.violations.push_back({path, "existence_inconsistent",
                                "number > 0 while existence is false"});
    }
  };
  check_counted(r.deaths_existence, r.deaths_number, "impact.deaths");
  check_counted(r.injuries_existence, r.injuries_number, "impact.injuries");
  if (r.economic_losses_amount_cents && *r.economic_losses_amount_cents < 0) {
    out.violations.push_back(
        {"impact.economic_losses.amount", "negative_amount",
         std::to_string(*r.economic_losses_amount_cents)});
  }
  if (r.economic_losses_existence && r.economic_losses_amount_cents &&
      !*r.economic_losses_existence &&
      *r.economic_losses_amount_cents > 0) {
    out.violations.push_back({"impact.economic_losses",
                              "existence_inconsistent",
                              "amount > 0 while existence is false"});
  }
}

}  // namespace detail

// strict mode: the output must contain exactly one well-formed record with
// every field present and valid; anything else throws. lenient mode never
// throws: whatever is recoverable lands in the record, and every flaw is
// recorded in the report. a line with no JSON at all (or none after
// repair) yields an empty census with the failure in `error`.
inline ParsedExtraction parse_output(const std::string& raw,
                                     const KeyAliasMap& aliases,
                                     ParseMode mode) {
  const bool strict = mode == ParseMode::kStrict;
  ParsedExtraction out;

  std::string blob;
  try {
    blob = extract_json_blob(raw);
  } catch (const NoJsonFound&) {
    if (strict) throw;
    out.error = "no_json_found";
    return out;
  }

  std::string repaired =
      strict ? blob : repair_json(blob, &out.repairs);
  nlohmann::json j = nlohmann::json::parse(repaired, nullptr, false);
  if (j.is_discarded()) {
    if (strict) throw MalformedJson("model output is not valid json");
    out.error = "malformed_json";
    return out;
  }
  if (!j.is_object()) {
    if (strict) throw MalformedJson("model output is not a json object");
    out.error = "malformed_json";
    return out;
  }

  detail::WalkContext ctx{aliases, strict, out};
  detail::walk_object(ctx, j);
  detail::validate_partial(out);

  if (strict) {
    if (out.present_fields.size() != schema::kFieldCount) {
      for (auto f : out.absent_fields()) {
        throw schema::SchemaViolation(schema::field_path(f) + " missing");
      }
    }
    if (!out.violations.empty()) {
      const auto& v = out.violations.front();
      throw schema::SchemaViolation(v.path + ": " + v.kind);
    }
  }
  return out;
}

inline ParsedExtraction parse_output(const std::string& raw,
                                     ParseMode mode = ParseMode::kLenient) {
  static const KeyAliasMap kDefaults = KeyAliasMap::defaults();
  return parse_output(raw, kDefaults, mode);
}

}  // namespace briefkit::outparse
