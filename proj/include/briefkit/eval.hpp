#pragma once

// scoring of parsed extractions against gold records: per-field metric
// plans, fold splitting, cross-fold aggregation, report rendering, and
// inter-annotator agreement.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "briefkit/errors.hpp"
#include "briefkit/metrics.hpp"
#include "briefkit/outparse.hpp"
#include "briefkit/schema.hpp"

namespace briefkit::eval {

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("aligned lists differ in length: " + std::to_string(a) +
              " vs " + std::to_string(b)) {}
};

class IdMisalignment : public Error {
 public:
  IdMisalignment(std::size_t index, const std::string& a,
                 const std::string& b)
      : Error("record id mismatch at index " + std::to_string(index) + ": " +
              a + " vs " + b) {}
};

class EmptyRun : public Error {
 public:
  EmptyRun() : Error("nothing to score") {}
};

class TooFewRecords : public Error {
 public:
  explicit TooFewRecords(const std::string& detail)
      : Error("cannot split: " + detail) {}
};

class PlanMismatch : public Error {
 public:
  PlanMismatch() : Error("fold reports were scored under different plans") {}
};

enum class MetricKind { kClassification, kExactMatch, kJaccard, kCosine };

inline std::string metric_kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::kClassification: return "classification";
    case MetricKind::kExactMatch: return "exact_match";
    case MetricKind::kJaccard: return "jaccard";
    case MetricKind::kCosine: return "cosine";
  }
  return "unknown";
}

// which metric scores which of the fifteen fields.
struct FieldMetricPlan {
  std::map<schema::Field, MetricKind> kinds;
  bool operator==(const FieldMetricPlan&) const = default;

  static FieldMetricPlan defaults() {
    using F = schema::Field;
    FieldMetricPlan p;
    p.kinds[F::kProvince] = MetricKind::kExactMatch;
    p.kinds[F::kCity] = MetricKind::kExactMatch;
    p.kinds[F::kTypeCodes] = MetricKind::kJaccard;
    p.kinds[F::kIllegalMeans] = MetricKind::kCosine;
    p.kinds[F::kCybercrime] = MetricKind::kClassification;
    p.kinds[F::kCompletedIllegalAct] = MetricKind::kClassification;
    p.kinds[F::kCaseClosure] = MetricKind::kClassification;
    p.kinds[F::kPoliceHandling] = MetricKind::kCosine;
    p.kinds[F::kDeathsExistence] = MetricKind::kClassification;
    p.kinds[F::kDeathsNumber] = MetricKind::kExactMatch;
    p.kinds[F::kInjuriesExistence] = MetricKind::kClassification;
    p.kinds[F::kInjuriesNumber] = MetricKind::kExactMatch;
    p.kinds[F::kEconomicLossesExistence] = MetricKind::kClassification;
    p.kinds[F::kEconomicLossesAmount] = MetricKind::kExactMatch;
    p.kinds[F::kSocialImpact] = MetricKind::kClassification;
    return p;
  }
};

// one model answer for one briefing, parsed leniently.
struct PredRecord {
  std::string record_id;
  std::string raw_output;
  outparse::ParsedExtraction parsed;
};

// all values are percentages in [0, 100]. which members are meaningful
// depends on the metric kind: classification fills accuracy/recall/f1,
// everything else fills score.
struct FieldScores {
  MetricKind kind = MetricKind::kExactMatch;
  double accuracy = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double score = 0.0;
  std::size_t absence_count = 0;
};

struct GenerationScores {
  double bleu4 = 0.0;    // corpus-level
  double rouge1 = 0.0;   // mean per-sample F
  double rouge2 = 0.0;
  double rouge_l = 0.0;
};

struct RunReport {
  int fold_id = -1;                   // -1 marks an aggregate
  std::size_t folds_aggregated = 0;   // 0 for a single scored fold
  std::size_t sample_count = 0;
  std::size_t parse_failure_count = 0;
  FieldMetricPlan plan;
  std::map<schema::Field, FieldScores> fields;
  GenerationScores generation;
};

namespace detail {

inline bool gold_bool(const schema::ExtractionRecord& r, schema::Field f) {
  using F = schema::Field;
  switch (f) {
    case F::kCybercrime: return r.event.cybercrime;
    case F::kCompletedIllegalAct: return r.event.completed_illegal_act;
    case F::kCaseClosure: return r.event.case_closure;
    case F::kDeathsExistence: return r.impact.deaths.existence;
    case F::kInjuriesExistence: return r.impact.injuries.existence;
    case F::kEconomicLossesExistence:
      return r.impact.economic_losses.existence;
    case F::kSocialImpact: return r.impact.social_impact;
    default: throw Error("not a boolean field: " + schema::field_path(f));
  }
}

inline long long gold_number(const schema::ExtractionRecord& r,
                             schema::Field f) {
  using F = schema::Field;
  switch (f) {
    case F::kDeathsNumber: return r.impact.deaths.number;
    case F::kInjuriesNumber: return r.impact.injuries.number;
    case F::kEconomicLossesAmount:
      return r.impact.economic_losses.amount_cents;
    default: throw Error("not a numeric field: " + schema::field_path(f));
  }
}

inline const std::string& gold_string(const schema::ExtractionRecord& r,
                                      schema::Field f) {
  using F = schema::Field;
  switch (f) {
    case F::kProvince: return r.location.province;
    case F::kCity: return r.location.city;
    case F::kIllegalMeans: return r.event.illegal_means;
    case F::kPoliceHandling: return r.event.police_handling;
    default: throw Error("not a string field: " + schema::field_path(f));
  }
}

inline std::optional<bool> partial_bool(const outparse::PartialRecord& r,
                                        schema::Field f) {
  using F = schema::Field;
  switch (f) {
    case F::kCybercrime: return r.cybercrime;
    case F::kCompletedIllegalAct: return r.completed_illegal_act;
    case F::kCaseClosure: return r.case_closure;
    case F::kDeathsExistence: return r.deaths_existence;
    case F::kInjuriesExistence: return r.injuries_existence;
    case F::kEconomicLossesExistence: return r.economic_losses_existence;
    case F::kSocialImpact: return r.social_impact;
    default: throw Error("not a boolean field: " + schema::field_path(f));
  }
}

inline std::optional<long long> partial_number(
    const outparse::PartialRecord& r, schema::Field f) {
  using F = schema::Field;
  switch (f) {
    case F::kDeathsNumber: return r.deaths_number;
    case F::kInjuriesNumber: return r.injuries_number;
    case F::kEconomicLossesAmount: return r.economic_losses_amount_cents;
    default: throw Error("not a numeric field: " + schema::field_path(f));
  }
}

inline std::optional<std::string> partial_string(
    const outparse::PartialRecord& r, schema::Field f) {
  using F = schema::Field;
  switch (f) {
    case F::kProvince: return r.province;
    case F::kCity: return r.city;
    case F::kIllegalMeans: return r.illegal_means;
    case F::kPoliceHandling: return r.police_handling;
    default: throw Error("not a string field: " + schema::field_path(f));
  }
}

}  // namespace detail

// scores one run (typically the test slice of one fold). absent fields are
// penalized: booleans count against the gold side of the tally, exact-match
// fields count as mismatches, code sets as empty, free text as empty
// strings. a field that is present but unusable (wrong json type) is wrong
// in the same way but does not count toward absence.
inline RunReport score_run(const std::vector<PredRecord>& preds,
                           const std::vector<schema::GoldRecord>& golds,
                           const FieldMetricPlan& plan, int fold_id) {
  if (preds.size() != golds.size())
    throw LengthMismatch(preds.size(), golds.size());
  if (preds.empty()) throw EmptyRun();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].record_id != golds[i].record_id)
      throw IdMisalignment(i, preds[i].record_id, golds[i].record_id);
  }

  RunReport rep;
  rep.fold_id = fold_id;
  rep.folds_aggregated = 0;
  rep.sample_count = preds.size();
  rep.plan = plan;
  for (const auto& p : preds) {
    if (p.parsed.error.has_value()) ++rep.parse_failure_count;
  }

  const std::size_t n = preds.size();
  for (const auto& [field, kind] : plan.kinds) {
    FieldScores fs;
    fs.kind = kind;
    auto is_present = [&](std::size_t i) {
      return preds[i].parsed.present_fields.count(field) != 0;
    };

    switch (kind) {
      case MetricKind::kClassification: {
        metrics::ConfusionTally tally;
        for (std::size_t i = 0; i < n; ++i) {
          const bool g = detail::gold_bool(golds[i].record, field);
          auto p = detail::partial_bool(preds[i].parsed.record, field);
          if (!is_present(i)) ++fs.absence_count;
          if (p.has_value()) {
            if (g && *p) ++tally.tp;
            else if (!g && *p) ++tally.fp;
            else if (g && !*p) ++tally.fn;
            else ++tally.tn;
          } else {
            // missing answers are wrong on whichever side the gold sits
            if (g) ++tally.fn;
            else ++tally.fp;
          }
        }
        auto s = metrics::classification_scores(tally);
        fs.accuracy = s.accuracy * 100.0;
        fs.recall = s.recall * 100.0;
        fs.f1 = s.f1 * 100.0;
        break;
      }
      case MetricKind::kExactMatch: {
        std::size_t matches = 0;
        const bool numeric = field == schema::Field::kDeathsNumber ||
                             field == schema::Field::kInjuriesNumber ||
                             field == schema::Field::kEconomicLossesAmount;
        for (std::size_t i = 0; i < n; ++i) {
          if (!is_present(i)) ++fs.absence_count;
          if (numeric) {
            auto p = detail::partial_number(preds[i].parsed.record, field);
            if (p.has_value() &&
                *p == detail::gold_number(golds[i].record, field))
              ++matches;
          } else {
            auto p = detail::partial_string(preds[i].parsed.record, field);
            if (p.has_value() &&
                metrics::strings_match(
                    *p, detail::gold_string(golds[i].record, field)))
              ++matches;
          }
        }
        fs.score = 100.0 * static_cast<double>(matches) / n;
        break;
      }
      case MetricKind::kJaccard: {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!is_present(i)) ++fs.absence_count;
          std::set<std::string> pred_set;
          const auto& codes = preds[i].parsed.record.type_codes;
          if (codes.has_value())
            pred_set.insert(codes->begin(), codes->end());
          sum += metrics::jaccard(pred_set,
                                  golds[i].record.event.type_codes);
        }
        fs.score = 100.0 * sum / n;
        break;
      }
      case MetricKind::kCosine: {
        std::vector<std::string> pred_texts(n), gold_texts(n);
        for (std::size_t i = 0; i < n; ++i) {
          if (!is_present(i)) ++fs.absence_count;
          auto p = detail::partial_string(preds[i].parsed.record, field);
          pred_texts[i] = p.value_or("");
          gold_texts[i] = detail::gold_string(golds[i].record, field);
        }
        auto cosines = metrics::tfidf_cosine(pred_texts, gold_texts);
        fs.score = 100.0 *
                   std::accumulate(cosines.begin(), cosines.end(), 0.0) / n;
        break;
      }
    }
    rep.fields[field] = fs;
  }

  // sequence-level scores of the raw output against the canonical gold
  std::vector<std::pair<metrics::TokenSeq, metrics::TokenSeq>> pairs;
  pairs.reserve(n);
  double r1 = 0.0, r2 = 0.0, rl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto cand = metrics::char_tokens(preds[i].raw_output);
    auto ref =
        metrics::char_tokens(schema::canonical_json(golds[i].record));
    if (!cand.empty()) {
      r1 += metrics::rouge_n(cand, ref, 1).f1;
      r2 += metrics::rouge_n(cand, ref, 2).f1;
      rl += metrics::rouge_l(cand, ref).f1;
    }
    pairs.emplace_back(std::move(cand), std::move(ref));
  }
  rep.generation.bleu4 = metrics::bleu4(pairs).score;
  rep.generation.rouge1 = 100.0 * r1 / n;
  rep.generation.rouge2 = 100.0 * r2 / n;
  rep.generation.rouge_l = 100.0 * rl / n;
  return rep;
}

// ---- fold splitting ----

struct FoldSpec {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::vector<int> assignments;  // record index -> fold number
  bool operator==(const FoldSpec&) const = default;
};

// deterministic shuffle-and-deal split. the permutation uses an explicit
// fisher-yates with modulo draws from mt19937_64 so the assignment is the
// same on every platform; folds are dealt round-robin so sizes differ by
// at most one.
inline FoldSpec kfold_split(std::size_t n, std::size_t k,
                            std::uint64_t seed) {
  if (k == 0) throw TooFewRecords("fold count must be positive");
  if (n < k)
    throw TooFewRecords(std::to_string(n) + " records cannot fill " +
                        std::to_string(k) + " folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(perm[i], perm[j]);
  }
  FoldSpec spec;
  spec.k = k;
  spec.seed = seed;
  spec.assignments.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    spec.assignments[perm[i]] = static_cast<int>(i % k);
  }
  return spec;
}

inline std::vector<std::size_t> test_indices(const FoldSpec& spec,
                                             int fold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < spec.assignments.size(); ++i) {
    if (spec.assignments[i] == fold) out.push_back(i);
  }
  return out;
}

inline std::vector<std::size_t> train_indices(const FoldSpec& spec,
                                              int fold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < spec.assignments.size(); ++i) {
    if (spec.assignments[i] != fold) out.push_back(i);
  }
  return out;
}

inline std::vector<std::size_t> fold_sizes(const FoldSpec& spec) {
  std::vector<std::size_t> sizes(spec.k, 0);
  for (int a : spec.assignments) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

inline nlohmann::ordered_json folds_json(const FoldSpec& spec) {
  return nlohmann::ordered_json{
      {"k", spec.k}, {"seed", spec.seed}, {"assignments", spec.assignments}};
}

inline FoldSpec folds_from_json(const nlohmann::json& j) {
  FoldSpec spec;
  spec.k = j.at("k").get<std::size_t>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.assignments = j.at("assignments").get<std::vector<int>>();
  return spec;
}

// ---- aggregation ----

// unweighted mean of every percentage across folds; counts are summed.
inline RunReport aggregate_folds(const std::vector<RunReport>& folds) {
  if (folds.empty()) throw EmptyRun();
  for (const auto& f : folds) {
    if (f.plan != folds.front().plan) throw PlanMismatch();
  }
  RunReport agg;
  agg.fold_id = -1;
  agg.folds_aggregated = folds.size();
  agg.plan = folds.front().plan;
  const double m = static_cast<double>(folds.size());
  for (const auto& f : folds) {
    agg.sample_count += f.sample_count;
    agg.parse_failure_count += f.parse_failure_count;
    agg.generation.bleu4 += f.generation.bleu4 / m;
    agg.generation.rouge1 += f.generation.rouge1 / m;
    agg.generation.rouge2 += f.generation.rouge2 / m;
    agg.generation.rouge_l += f.generation.rouge_l / m;
    for (const auto& [field, fs] : f.fields) {
      auto& out = agg.fields[field];
      out.kind = fs.kind;
      out.accuracy += fs.accuracy / m;
      out.recall += fs.recall / m;
      out.f1 += fs.f1 / m;
      out.score += fs.score / m;
      out.absence_count += fs.absence_count;
    }
  }
  return agg;
}

// ---- rendering ----

namespace detail {

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// presentation order and labels for the three report tables
inline const std::vector<std::pair<schema::Field, std::string>>&
boolean_columns() {
  using F = schema::Field;
  static const std::vector<std::pair<F, std::string>> cols = {
      {F::kDeathsExistence, "Death"},
      {F::kInjuriesExistence, "Injury"},
      {F::kEconomicLossesExistence, "Economic loss"},
      {F::kCompletedIllegalAct, "Completed Illegal Act"},
      {F::kCybercrime, "Cybercrime"},
      {F::kSocialImpact, "Social impact"},
      {F::kCaseClosure, "Case closure"},
  };
  return cols;
}

inline const std::vector<std::pair<schema::Field, std::string>>&
exact_columns() {
  using F = schema::Field;
  static const std::vector<std::pair<F, std::string>> cols = {
      {F::kDeathsNumber, "Deaths"},
      {F::kInjuriesNumber, "Injuries"},
      {F::kEconomicLossesAmount, "Economic losses"},
      {F::kProvince, "Province"},
      {F::kCity, "City"},
  };
  return cols;
}

inline const std::vector<std::pair<schema::Field, std::string>>&
similarity_columns() {
  using F = schema::Field;
  static const std::vector<std::pair<F, std::string>> cols = {
      {F::kTypeCodes, "Case type"},
      {F::kPoliceHandling, "Police handling"},
      {F::kIllegalMeans, "Criminal methods"},
  };
  return cols;
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const RunReport& rep) {
  nlohmann::ordered_json j;
  j["fold_id"] = rep.fold_id;
  j["folds_aggregated"] = rep.folds_aggregated;
  j["sample_count"] = rep.sample_count;
  j["parse_failure_count"] = rep.parse_failure_count;
  nlohmann::ordered_json fields = nlohmann::ordered_json::object();
  for (schema::Field f : schema::all_fields()) {
    auto it = rep.fields.find(f);
    if (it == rep.fields.end()) continue;
    const auto& fs = it->second;
    nlohmann::ordered_json fj;
    fj["metric"] = metric_kind_name(fs.kind);
    if (fs.kind == MetricKind::kClassification) {
      fj["accuracy"] = fs.accuracy;
      fj["recall"] = fs.recall;
      fj["f1"] = fs.f1;
    } else {
      fj["score"] = fs.score;
    }
    fj["absence_count"] = fs.absence_count;
    fields[schema::field_path(f)] = std::move(fj);
  }
  j["fields"] = std::move(fields);
  j["generation"] = nlohmann::ordered_json{
      {"bleu4", rep.generation.bleu4},
      {"rouge1", rep.generation.rouge1},
      {"rouge2", rep.generation.rouge2},
      {"rouge_l", rep.generation.rouge_l},
  };
  return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport rep;
  rep.fold_id = j.at("fold_id").get<int>();
  rep.folds_aggregated = j.at("folds_aggregated").get<std::size_t>();
  rep.sample_count = j.at("sample_count").get<std::size_t>();
  rep.parse_failure_count = j.at("parse_failure_count").get<std::size_t>();
  for (const auto& [path, fj] : j.at("fields").items()) {
    auto maybe = schema::field_from_path(path);
    if (!maybe.has_value())
      throw Error("unknown field path in report: " + path);
    schema::Field f = *maybe;
    FieldScores fs;
    const std::string kind = fj.at("metric").get<std::string>();
    if (kind == "classification") {
      fs.kind = MetricKind::kClassification;
      fs.accuracy = fj.at("accuracy").get<double>();
      fs.recall = fj.at("recall").get<double>();
      fs.f1 = fj.at("f1").get<double>();
    } else {
      if (kind == "exact_match") fs.kind = MetricKind::kExactMatch;
      else if (kind == "jaccard") fs.kind = MetricKind::kJaccard;
      else if (kind == "cosine") fs.kind = MetricKind::kCosine;
      else throw Error("unknown metric kind in report: " + kind);
      fs.score = fj.at("score").get<double>();
    }
    fs.absence_count = fj.at("absence_count").get<std::size_t>();
    rep.fields[f] = fs;
    rep.plan.kinds[f] = fs.kind;
  }
  const auto& g = j.at("generation");
  rep.generation.bleu4 = g.at("bleu4").get<double>();
  rep.generation.rouge1 = g.at("rouge1").get<double>();
  rep.generation.rouge2 = g.at("rouge2").get<double>();
  rep.generation.rouge_l = g.at("rouge_l").get<double>();
  return rep;
}

inline std::string report_markdown(const RunReport& rep) {
  using detail::fixed2;
  std::string md = "# Extraction Quality Report\n\n";
  if (rep.fold_id >= 0) {
    md += "- fold: " + std::to_string(rep.fold_id) + "\n";
  } else {
    md += "- folds aggregated: " + std::to_string(rep.folds_aggregated) +
          "\n";
  }
  md += "- samples: " + std::to_string(rep.sample_count) + "\n";
  md += "- parse failures: " + std::to_string(rep.parse_failure_count) +
        "\n\n";

  auto have = [&](schema::Field f) { return rep.fields.count(f) != 0; };

  md += "## Boolean Fields\n\n";
  md += "| Metric |";
  for (const auto& [f, label] : detail::boolean_columns()) {
    if (have(f)) md += " " + label + " |";
  }
  md += "\n|---|";
  for (const auto& [f, label] : detail::boolean_columns()) {
    (void)label;
    if (have(f)) md += "---|";
  }
  md += "\n";
  const std::vector<std::pair<std::string, double FieldScores::*>> rows = {
      {"Accuracy", &FieldScores::accuracy},
      {"Recall", &FieldScores::recall},
      {"F1", &FieldScores::f1},
  };
  for (const auto& [name, member] : rows) {
    md += "| " + name + " |";
    for (const auto& [f, label] : detail::boolean_columns()) {
      (void)label;
      if (have(f)) md += " " + fixed2(rep.fields.at(f).*member) + " |";
    }
    md += "\n";
  }

  md += "\n## Exact Match Rate\n\n| Field | EMR |\n|---|---|\n";
  for (const auto& [f, label] : detail::exact_columns()) {
    if (have(f))
      md += "| " + label + " | " + fixed2(rep.fields.at(f).score) + " |\n";
  }

  md += "\n## Text Similarity\n\n| Field | Score |\n|---|---|\n";
  for (const auto& [f, label] : detail::similarity_columns()) {
    if (have(f))
      md += "| " + label + " | " + fixed2(rep.fields.at(f).score) + " |\n";
  }

  md += "\n## Sequence Scores\n\n| Metric | Value |\n|---|---|\n";
  md += "| BLEU-4 | " + fixed2(rep.generation.bleu4) + " |\n";
  md += "| ROUGE-1 | " + fixed2(rep.generation.rouge1) + " |\n";
  md += "| ROUGE-2 | " + fixed2(rep.generation.rouge2) + " |\n";
  md += "| ROUGE-L | " + fixed2(rep.generation.rouge_l) + " |\n";

  md += "\n## Field Absence\n\n| Field | Absent |\n|---|---|\n";
  for (schema::Field f : schema::all_fields()) {
    auto it = rep.fields.find(f);
    if (it == rep.fields.end()) continue;
    md += "| " + schema::field_path(f) + " | " +
          std::to_string(it->second.absence_count) + " |\n";
  }
  return md;
}

inline std::string report_csv(const RunReport& rep) {
  using detail::full;
  std::string csv = "section,field,metric,value\n";
  csv += "run,,fold_id," + std::to_string(rep.fold_id) + "\n";
  csv += "run,,folds_aggregated," + std::to_string(rep.folds_aggregated) +
         "\n";
  csv += "run,,sample_count," + std::to_string(rep.sample_count) + "\n";
  csv += "run,,parse_failure_count," +
         std::to_string(rep.parse_failure_count) + "\n";
  for (schema::Field f : schema::all_fields()) {
    auto it = rep.fields.find(f);
    if (it == rep.fields.end()) continue;
    const auto& fs = it->second;
    const std::string path = schema::field_path(f);
    if (fs.kind == MetricKind::kClassification) {
      csv += "field," + path + ",accuracy," + full(fs.accuracy) + "\n";
      csv += "field," + path + ",recall," + full(fs.recall) + "\n";
      csv += "field," + path + ",f1," + full(fs.f1) + "\n";
    } else {
      csv += "field," + path + "," + metric_kind_name(fs.kind) + "," +
             full(fs.score) + "\n";
    }
    csv += "field," + path + ",absence_count," +
           std::to_string(fs.absence_count) + "\n";
  }
  csv += "generation,,bleu4," + full(rep.generation.bleu4) + "\n";
  csv += "generation,,rouge1," + full(rep.generation.rouge1) + "\n";
  csv += "generation,,rouge2," + full(rep.generation.rouge2) + "\n";
  csv += "generation,,rouge_l," + full(rep.generation.rouge_l) + "\n";
  return csv;
}

// ---- inter-annotator agreement ----

namespace detail {

// canonical string label for a field value, used for agreement counting
inline std::string field_label(const schema::ExtractionRecord& r,
                               schema::Field f) {
  using F = schema::Field;
  switch (f) {
    case F::kProvince:
    case F::kCity:
    case F::kIllegalMeans:
    case F::kPoliceHandling:
      return gold_string(r, f);
    case F::kCybercrime:
    case F::kCompletedIllegalAct:
    case F::kCaseClosure:
    case F::kDeathsExistence:
    case F::kInjuriesExistence:
    case F::kEconomicLossesExistence:
    case F::kSocialImpact:
      return gold_bool(r, f) ? "true" : "false";
    case F::kDeathsNumber:
    case F::kInjuriesNumber:
      return std::to_string(gold_number(r, f));
    case F::kTypeCodes: {
      std::string out;  // set iteration is already sorted
      for (const auto& c : r.event.type_codes) {
        if (!out.empty()) out += ',';
        out += c;
      }
      return out;
    }
    case F::kEconomicLossesAmount:
      return schema::detail::amount_literal(
          r.impact.economic_losses.amount_cents);
  }
  return "";
}

}  // namespace detail

struct FieldAgreement {
  bool kappa_applicable = false;   // kappa is reported for categorical fields
  std::optional<double> kappa;     // empty when marginals are degenerate
  std::size_t disagreements = 0;
};

struct Disagreement {
  std::string record_id;
  std::string field;
  std::string a_value;
  std::string b_value;
};

struct AgreementReport {
  std::size_t sample_count = 0;
  std::map<schema::Field, FieldAgreement> fields;
  std::optional<double> pooled_boolean_kappa;  // empty when degenerate
  std::vector<Disagreement> rows;
};

// kappa is computed for the seven booleans, province, city, and the code
// set treated as one label; numeric and free-text fields only contribute
// disagreement rows.
inline AgreementReport annotator_agreement(
    const std::vector<schema::GoldRecord>& a,
    const std::vector<schema::GoldRecord>& b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  if (a.empty()) throw EmptyRun();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].record_id != b[i].record_id)
      throw IdMisalignment(i, a[i].record_id, b[i].record_id);
  }

  using F = schema::Field;
  const std::set<F> kappa_fields = {
      F::kCybercrime, F::kCompletedIllegalAct, F::kCaseClosure,
      F::kDeathsExistence, F::kInjuriesExistence,
      F::kEconomicLossesExistence, F::kSocialImpact,
      F::kProvince, F::kCity, F::kTypeCodes,
  };
  const std::set<F> boolean_fields = {
      F::kCybercrime, F::kCompletedIllegalAct, F::kCaseClosure,
      F::kDeathsExistence, F::kInjuriesExistence,
      F::kEconomicLossesExistence, F::kSocialImpact,
  };

  AgreementReport rep;
  rep.sample_count = a.size();
  std::vector<std::string> pooled_a, pooled_b;

  for (F f : schema::all_fields()) {
    FieldAgreement fa;
    fa.kappa_applicable = kappa_fields.count(f) != 0;
    std::vector<std::string> la, lb;
    la.reserve(a.size());
    lb.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      la.push_back(detail::field_label(a[i].record, f));
      lb.push_back(detail::field_label(b[i].record, f));
      if (la.back() != lb.back()) {
        ++fa.disagreements;
        rep.rows.push_back({a[i].record_id, schema::field_path(f),
                            la.back(), lb.back()});
      }
    }
    if (fa.kappa_applicable) {
      try {
        fa.kappa = metrics::cohen_kappa(la, lb).kappa;
      } catch (const metrics::DegenerateMarginals&) {
        fa.kappa = std::nullopt;
      }
    }
    if (boolean_fields.count(f) != 0) {
      pooled_a.insert(pooled_a.end(), la.begin(), la.end());
      pooled_b.insert(pooled_b.end(), lb.begin(), lb.end());
    }
    rep.fields[f] = fa;
  }

  try {
    rep.pooled_boolean_kappa = metrics::cohen_kappa(pooled_a, pooled_b).kappa;
  } catch (const metrics::DegenerateMarginals&) {
    rep.pooled_boolean_kappa = std::nullopt;
  }
  return rep;
}

inline nlohmann::ordered_json agreement_json(const AgreementReport& rep) {
  nlohmann::ordered_json j;
  j["sample_count"] = rep.sample_count;
  nlohmann::ordered_json fields = nlohmann::ordered_json::object();
  for (schema::Field f : schema::all_fields()) {
    const auto& fa = rep.fields.at(f);
    nlohmann::ordered_json fj;
    if (fa.kappa_applicable) {
      if (fa.kappa.has_value())
        fj["kappa"] = *fa.kappa;
      else
        fj["kappa"] = "undefined";
    }
    fj["disagreements"] = fa.disagreements;
    fields[schema::field_path(f)] = std::move(fj);
  }
  j["fields"] = std::move(fields);
  if (rep.pooled_boolean_kappa.has_value())
    j["pooled_boolean_kappa"] = *rep.pooled_boolean_kappa;
  else
    j["pooled_boolean_kappa"] = "undefined";
  return j;
}

inline std::string agreement_markdown(const AgreementReport& rep) {
  std::string md = "# Annotator Agreement\n\n";
  md += "- samples: " + std::to_string(rep.sample_count) + "\n";
  md += "- pooled boolean kappa: ";
  md += rep.pooled_boolean_kappa.has_value()
            ? detail::fixed2(*rep.pooled_boolean_kappa)
            : std::string("undefined");
  md += "\n\n| Field | Kappa | Disagreements |\n|---|---|---|\n";
  for (schema::Field f : schema::all_fields()) {
    const auto& fa = rep.fields.at(f);
    std::string kappa = "-";
    if (fa.kappa_applicable) {
      kappa = fa.kappa.has_value() ? detail::fixed2(*fa.kappa)
                                   : std::string("undefined");
    }
    md += "| " + schema::field_path(f) + " | " + kappa + " | " +
          std::to_string(fa.disagreements) + " |\n";
  }
  return md;
}

}  // namespace briefkit::eval
