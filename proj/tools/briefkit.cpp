// briefkit: batch pipeline for turning chinese police-briefing posts into
// validated structured records and scoring extraction quality.
//
// subcommands: clean, synth, split, infer, eval, kappa, report.
// exit codes: 0 success, 1 usage or configuration problem, 2 data problem,
// 3 every record in an inference batch failed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "briefkit/client.hpp"
#include "briefkit/corpus.hpp"
#include "briefkit/eval.hpp"
#include "briefkit/io.hpp"
#include "briefkit/outparse.hpp"
#include "briefkit/prompts.hpp"
#include "briefkit/schema.hpp"

namespace fs = std::filesystem;
using namespace briefkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitEndpoint = 3;

// configuration mistakes that the user must fix before anything can run
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& detail) : Error(detail) {}
};

struct AppConfig {
  client::EndpointConfig endpoint;
  bool has_endpoint = false;
  std::size_t min_length = 15;
  std::size_t k_folds = 5;
  std::size_t few_shot = 0;
  std::string templates_path;
};

void reject_unknown_keys(const nlohmann::json& j,
                         const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (known.count(key) == 0)
      throw UsageError("unknown config key " + where + "." + key);
  }
}

AppConfig load_config(const std::string& path) {
  AppConfig cfg;
  if (path.empty()) return cfg;
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const io::FileError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw UsageError("config " + path + " is not a json object");
  reject_unknown_keys(
      j, {"endpoint", "min_length", "k_folds", "few_shot", "templates"},
      "config");
  if (j.contains("min_length"))
    cfg.min_length = j["min_length"].get<std::size_t>();
  if (j.contains("k_folds")) cfg.k_folds = j["k_folds"].get<std::size_t>();
  if (j.contains("few_shot")) cfg.few_shot = j["few_shot"].get<std::size_t>();
  if (j.contains("templates"))
    cfg.templates_path = j["templates"].get<std::string>();
  if (j.contains("endpoint")) {
    const auto& e = j["endpoint"];
    reject_unknown_keys(e,
                        {"base_url", "model", "api_key_env", "temperature",
                         "max_output_tokens", "timeout_s", "max_retries",
                         "backoff_base_s", "max_parallel_requests", "stream"},
                        "config.endpoint");
    if (!e.contains("base_url") || !e.contains("model"))
      throw UsageError("config.endpoint needs base_url and model");
    cfg.endpoint.base_url = e["base_url"].get<std::string>();
    cfg.endpoint.model = e["model"].get<std::string>();
    if (e.contains("api_key_env"))
      cfg.endpoint.api_key_env = e["api_key_env"].get<std::string>();
    if (e.contains("temperature"))
      cfg.endpoint.temperature = e["temperature"].get<double>();
    if (e.contains("max_output_tokens"))
      cfg.endpoint.max_output_tokens = e["max_output_tokens"].get<int>();
    if (e.contains("timeout_s"))
      cfg.endpoint.timeout_s = e["timeout_s"].get<double>();
    if (e.contains("max_retries"))
      cfg.endpoint.max_retries = e["max_retries"].get<int>();
    if (e.contains("backoff_base_s"))
      cfg.endpoint.backoff_base_s = e["backoff_base_s"].get<double>();
    if (e.contains("max_parallel_requests"))
      cfg.endpoint.max_parallel_requests =
          e["max_parallel_requests"].get<int>();
    if (e.contains("stream")) cfg.endpoint.stream = e["stream"].get<bool>();
    cfg.has_endpoint = true;
  }
  return cfg;
}

std::string resolve_path(const std::string& flag, const std::string& work_dir,
                         const std::string& default_name) {
  if (!flag.empty()) return flag;
  return (fs::path(work_dir) / default_name).string();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::FileError(path, "cannot open for reading");
  return in;
}

prompts::PromptTemplates load_templates_or_default(const std::string& path) {
  if (path.empty()) return prompts::default_templates();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("templates: cannot open " + path);
  try {
    return prompts::load_templates(in);
  } catch (const Error& e) {
    throw UsageError("templates " + path + ": " + e.what());
  }
}

std::set<std::string> read_id_file(const std::string& path) {
  std::set<std::string> ids;
  auto in = open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string id = text::trim(line);
    if (!id.empty()) ids.insert(id);
  }
  return ids;
}

std::map<std::string, schema::ExtractionRecord> gold_map(
    const std::string& path) {
  auto in = open_input(path);
  std::map<std::string, schema::ExtractionRecord> out;
  for (auto& g : io::golds_from_jsonl(in)) {
    if (!out.emplace(g.record_id, g.record).second)
      throw Error("duplicate gold record id: " + g.record_id);
  }
  return out;
}

// ---- clean ----

struct CleanOpts {
  std::string input;
  std::string output;
  std::string stats;
  std::string exclude_ids;
  std::size_t min_length = 0;  // 0 = take the config value
  bool strict = false;
};

int run_clean(const AppConfig& cfg, const std::string& work_dir,
              const CleanOpts& opts) {
  auto in = open_input(opts.input);
  auto ingested = corpus::ingest_csv(in, {}, opts.strict);
  for (const auto& issue : ingested.issues) {
    std::cerr << "clean: skipped row " << issue.line << ": " << issue.reason
              << "\n";
  }

  std::size_t excluded = 0;
  std::vector<corpus::RawPost> posts;
  if (!opts.exclude_ids.empty()) {
    auto drop = read_id_file(opts.exclude_ids);
    for (auto& p : ingested.posts) {
      if (drop.count(p.post_id) != 0)
        ++excluded;
      else
        posts.push_back(std::move(p));
    }
  } else {
    posts = std::move(ingested.posts);
  }

  corpus::CleanConfig cc;
  cc.min_length = opts.min_length != 0 ? opts.min_length : cfg.min_length;
  auto result = corpus::clean_pipeline(posts, cc);

  std::string out_path = resolve_path(opts.output, work_dir,
                                      "briefings.jsonl");
  std::string body;
  std::size_t kept = 0;
  for (const auto& r : result.records) {
    if (r.dropped) continue;
    body += io::briefing_line(r) + "\n";
    ++kept;
  }
  io::write_file(out_path, body);
  io::write_file(resolve_path(opts.stats, work_dir, "cleaning_stats.json"),
                 io::cleaning_stats_json(result.stats, excluded));
  std::cerr << "clean: kept " << kept << " of " << result.stats.input_count
            << " posts (" << excluded << " excluded up front)\n";
  return kExitOk;
}

// ---- synth ----

struct SynthOpts {
  std::string briefings;
  std::string gold;
  std::string output;
  std::string manifest;
  std::string templates;
};

int run_synth(const AppConfig& cfg, const std::string& work_dir,
              std::uint64_t seed, const SynthOpts& opts) {
  auto bin = open_input(opts.briefings);
  auto briefings = io::briefings_from_jsonl(bin);
  auto golds = gold_map(opts.gold);

  std::vector<schema::GoldRecord> aligned;
  aligned.reserve(briefings.size());
  for (const auto& b : briefings) {
    auto it = golds.find(b.record_id);
    if (it == golds.end())
      throw Error("no gold record for briefing " + b.record_id);
    aligned.push_back({it->first, it->second});
  }
  if (golds.size() > aligned.size()) {
    std::cerr << "synth: " << golds.size() - aligned.size()
              << " gold records have no matching briefing; ignored\n";
  }

  auto templates = load_templates_or_default(
      !opts.templates.empty() ? opts.templates : cfg.templates_path);
  auto samples = prompts::synth_dataset(templates, briefings, aligned);
  io::write_file(resolve_path(opts.output, work_dir, "dataset.jsonl"),
                 prompts::dataset_jsonl(samples));

  prompts::TrainingManifest manifest;
  manifest.folds = cfg.k_folds;
  manifest.seed = seed;
  io::write_file(
      resolve_path(opts.manifest, work_dir, "training_manifest.json"),
      prompts::manifest_json(manifest).dump(2) + "\n");
  std::cerr << "synth: wrote " << samples.size() << " chat samples\n";
  return kExitOk;
}

// ---- split ----

struct SplitOpts {
  std::string briefings;
  std::string output;
  std::size_t k = 0;  // 0 = take the config value
};

int run_split(const AppConfig& cfg, const std::string& work_dir,
              std::uint64_t seed, const SplitOpts& opts) {
  auto in = open_input(opts.briefings);
  auto briefings = io::briefings_from_jsonl(in);
  const std::size_t k = opts.k != 0 ? opts.k : cfg.k_folds;
  auto spec = eval::kfold_split(briefings.size(), k, seed);
  io::write_file(resolve_path(opts.output, work_dir, "folds.json"),
                 eval::folds_json(spec).dump() + "\n");
  auto sizes = eval::fold_sizes(spec);
  std::cerr << "split: " << briefings.size() << " records into " << k
            << " folds (sizes";
  for (auto s : sizes) std::cerr << " " << s;
  std::cerr << ")\n";
  return kExitOk;
}

// ---- infer ----

struct InferOpts {
  std::string briefings;
  std::string folds;
  int fold = -1;
  std::string gold;
  std::size_t few_shot = 0;
  bool few_shot_given = false;
  std::string templates;
  std::string output;
  std::string transcripts;
};

int run_infer(const AppConfig& cfg, const std::string& work_dir,
              const InferOpts& opts) {
  if (!cfg.has_endpoint)
    throw UsageError("infer needs an endpoint section in --config");
  client::resolve_api_key(cfg.endpoint);  // fail fast on a missing key
  client::detail::split_url(cfg.endpoint.base_url);  // and on a broken url

  auto bin = open_input(opts.briefings);
  auto briefings = io::briefings_from_jsonl(bin);
  if (briefings.empty()) throw Error("no briefings to infer");

  if ((opts.fold >= 0) != !opts.folds.empty())
    throw UsageError("--fold and --folds must be given together");

  eval::FoldSpec spec;
  std::vector<corpus::BriefingRecord> batch;
  std::vector<corpus::BriefingRecord> exemplar_pool;
  if (!opts.folds.empty()) {
    spec = eval::folds_from_json(
        nlohmann::json::parse(io::read_file(opts.folds)));
    if (spec.assignments.size() != briefings.size())
      throw Error("folds file covers " +
                  std::to_string(spec.assignments.size()) +
                  " records but there are " +
                  std::to_string(briefings.size()) + " briefings");
    if (opts.fold < 0 || static_cast<std::size_t>(opts.fold) >= spec.k)
      throw UsageError("--fold must be in [0, " + std::to_string(spec.k) +
                       ")");
    for (std::size_t i = 0; i < briefings.size(); ++i) {
      if (spec.assignments[i] == opts.fold)
        batch.push_back(briefings[i]);
      else
        exemplar_pool.push_back(briefings[i]);
    }
  } else {
    batch = briefings;
  }
  if (batch.empty()) throw Error("selected fold is empty");

  const std::size_t few_shot =
      opts.few_shot_given ? opts.few_shot : cfg.few_shot;
  std::vector<prompts::Exemplar> exemplars;
  if (few_shot > 0) {
    if (opts.folds.empty())
      throw UsageError(
          "--few-shot needs --folds/--fold so exemplars stay out of the "
          "scored fold");
    if (opts.gold.empty())
      throw UsageError("--few-shot needs --gold for exemplar answers");
    auto golds = gold_map(opts.gold);
    if (few_shot > exemplar_pool.size())
      throw Error("asked for " + std::to_string(few_shot) +
                  " exemplars but only " +
                  std::to_string(exemplar_pool.size()) +
                  " records sit outside the fold");
    for (std::size_t i = 0; i < few_shot; ++i) {
      const auto& b = exemplar_pool[i];
      auto it = golds.find(b.record_id);
      if (it == golds.end())
        throw Error("no gold record for exemplar " + b.record_id);
      exemplars.push_back({b.text, it->second});
    }
  }

  auto templates = load_templates_or_default(
      !opts.templates.empty() ? opts.templates : cfg.templates_path);

  std::vector<client::BatchItem> items;
  items.reserve(batch.size());
  for (const auto& b : batch) {
    std::string user = prompts::render_user_prompt(templates, b.text);
    user = prompts::few_shot_augment(user, exemplars, few_shot);
    items.push_back(
        {b.record_id,
         {{"system", templates.system_template}, {"user", user}}});
  }

  auto transcripts = client::run_batch(cfg.endpoint, items);

  std::string tbody, rbody;
  std::size_t ok = 0;
  for (const auto& t : transcripts) {
    tbody += client::transcript_json(t).dump() + "\n";
    io::RawOutput raw{t.record_id, t.ok ? t.response_text : ""};
    rbody += io::raw_output_line(raw) + "\n";
    if (t.ok) ++ok;
  }
  io::write_file(
      resolve_path(opts.transcripts, work_dir, "transcripts.jsonl"), tbody);
  io::write_file(resolve_path(opts.output, work_dir, "raw_outputs.jsonl"),
                 rbody);
  std::cerr << "infer: " << ok << "/" << transcripts.size()
            << " requests succeeded\n";
  if (ok == 0) {
    std::cerr << "infer: every request failed; first error: "
              << transcripts.front().error << "\n";
    return kExitEndpoint;
  }
  return kExitOk;
}

// ---- eval ----

struct EvalOpts {
  std::string raw;
  std::string gold;
  int fold = 0;
  std::string predictions;
  std::string report_prefix;
};

int run_eval(const AppConfig&, const std::string& work_dir,
             const EvalOpts& opts) {
  auto rin = open_input(opts.raw);
  auto raws = io::raw_outputs_from_jsonl(rin);
  if (raws.empty()) throw Error("no raw outputs to score");
  auto golds = gold_map(opts.gold);

  std::vector<eval::PredRecord> preds;
  std::vector<schema::GoldRecord> aligned;
  std::string pbody;
  for (const auto& r : raws) {
    auto it = golds.find(r.record_id);
    if (it == golds.end())
      throw Error("no gold record for output " + r.record_id);
    eval::PredRecord p;
    p.record_id = r.record_id;
    p.raw_output = r.output;
    p.parsed = outparse::parse_output(r.output);
    pbody += io::prediction_line(p) + "\n";
    preds.push_back(std::move(p));
    aligned.push_back({it->first, it->second});
  }

  auto report = eval::score_run(preds, aligned,
                                eval::FieldMetricPlan::defaults(), opts.fold);
  io::write_file(
      resolve_path(opts.predictions, work_dir, "predictions.jsonl"), pbody);
  const std::string prefix =
      resolve_path(opts.report_prefix, work_dir, "report");
  io::write_file(prefix + ".json", eval::report_json(report).dump(2) + "\n");
  io::write_file(prefix + ".md", eval::report_markdown(report));
  io::write_file(prefix + ".csv", eval::report_csv(report));
  std::cerr << "eval: scored " << report.sample_count << " records, "
            << report.parse_failure_count << " parse failures\n";
  return kExitOk;
}

// ---- kappa ----

struct KappaOpts {
  std::string a;
  std::string b;
  std::string output;
  std::string markdown;
  std::string disagreements;
};

int run_kappa(const AppConfig&, const std::string& work_dir,
              const KappaOpts& opts) {
  auto ain = open_input(opts.a);
  auto a = io::golds_from_jsonl(ain);
  auto bin = open_input(opts.b);
  auto b_raw = io::golds_from_jsonl(bin);

  // second annotator may list records in a different order
  std::map<std::string, schema::GoldRecord> by_id;
  for (auto& g : b_raw) {
    if (!by_id.emplace(g.record_id, g).second)
      throw Error("duplicate record id in second annotation: " + g.record_id);
  }
  std::vector<schema::GoldRecord> b;
  b.reserve(a.size());
  for (const auto& g : a) {
    auto it = by_id.find(g.record_id);
    if (it == by_id.end())
      throw Error("record " + g.record_id + " missing from second annotation");
    b.push_back(it->second);
  }

  auto rep = eval::annotator_agreement(a, b);
  io::write_file(resolve_path(opts.output, work_dir, "agreement.json"),
                 eval::agreement_json(rep).dump(2) + "\n");
  io::write_file(resolve_path(opts.markdown, work_dir, "agreement.md"),
                 eval::agreement_markdown(rep));
  std::string dbody;
  for (const auto& row : rep.rows) {
    nlohmann::ordered_json j{{"record_id", row.record_id},
                             {"field", row.field},
                             {"a", row.a_value},
                             {"b", row.b_value}};
    dbody += j.dump() + "\n";
  }
  io::write_file(
      resolve_path(opts.disagreements, work_dir, "disagreements.jsonl"),
      dbody);
  std::cerr << "kappa: compared " << rep.sample_count << " records, "
            << rep.rows.size() << " field disagreements\n";
  return kExitOk;
}

// ---- report ----

struct ReportOpts {
  std::vector<std::string> inputs;
  std::string output_prefix;
};

int run_report(const AppConfig&, const std::string& work_dir,
               const ReportOpts& opts) {
  std::vector<eval::RunReport> reports;
  for (const auto& path : opts.inputs) {
    auto j = nlohmann::json::parse(io::read_file(path), nullptr, false);
    if (j.is_discarded())
      throw Error("report file " + path + " is not valid json");
    reports.push_back(eval::report_from_json(j));
  }
  auto agg = eval::aggregate_folds(reports);
  const std::string prefix =
      resolve_path(opts.output_prefix, work_dir, "aggregate");
  io::write_file(prefix + ".json", eval::report_json(agg).dump(2) + "\n");
  io::write_file(prefix + ".md", eval::report_markdown(agg));
  io::write_file(prefix + ".csv", eval::report_csv(agg));
  std::cerr << "report: aggregated " << reports.size() << " folds over "
            << agg.sample_count << " records\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"police briefing structured-extraction pipeline"};
  app.require_subcommand(1);

  std::string config_path, work_dir = ".";
  std::uint64_t seed = 42;
  app.add_option("--config", config_path, "json configuration file");
  app.add_option("--seed", seed, "seed for splits and manifests");
  app.add_option("--work-dir", work_dir,
                 "directory for default-named artifacts");

  CleanOpts clean_opts;
  auto* clean = app.add_subcommand("clean", "ingest and clean a posts csv");
  clean->add_option("--input", clean_opts.input, "posts csv")->required();
  clean->add_option("--output", clean_opts.output, "briefings jsonl");
  clean->add_option("--stats", clean_opts.stats, "cleaning stats json");
  clean->add_option("--exclude-ids", clean_opts.exclude_ids,
                    "file of post ids to drop before cleaning");
  clean->add_option("--min-length", clean_opts.min_length,
                    "minimum ideograph count");
  clean->add_flag("--strict", clean_opts.strict,
                  "fail on any malformed csv row");

  SynthOpts synth_opts;
  auto* synth =
      app.add_subcommand("synth", "synthesize chat-format training data");
  synth->add_option("--briefings", synth_opts.briefings)->required();
  synth->add_option("--gold", synth_opts.gold)->required();
  synth->add_option("--output", synth_opts.output, "dataset jsonl");
  synth->add_option("--manifest", synth_opts.manifest,
                    "training manifest json");
  synth->add_option("--templates", synth_opts.templates,
                    "prompt template file");

  SplitOpts split_opts;
  auto* split = app.add_subcommand("split", "deal records into cv folds");
  split->add_option("--briefings", split_opts.briefings)->required();
  split->add_option("--output", split_opts.output, "folds json");
  split->add_option("--k", split_opts.k, "fold count");

  InferOpts infer_opts;
  auto* infer =
      app.add_subcommand("infer", "query the endpoint for extractions");
  infer->add_option("--briefings", infer_opts.briefings)->required();
  infer->add_option("--folds", infer_opts.folds, "folds json");
  infer->add_option("--fold", infer_opts.fold, "fold number to score");
  infer->add_option("--gold", infer_opts.gold,
                    "gold jsonl for few-shot exemplars");
  infer
      ->add_option("--few-shot", infer_opts.few_shot,
                   "number of worked examples to prepend")
      ->check(CLI::NonNegativeNumber);
  infer->add_option("--templates", infer_opts.templates,
                    "prompt template file");
  infer->add_option("--output", infer_opts.output, "raw outputs jsonl");
  infer->add_option("--transcripts", infer_opts.transcripts,
                    "transcripts jsonl");

  EvalOpts eval_opts;
  auto* evalc = app.add_subcommand("eval", "score raw outputs against gold");
  evalc->add_option("--raw", eval_opts.raw)->required();
  evalc->add_option("--gold", eval_opts.gold)->required();
  evalc->add_option("--fold", eval_opts.fold, "fold number for the report");
  evalc->add_option("--predictions", eval_opts.predictions,
                    "parsed predictions jsonl");
  evalc->add_option("--report-prefix", eval_opts.report_prefix,
                    "path prefix for report.{json,md,csv}");

  KappaOpts kappa_opts;
  auto* kappa =
      app.add_subcommand("kappa", "inter-annotator agreement over two gold "
                                  "files");
  kappa->add_option("--a", kappa_opts.a)->required();
  kappa->add_option("--b", kappa_opts.b)->required();
  kappa->add_option("--output", kappa_opts.output, "agreement json");
  kappa->add_option("--markdown", kappa_opts.markdown, "agreement markdown");
  kappa->add_option("--disagreements", kappa_opts.disagreements,
                    "disagreement rows jsonl");

  ReportOpts report_opts;
  auto* report =
      app.add_subcommand("report", "aggregate per-fold reports");
  report->add_option("--inputs", report_opts.inputs, "report json files")
      ->required()
      ->expected(-1);
  report->add_option("--output-prefix", report_opts.output_prefix,
                     "path prefix for aggregate.{json,md,csv}");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  infer_opts.few_shot_given = infer->count("--few-shot") > 0;

  try {
    const AppConfig cfg = load_config(config_path);
    if (clean->parsed()) return run_clean(cfg, work_dir, clean_opts);
    if (synth->parsed()) return run_synth(cfg, work_dir, seed, synth_opts);
    if (split->parsed()) return run_split(cfg, work_dir, seed, split_opts);
    if (infer->parsed()) return run_infer(cfg, work_dir, infer_opts);
    if (evalc->parsed()) return run_eval(cfg, work_dir, eval_opts);
    if (kappa->parsed()) return run_kappa(cfg, work_dir, kappa_opts);
    if (report->parsed()) return run_report(cfg, work_dir, report_opts);
    std::cerr << "no subcommand given\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const client::AuthMissing& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const client::BadUrl& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
}
