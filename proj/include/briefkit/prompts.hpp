#pragma once

// prompt templates, chat-format sample synthesis for fine-tuning, few-shot
// augmentation, and the training manifest that records run parameters.

#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "briefkit/corpus.hpp"
#include "briefkit/errors.hpp"
#include "briefkit/schema.hpp"

namespace briefkit::prompts {

class PlaceholderMissing : public Error {
 public:
  PlaceholderMissing() : Error("user template has no briefing placeholder") {}
};

class TemplateInvalid : public Error {
 public:
  explicit TemplateInvalid(const std::string& detail)
      : Error("invalid template: " + detail) {}
};

class IdMismatch : public Error {
 public:
  explicit IdMismatch(const std::string& detail)
      : Error("briefing/gold mismatch: " + detail) {}
};

class InsufficientExemplars : public Error {
 public:
  InsufficientExemplars(std::size_t want, std::size_t have)
      : Error("need " + std::to_string(want) + " exemplars, have " +
              std::to_string(have)) {}
};

class InvariantViolation : public Error {
 public:
  explicit InvariantViolation(const std::string& detail)
      : Error("manifest invariant violated: " + detail) {}
};

// the literal slot the briefing text replaces in the user template.
inline const std::string kBriefingPlaceholder =
    "×××police incident announcements text×××";

struct PromptTemplates {
  std::string system_template;
  std::string user_template;
  bool operator==(const PromptTemplates&) const = default;
};

inline std::size_t count_occurrences(const std::string& haystack,
                                     const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

// the user template must contain the placeholder exactly once; the system
// template must carry every row of the type coding table.
inline void validate_templates(const PromptTemplates& t) {
  const std::size_t slots = count_occurrences(t.user_template,
                                              kBriefingPlaceholder);
  if (slots == 0) throw PlaceholderMissing();
  if (slots > 1)
    throw TemplateInvalid("placeholder appears " + std::to_string(slots) +
                          " times");
  for (const auto& [code, label] : schema::kTypeCodeTable) {
    (void)label;
    if (t.system_template.find(std::string(code)) == std::string::npos)
      throw TemplateInvalid("type code " + std::string(code) +
                            " missing from system template");
  }
}

inline PromptTemplates default_templates() {
  PromptTemplates t;
  std::string table;
  table += "| Code | Type Description |\n";
  table += "|------|------------------|\n";
  for (const auto& [code, label] : schema::kTypeCodeTable) {
    table += "| ";
    table += code;
    table += " | ";
    table += label;
    table += " |\n";
  }
  t.system_template =
      "## Role Setting\n"
      "You are a professional assistant for the structured extraction of "
      "police situation information. Please strictly extract information "
      "from the police situation reports according to the following "
      "requirements.\n"
      "## Output Requirements\n"
      "Please ensure that the output is in strict JSON format, including "
      "the following three parts:\n"
      "1. Location information (province, city)\n"
      "2. Event characteristics (type code, illegal means, etc.)\n"
      "3. Impact assessment (casualties, losses, etc.)\n"
      "### Event Type Coding Table\n" +
      table;
  t.user_template =
      "### Please extract structured information from the following police "
      "situation report:\n" +
      kBriefingPlaceholder +
      "\n### Data Extraction Requirements\n"
      "Location Information:\n"
      "- Province: Fill in the standard provincial name.\n"
      "- City: Fill in the standard prefecture-level city name.\n"
      "Event Characteristics:\n"
      "- Case Type: Select from the event type coding table (multiple "
      "selections are allowed).\n"
      "- Illegal Means: Briefly describe the method used.\n"
      "- Cybercrime: true/false.\n"
      "- Completed Illegal Act: true/false.\n"
      "- Case Closure: true/false.\n"
      "- Police Handling: Describe the handling measures taken.\n"
      "Impact Assessment:\n"
      "- Deaths: Existence (true/false) and the number of deaths.\n"
      "- Injuries: Existence (true/false) and the number of injuries.\n"
      "- Economic Losses: Existence (true/false) and the amount of loss "
      "(in yuan).\n"
      "- Social Impact: true/false.\n"
      "### Output Format Example\n"
      "```json\n" +
      schema::canonical_json(schema::ExtractionRecord{}) +
      "\n```";
  return t;
}

// template files hold both templates, separated by marker lines.
inline const std::string kSystemMarker = "=== SYSTEM ===";
inline const std::string kUserMarker = "=== USER ===";

inline std::string save_templates(const PromptTemplates& t) {
  return kSystemMarker + "\n" + t.system_template + "\n" + kUserMarker +
         "\n" + t.user_template + "\n";
}

inline PromptTemplates load_templates(std::istream& in) {
  PromptTemplates t;
  std::string line;
  int section = 0;  // 0 preamble, 1 system, 2 user
  std::string system_text, user_text;
  bool system_any = false, user_any = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == kSystemMarker) {
      section = 1;
      continue;
    }
    if (line == kUserMarker) {
      section = 2;
      continue;
    }
    if (section == 1) {
      if (system_any) system_text += '\n';
      system_text += line;
      system_any = true;
    } else if (section == 2) {
      if (user_any) user_text += '\n';
      user_text += line;
      user_any = true;
    }
  }
  if (!system_any || !user_any)
    throw TemplateInvalid("template file needs " + kSystemMarker + " and " +
                          kUserMarker + " sections");
  t.system_template = system_text;
  t.user_template = user_text;
  validate_templates(t);
  return t;
}

// substitutes the briefing text into the user template verbatim.
inline std::string render_user_prompt(const PromptTemplates& t,
                                      const std::string& briefing_text) {
  auto pos = t.user_template.find(kBriefingPlaceholder);
  if (pos == std::string::npos) throw PlaceholderMissing();
  std::string out = t.user_template;
  out.replace(pos, kBriefingPlaceholder.size(), briefing_text);
  return out;
}

struct ChatMessage {
  std::string role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

// exactly three messages: system, user, assistant.
struct ChatSample {
  std::vector<ChatMessage> messages;
  bool operator==(const ChatSample&) const = default;
};

struct Exemplar {
  std::string briefing_text;
  schema::ExtractionRecord gold;
};

// prepends the first k exemplars as worked input/output blocks; the target
// briefing inside the rendered prompt stays last. k = 0 is the identity.
inline std::string few_shot_augment(const std::string& user_prompt,
                                    const std::vector<Exemplar>& exemplars,
                                    std::size_t k) {
  if (k > exemplars.size()) throw InsufficientExemplars(k, exemplars.size());
  if (k == 0) return user_prompt;
  std::string out = "### Worked Examples\n";
  for (std::size_t i = 0; i < k; ++i) {
    out += "#### Example " + std::to_string(i + 1) + "\n";
    out += "Input:\n" + exemplars[i].briefing_text + "\n";
    out += "Output:\n```json\n" + schema::canonical_json(exemplars[i].gold) +
           "\n```\n";
  }
  out += "\n";
  out += user_prompt;
  return out;
}

// one supervised sample: the assistant turn is the canonical gold record.
inline ChatSample synth_sample(const PromptTemplates& templates,
                               const corpus::BriefingRecord& briefing,
                               const schema::ExtractionRecord& gold) {
  ChatSample s;
  s.messages.push_back({"system", templates.system_template});
  s.messages.push_back(
      {"user", render_user_prompt(templates, briefing.text)});
  s.messages.push_back({"assistant", schema::canonical_json(gold)});
  return s;
}

// pairwise synthesis over aligned briefing and gold lists.
inline std::vector<ChatSample> synth_dataset(
    const PromptTemplates& templates,
    const std::vector<corpus::BriefingRecord>& briefings,
    const std::vector<schema::GoldRecord>& golds) {
  if (briefings.size() != golds.size()) {
    throw IdMismatch("got " + std::to_string(briefings.size()) +
                     " briefings and " + std::to_string(golds.size()) +
                     " gold records");
  }
  std::vector<ChatSample> out;
  out.reserve(briefings.size());
  for (std::size_t i = 0; i < briefings.size(); ++i) {
    if (briefings[i].record_id != golds[i].record_id) {
      throw IdMismatch("briefing " + briefings[i].record_id +
                       " paired with gold " + golds[i].record_id);
    }
    out.push_back(synth_sample(templates, briefings[i], golds[i].record));
  }
  return out;
}

inline nlohmann::ordered_json sample_json(const ChatSample& s) {
  nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
  for (const auto& m : s.messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  return nlohmann::ordered_json{{"messages", std::move(msgs)}};
}

// one json object per line, chat format.
inline std::string dataset_jsonl(const std::vector<ChatSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += sample_json(s).dump();
    out += '\n';
  }
  return out;
}

// reproducibility parameters for a fine-tuning run. effective batch must
// stay the product of per-device batch and accumulation steps.
struct TrainingManifest {
  std::string base_model = "Qwen2.5-7B-Instruct";
  std::string adaptation = "lora";
  std::size_t max_seq_len = 1024;
  std::size_t epochs = 60;
  double learning_rate = 2e-4;
  std::string scheduler = "cosine";
  double warmup_ratio = 0.03;
  std::size_t per_device_batch = 4;
  std::size_t grad_accum_steps = 8;
  std::size_t effective_batch = 32;
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  bool operator==(const TrainingManifest&) const = default;
};

inline void validate_manifest(const TrainingManifest& m) {
  if (m.effective_batch != m.per_device_batch * m.grad_accum_steps) {
    throw InvariantViolation(
        "effective_batch " + std::to_string(m.effective_batch) + " != " +
        std::to_string(m.per_device_batch) + " * " +
        std::to_string(m.grad_accum_steps));
  }
}

inline nlohmann::ordered_json manifest_json(const TrainingManifest& m) {
  validate_manifest(m);
  return nlohmann::ordered_json{
      {"base_model", m.base_model},
      {"adaptation", m.adaptation},
      {"max_seq_len", m.max_seq_len},
      {"epochs", m.epochs},
      {"learning_rate", m.learning_rate},
      {"scheduler", m.scheduler},
      {"warmup_ratio", m.warmup_ratio},
      {"per_device_batch", m.per_device_batch},
      {"grad_accum_steps", m.grad_accum_steps},
      {"effective_batch", m.effective_batch},
      {"folds", m.folds},
      {"seed", m.seed},
  };
}

inline TrainingManifest manifest_from_json(const nlohmann::json& j) {
  TrainingManifest m;
  m.base_model = j.at("base_model").get<std::string>();
  m.adaptation = j.at("adaptation").get<std::string>();
  m.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  m.epochs = j.at("epochs").get<std::size_t>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.scheduler = j.at("scheduler").get<std::string>();
  m.warmup_ratio = j.at("warmup_ratio").get<double>();
  m.per_device_batch = j.at("per_device_batch").get<std::size_t>();
  m.grad_accum_steps = j.at("grad_accum_steps").get<std::size_t>();
  m.effective_batch = j.at("effective_batch").get<std::size_t>();
  m.folds = j.at("folds").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  validate_manifest(m);
  return m;
}

}  // namespace briefkit::prompts
