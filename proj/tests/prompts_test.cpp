#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <sstream>

#include "briefkit/outparse.hpp"
#include "briefkit/prompts.hpp"
#include "test_support.hpp"

using namespace briefkit;

namespace {

corpus::BriefingRecord make_briefing(std::string id, std::string text) {
  corpus::BriefingRecord r;
  r.record_id = id;
  r.source_post_id = id;
  r.text = text;
  r.cjk_count = corpus::count_cjk(r.text);
  r.dropped = false;
  r.drop_reason = corpus::DropReason::kNone;
  return r;
}

}  // namespace

TEST_CASE("default templates pass validation") {
  auto t = prompts::default_templates();
  REQUIRE_NOTHROW(prompts::validate_templates(t));
}

TEST_CASE("default system template carries the full coding table") {
  auto t = prompts::default_templates();
  for (const auto& [code, label] : schema::kTypeCodeTable) {
    INFO("code " << code);
    CHECK(t.system_template.find(std::string(code)) != std::string::npos);
    CHECK(t.system_template.find(std::string(label)) != std::string::npos);
  }
  CHECK(t.system_template.find("Role Setting") != std::string::npos);
  CHECK(t.system_template.find("Output Requirements") != std::string::npos);
  CHECK(t.system_template.find("Event Type Coding Table") !=
        std::string::npos);
}

TEST_CASE("default user template holds exactly one placeholder") {
  auto t = prompts::default_templates();
  CHECK(prompts::count_occurrences(t.user_template,
                                   prompts::kBriefingPlaceholder) == 1);
  CHECK(t.user_template.find("Output Format Example") != std::string::npos);
}

TEST_CASE("format example in the user template is the default record") {
  auto t = prompts::default_templates();
  // the fenced example must round-trip through the output parser to the
  // all-default record.
  std::string blob = outparse::extract_json_blob(t.user_template);
  auto rec = schema::record_from_json(nlohmann::json::parse(blob));
  CHECK(rec == schema::ExtractionRecord{});
  CHECK(blob == schema::canonical_json(schema::ExtractionRecord{}));
}

TEST_CASE("validation failures") {
  auto t = prompts::default_templates();

  SECTION("missing placeholder") {
    t.user_template = "no slot here";
    CHECK_THROWS_AS(prompts::validate_templates(t),
                    prompts::PlaceholderMissing);
  }
  SECTION("doubled placeholder") {
    t.user_template += "\n" + prompts::kBriefingPlaceholder;
    CHECK_THROWS_AS(prompts::validate_templates(t),
                    prompts::TemplateInvalid);
  }
  SECTION("dropped code row") {
    auto pos = t.system_template.find("| 07 |");
    REQUIRE(pos != std::string::npos);
    auto end = t.system_template.find('\n', pos);
    t.system_template.erase(pos, end - pos + 1);
    // the row label may linger elsewhere; the code itself must be gone
    REQUIRE(t.system_template.find("07") == std::string::npos);
    CHECK_THROWS_AS(prompts::validate_templates(t),
                    prompts::TemplateInvalid);
  }
}

TEST_CASE("render substitutes the briefing verbatim") {
  auto t = prompts::default_templates();
  const std::string briefing = "8月1日，昌平区发生一起纠纷。特殊字符 $& \\1 保留。";
  std::string prompt = prompts::render_user_prompt(t, briefing);
  CHECK(prompt.find(briefing) != std::string::npos);
  CHECK(prompt.find(prompts::kBriefingPlaceholder) == std::string::npos);
  // everything before and after the slot is untouched
  auto slot = t.user_template.find(prompts::kBriefingPlaceholder);
  CHECK(prompt.substr(0, slot) == t.user_template.substr(0, slot));
}

TEST_CASE("render without a slot throws") {
  prompts::PromptTemplates t{"sys", "user"};
  CHECK_THROWS_AS(prompts::render_user_prompt(t, "x"),
                  prompts::PlaceholderMissing);
}

TEST_CASE("save and load round trip") {
  auto t = prompts::default_templates();
  std::istringstream in(prompts::save_templates(t));
  auto back = prompts::load_templates(in);
  CHECK(back == t);
}

TEST_CASE("load tolerates CRLF line endings") {
  auto t = prompts::default_templates();
  std::string saved = prompts::save_templates(t);
  std::string crlf;
  for (char c : saved) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  std::istringstream in(crlf);
  auto back = prompts::load_templates(in);
  CHECK(back == t);
}

TEST_CASE("load rejects files without both sections") {
  SECTION("empty") {
    std::istringstream in("");
    CHECK_THROWS_AS(prompts::load_templates(in), prompts::TemplateInvalid);
  }
  SECTION("system only") {
    std::istringstream in("=== SYSTEM ===\nhello\n");
    CHECK_THROWS_AS(prompts::load_templates(in), prompts::TemplateInvalid);
  }
  SECTION("user only") {
    std::istringstream in("=== USER ===\n" + prompts::kBriefingPlaceholder +
                          "\n");
    CHECK_THROWS_AS(prompts::load_templates(in), prompts::TemplateInvalid);
  }
}

TEST_CASE("loaded templates are validated") {
  std::istringstream in("=== SYSTEM ===\nno table\n=== USER ===\n" +
                        prompts::kBriefingPlaceholder + "\n");
  CHECK_THROWS_AS(prompts::load_templates(in), prompts::TemplateInvalid);
}

TEST_CASE("bundled english template file matches the built-in defaults") {
  std::ifstream in(std::string(BRIEFKIT_TEMPLATES_DIR) + "/table1_en.txt");
  REQUIRE(in.good());
  auto t = prompts::load_templates(in);
  CHECK(t == prompts::default_templates());
}

TEST_CASE("bundled chinese template file loads and validates") {
  std::ifstream in(std::string(BRIEFKIT_TEMPLATES_DIR) + "/table1_zh.txt");
  REQUIRE(in.good());
  auto t = prompts::load_templates(in);
  CHECK(t.user_template.find(prompts::kBriefingPlaceholder) !=
        std::string::npos);
  CHECK(t.system_template.find("危害公共安全") != std::string::npos);
  // the fenced example must still be the default record
  std::string blob = outparse::extract_json_blob(t.user_template);
  CHECK(blob == schema::canonical_json(schema::ExtractionRecord{}));
}

TEST_CASE("synth_sample builds the three-turn chat") {
  auto t = prompts::default_templates();
  auto briefing = make_briefing("p1", "昌平区警方通报一起案件。");
  std::mt19937_64 rng(7);
  auto gold = testsupport::random_valid_record(rng);

  auto s = prompts::synth_sample(t, briefing, gold);
  REQUIRE(s.messages.size() == 3);
  CHECK(s.messages[0].role == "system");
  CHECK(s.messages[1].role == "user");
  CHECK(s.messages[2].role == "assistant");
  CHECK(s.messages[0].content == t.system_template);
  CHECK(s.messages[1].content.find(briefing.text) != std::string::npos);
  CHECK(s.messages[2].content == schema::canonical_json(gold));
}

TEST_CASE("synth_sample rejects invalid gold records") {
  auto t = prompts::default_templates();
  auto briefing = make_briefing("p1", "文本");
  schema::ExtractionRecord bad;
  bad.impact.deaths.number = 3;  // count without existence
  CHECK_THROWS_AS(prompts::synth_sample(t, briefing, bad),
                  schema::InvalidRecord);
}

TEST_CASE("synth_dataset aligns by position and checks ids") {
  auto t = prompts::default_templates();
  std::mt19937_64 rng(11);
  std::vector<corpus::BriefingRecord> briefings;
  std::vector<schema::GoldRecord> golds;
  for (int i = 0; i < 5; ++i) {
    std::string id = "p" + std::to_string(i);
    briefings.push_back(make_briefing(id, "通报文本" + std::to_string(i)));
    golds.push_back({id, testsupport::random_valid_record(rng)});
  }

  auto samples = prompts::synth_dataset(t, briefings, golds);
  REQUIRE(samples.size() == 5);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(samples[i].messages[1].content.find(briefings[i].text) !=
          std::string::npos);
    CHECK(samples[i].messages[2].content ==
          schema::canonical_json(golds[i].record));
  }

  SECTION("length mismatch") {
    golds.pop_back();
    CHECK_THROWS_AS(prompts::synth_dataset(t, briefings, golds),
                    prompts::IdMismatch);
  }
  SECTION("id mismatch names both sides") {
    std::swap(golds[1], golds[3]);
    try {
      prompts::synth_dataset(t, briefings, golds);
      FAIL("expected IdMismatch");
    } catch (const prompts::IdMismatch& e) {
      std::string msg = e.what();
      CHECK(msg.find("p1") != std::string::npos);
      CHECK(msg.find("p3") != std::string::npos);
    }
  }
}

TEST_CASE("few_shot_augment") {
  auto t = prompts::default_templates();
  std::string prompt = prompts::render_user_prompt(t, "目标通报文本。");
  std::mt19937_64 rng(3);
  std::vector<prompts::Exemplar> pool;
  for (int i = 0; i < 3; ++i) {
    pool.push_back({"示例通报" + std::to_string(i),
                    testsupport::random_valid_record(rng)});
  }

  SECTION("k = 0 is the identity") {
    CHECK(prompts::few_shot_augment(prompt, pool, 0) == prompt);
  }
  SECTION("k = 2 prepends the first two exemplars in order") {
    std::string out = prompts::few_shot_augment(prompt, pool, 2);
    auto e1 = out.find("#### Example 1");
    auto e2 = out.find("#### Example 2");
    auto b0 = out.find(pool[0].briefing_text);
    auto b1 = out.find(pool[1].briefing_text);
    REQUIRE(e1 != std::string::npos);
    REQUIRE(e2 != std::string::npos);
    REQUIRE(b0 != std::string::npos);
    REQUIRE(b1 != std::string::npos);
    CHECK(e1 < b0);
    CHECK(b0 < e2);
    CHECK(e2 < b1);
    CHECK(out.find(pool[2].briefing_text) == std::string::npos);
    CHECK(out.find(schema::canonical_json(pool[0].gold)) !=
          std::string::npos);
    CHECK(out.find(schema::canonical_json(pool[1].gold)) !=
          std::string::npos);
    // the original prompt, target briefing included, comes last
    REQUIRE(out.size() >= prompt.size());
    CHECK(out.substr(out.size() - prompt.size()) == prompt);
  }
  SECTION("asking for more exemplars than exist throws") {
    CHECK_THROWS_AS(prompts::few_shot_augment(prompt, pool, 4),
                    prompts::InsufficientExemplars);
  }
}

TEST_CASE("dataset jsonl lines carry the chat shape") {
  auto t = prompts::default_templates();
  std::mt19937_64 rng(19);
  std::vector<corpus::BriefingRecord> briefings;
  std::vector<schema::GoldRecord> golds;
  for (int i = 0; i < 3; ++i) {
    std::string id = "w" + std::to_string(i);
    briefings.push_back(make_briefing(id, "通报" + std::to_string(i)));
    golds.push_back({id, testsupport::random_valid_record(rng)});
  }
  auto samples = prompts::synth_dataset(t, briefings, golds);
  std::string jsonl = prompts::dataset_jsonl(samples);

  std::istringstream in(jsonl);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    REQUIRE(j.contains("messages"));
    REQUIRE(j["messages"].size() == 3);
    CHECK(j["messages"][0]["role"] == "system");
    CHECK(j["messages"][1]["role"] == "user");
    CHECK(j["messages"][2]["role"] == "assistant");
    auto rec = schema::record_from_json(
        nlohmann::json::parse(j["messages"][2]["content"].get<std::string>()));
    CHECK(rec == golds[n].record);
    ++n;
  }
  CHECK(n == 3);
  // deterministic bytes
  CHECK(prompts::dataset_jsonl(samples) == jsonl);
}

TEST_CASE("training manifest defaults and invariant") {
  prompts::TrainingManifest m;
  CHECK(m.base_model == "Qwen2.5-7B-Instruct");
  CHECK(m.adaptation == "lora");
  CHECK(m.max_seq_len == 1024);
  CHECK(m.epochs == 60);
  CHECK(m.learning_rate == 2e-4);
  CHECK(m.scheduler == "cosine");
  CHECK(m.warmup_ratio == 0.03);
  CHECK(m.per_device_batch == 4);
  CHECK(m.grad_accum_steps == 8);
  CHECK(m.effective_batch == 32);
  CHECK(m.folds == 5);
  REQUIRE_NOTHROW(prompts::validate_manifest(m));

  m.effective_batch = 33;
  CHECK_THROWS_AS(prompts::validate_manifest(m),
                  prompts::InvariantViolation);
  CHECK_THROWS_AS(prompts::manifest_json(m), prompts::InvariantViolation);
}

TEST_CASE("manifest json round trip") {
  prompts::TrainingManifest m;
  m.seed = 20240817;
  auto j = prompts::manifest_json(m);
  CHECK(j["base_model"] == "Qwen2.5-7B-Instruct");
  CHECK(j["learning_rate"] == 0.0002);
  CHECK(j["seed"] == 20240817);
  auto back = prompts::manifest_from_json(j);
  CHECK(back == m);

  SECTION("missing key is an error") {
    j.erase("epochs");
    CHECK_THROWS(prompts::manifest_from_json(j));
  }
  SECTION("broken invariant is rejected on read") {
    j["grad_accum_steps"] = 7;
    CHECK_THROWS_AS(prompts::manifest_from_json(j),
                    prompts::InvariantViolation);
  }
}
