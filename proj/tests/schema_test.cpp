#include "briefkit/schema.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "test_support.hpp"

using namespace briefkit;

namespace {

// the canonical serialization of the all-default record, frozen byte for
// byte. any drift in key order, spacing, or value formatting fails here.
const std::string kDefaultRecordJson =
    "{\"Location\":{\"Province\":\"\",\"City\":\"\"},"
    "\"Event Characteristics\":{\"Type Code\":[],\"Illegal Means\":\"\","
    "\"Cybercrime\":false,\"Completed Illegal Act\":false,"
    "\"Case Closure\":false,\"Police Handling\":\"\"},"
    "\"Impact Assessment\":{\"Deaths\":{\"Existence\":false,\"Number\":0},"
    "\"Injuries\":{\"Existence\":false,\"Number\":0},"
    "\"Economic Losses\":{\"Existence\":false,\"Amount\":0},"
    "\"Social Impact\":false}}";

}  // namespace

TEST_CASE("canonical_json of the default record is byte-identical") {
  CHECK(schema::canonical_json(schema::ExtractionRecord{}) ==
        kDefaultRecordJson);
}

TEST_CASE("canonical_json orders type codes ascending") {
  schema::ExtractionRecord r;
  r.event.type_codes = {"04", "02"};
  auto s = schema::canonical_json(r);
  CHECK(s.find("\"Type Code\":[\"02\",\"04\"]") != std::string::npos);
}

TEST_CASE("canonical_json amount formatting") {
  schema::ExtractionRecord r;
  r.impact.economic_losses.existence = true;
  r.impact.economic_losses.amount_cents = 500050;
  CHECK(schema::canonical_json(r).find("\"Amount\":5000.50") !=
        std::string::npos);
  r.impact.economic_losses.amount_cents = 1200000;
  CHECK(schema::canonical_json(r).find("\"Amount\":12000") !=
        std::string::npos);
  r.impact.economic_losses.amount_cents = 305;
  CHECK(schema::canonical_json(r).find("\"Amount\":3.05") !=
        std::string::npos);
}

TEST_CASE("canonical_json escapes embedded quotes") {
  schema::ExtractionRecord r;
  r.event.illegal_means = "声称\"安全账户\"诈骗";
  auto s = schema::canonical_json(r);
  CHECK(s.find("声称\\\"安全账户\\\"诈骗") != std::string::npos);
  CHECK(schema::parse_record(s) == r);
}

TEST_CASE("canonical_json refuses invalid records") {
  schema::ExtractionRecord r;
  r.impact.deaths.number = 3;  // existence still false
  CHECK_THROWS_AS(schema::canonical_json(r), schema::InvalidRecord);
}

TEST_CASE("parse then canonical_json is the identity on random records") {
  std::mt19937_64 rng(20240817);
  for (int i = 0; i < 1000; ++i) {
    auto r = testsupport::random_valid_record(rng);
    auto s = schema::canonical_json(r);
    auto back = schema::parse_record(s);
    REQUIRE(back == r);
    REQUIRE(schema::canonical_json(back) == s);
  }
}

TEST_CASE("parse_record accepts reordered keys and whitespace") {
  const std::string text = R"({
    "Impact Assessment": {
      "Social Impact": true,
      "Economic Losses": {"Amount": 2500.50, "Existence": true},
      "Injuries": {"Number": 2, "Existence": true},
      "Deaths": {"Number": 0, "Existence": false}
    },
    "Location": {"City": "青岛市", "Province": "山东省"},
    "Event Characteristics": {
      "Police Handling": "已刑事拘留",
      "Case Closure": false,
      "Completed Illegal Act": true,
      "Cybercrime": true,
      "Illegal Means": "电信诈骗",
      "Type Code": ["03"]
    }
  })";
  auto r = schema::parse_record(text);
  CHECK(r.location.province == "山东省");
  CHECK(r.impact.economic_losses.amount_cents == 250050);
  CHECK(r.impact.injuries.number == 2);
  CHECK(r.event.type_codes == std::set<std::string>{"03"});
}

TEST_CASE("parse_record rejects structural problems") {
  CHECK_THROWS_AS(schema::parse_record("not json"), schema::MalformedJson);
  CHECK_THROWS_AS(schema::parse_record("{}"), schema::SchemaViolation);

  // missing one leaf
  std::string missing = kDefaultRecordJson;
  auto pos = missing.find(",\"Social Impact\":false");
  missing.erase(pos, std::string(",\"Social Impact\":false").size());
  CHECK_THROWS_AS(schema::parse_record(missing), schema::SchemaViolation);

  // wrong type
  std::string wrong = kDefaultRecordJson;
  pos = wrong.find("\"Cybercrime\":false");
  wrong.replace(pos, std::string("\"Cybercrime\":false").size(),
                "\"Cybercrime\":\"no\"");
  CHECK_THROWS_AS(schema::parse_record(wrong), schema::SchemaViolation);

  // duplicate type code
  std::string dup = kDefaultRecordJson;
  pos = dup.find("\"Type Code\":[]");
  dup.replace(pos, std::string("\"Type Code\":[]").size(),
              "\"Type Code\":[\"02\",\"02\"]");
  CHECK_THROWS_AS(schema::parse_record(dup), schema::SchemaViolation);

  // semantically invalid
  std::string bad = kDefaultRecordJson;
  pos = bad.find("\"Deaths\":{\"Existence\":false,\"Number\":0}");
  bad.replace(pos,
              std::string("\"Deaths\":{\"Existence\":false,\"Number\":0}")
                  .size(),
              "\"Deaths\":{\"Existence\":false,\"Number\":4}");
  CHECK_THROWS_AS(schema::parse_record(bad), schema::SchemaViolation);
}

TEST_CASE("validate reports each problem with its path") {
  schema::ExtractionRecord r;
  r.event.type_codes = {"02", "99"};
  r.impact.injuries.number = -2;
  r.impact.economic_losses.amount_cents = 500;  // existence false
  auto rep = schema::validate(r);
  CHECK_FALSE(rep.valid());
  REQUIRE(rep.violations.size() == 3);
  CHECK(rep.violations[0].kind == "unknown_type_code");
  CHECK(rep.violations[0].detail == "99");
  CHECK(rep.violations[1].kind == "negative_count");
  CHECK(rep.violations[1].path == "impact.injuries.number");
  CHECK(rep.violations[2].kind == "existence_inconsistent");
}

TEST_CASE("validate warns on empty type codes but stays valid") {
  auto rep = schema::validate(schema::ExtractionRecord{});
  CHECK(rep.valid());
  REQUIRE(rep.warnings.size() == 1);
  CHECK(rep.warnings[0].kind == "empty_type_codes");
}

TEST_CASE("type code table") {
  CHECK(schema::code_label("02") == "Endangering public safety");
  CHECK(schema::code_label("11") == "Suicide");
  CHECK(schema::is_valid_type_code("07"));
  CHECK_FALSE(schema::is_valid_type_code("12"));
  CHECK_FALSE(schema::is_valid_type_code("2"));
  CHECK_THROWS_AS(schema::code_label("00"), schema::UnknownTypeCode);
  CHECK(schema::all_type_codes().size() == 11);
  CHECK(schema::all_type_codes().front() == "01");
  CHECK(schema::all_type_codes().back() == "11");
}

TEST_CASE("field paths round-trip") {
  CHECK(schema::all_fields().size() == schema::kFieldCount);
  for (auto f : schema::all_fields()) {
    auto path = schema::field_path(f);
    auto back = schema::field_from_path(path);
    REQUIRE(back.has_value());
    CHECK(*back == f);
  }
  CHECK_FALSE(schema::field_from_path("nope").has_value());
}
