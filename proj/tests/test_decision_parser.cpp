#include <doctest.h>

#include <nlohmann/json.hpp>

#include "cantor/decision_parser.hpp"
#include "cantor/errors.hpp"
#include "helpers.hpp"

using namespace cantor;
using nlohmann::json;

TEST_CASE("bracketed task line parses to a sub-task") {
  std::string raw =
      "Some preamble.\n"
      "[ChartSense Expert: Extract the values of all the bars from the chart.]\n";
  auto parsed = parse_decision(raw);
  REQUIRE(parsed.decision.sub_tasks.size() == 1);
  CHECK(parsed.decision.sub_tasks[0].module == ExpertModule::ChartSenseExpert);
  CHECK(parsed.decision.sub_tasks[0].instruction ==
        "Extract the values of all the bars from the chart.");
  CHECK(parsed.decision.sub_tasks[0].ordinal == 0);
  CHECK(parsed.decision.raw == raw);
}

TEST_CASE("sections with zero task lines raise no_tasks_found") {
  std::string raw =
      "Principle Analysis:\nnothing needed\n\nModule Selection & Reason:\n\n"
      "Task Allocation:\n";
  ParseOptions options;
  options.policy = DisabledModulePolicy::Skip;
  CHECK_THROWS_WITH_AS(parse_decision(raw, options),
                       doctest::Contains("no extractable"), ParseError);
  // The lenient entry recovers with an empty S_t instead.
  auto parsed = parse_decision_lenient(raw, options);
  CHECK(parsed.decision.sub_tasks.empty());
  CHECK(parsed.diagnostics.recovered);
}

TEST_CASE("unknown module falls back to VisionIQ under the fallback policy") {
  ParseOptions options;
  options.policy = DisabledModulePolicy::FallbackToVisionIQ;
  auto parsed = parse_decision("[OCR Wizard: read the sign]", options);
  REQUIRE(parsed.decision.sub_tasks.size() == 1);
  CHECK(parsed.decision.sub_tasks[0].module == ExpertModule::VisionIQAnalyst);
  CHECK(parsed.decision.sub_tasks[0].instruction == "read the sign");
  REQUIRE(parsed.diagnostics.unknown_modules.size() == 1);
  CHECK(parsed.diagnostics.unknown_modules[0] == "OCR Wizard");
  CHECK(parsed.diagnostics.recovered);
}

TEST_CASE("unknown module is dropped with a warning under skip") {
  ParseOptions options;
  auto parsed = parse_decision_lenient("[OCR Wizard: read the sign]", options);
  CHECK(parsed.decision.sub_tasks.empty());
  CHECK(parsed.diagnostics.unknown_modules ==
        std::vector<std::string>{"OCR Wizard"});
}

TEST_CASE("unknown module raises under policy=error") {
  ParseOptions options;
  options.policy = DisabledModulePolicy::Error;
  CHECK_THROWS_AS(parse_decision("[OCR Wizard: read the sign]", options),
                  ParseError);
}

TEST_CASE("disabled module handling per policy") {
  std::string raw = test::decision_text(
      {{ExpertModule::ChartSenseExpert, "Extract the bar values."},
       {ExpertModule::TextIntelExtractor, "Read the title."}});
  ParseOptions options;
  options.enabled = {ExpertModule::TextIntelExtractor,
                     ExpertModule::VisionIQAnalyst};

  SUBCASE("skip drops the disabled task") {
    auto parsed = parse_decision(raw, options);
    REQUIRE(parsed.decision.sub_tasks.size() == 1);
    CHECK(parsed.decision.sub_tasks[0].module == ExpertModule::TextIntelExtractor);
    // Policy soundness: nothing outside the enabled set survives.
    for (const auto& task : parsed.decision.sub_tasks) {
      CHECK(options.enabled.count(task.module) == 1);
    }
  }
  SUBCASE("fallback reassigns to VisionIQ") {
    options.policy = DisabledModulePolicy::FallbackToVisionIQ;
    auto parsed = parse_decision(raw, options);
    REQUIRE(parsed.decision.sub_tasks.size() == 2);
    CHECK(parsed.decision.sub_tasks[0].module == ExpertModule::VisionIQAnalyst);
    CHECK(parsed.decision.sub_tasks[1].module == ExpertModule::TextIntelExtractor);
  }
  SUBCASE("fallback drops when VisionIQ itself is disabled") {
    options.enabled = {ExpertModule::TextIntelExtractor};
    options.policy = DisabledModulePolicy::FallbackToVisionIQ;
    auto parsed = parse_decision(raw, options);
    REQUIRE(parsed.decision.sub_tasks.size() == 1);
    CHECK(parsed.decision.sub_tasks[0].module == ExpertModule::TextIntelExtractor);
  }
  SUBCASE("error policy raises") {
    options.policy = DisabledModulePolicy::Error;
    CHECK_THROWS_AS(parse_decision(raw, options), ParseError);
  }
}

TEST_CASE("empty input is a typed error") {
  CHECK_THROWS_AS(parse_decision(""), ParseError);
  CHECK_THROWS_AS(parse_decision("   \n\t "), ParseError);
}

TEST_CASE("serialize emits one bracketed line per task, order preserved") {
  Decision d;
  d.principle_analysis = "two steps";
  d.module_selections = {{ExpertModule::ObjectQuantLocator, "count"},
                         {ExpertModule::VisionIQAnalyst, ""}};
  d.sub_tasks = {{ExpertModule::ObjectQuantLocator, "count the dots", 0},
                 {ExpertModule::VisionIQAnalyst, "describe the scene", 1}};
  std::string text = serialize_decision(d);
  size_t first = text.find("[ObjectQuant Locator: count the dots]");
  size_t second = text.find("[VisionIQ Analyst: describe the scene]");
  REQUIRE(first != std::string::npos);
  REQUIRE(second != std::string::npos);
  CHECK(first < second);
}

TEST_CASE("empty principle analysis survives the round trip") {
  Decision d;
  d.module_selections = {{ExpertModule::VisionIQAnalyst, "look"}};
  d.sub_tasks = {{ExpertModule::VisionIQAnalyst, "look at the image", 0}};
  auto parsed = parse_decision(serialize_decision(d));
  CHECK(parsed.decision.principle_analysis.empty());
  CHECK(parsed.decision.structurally_equal(d));
}

TEST_CASE("property: random decisions round-trip through serialize/parse") {
  std::mt19937 rng(20240501);
  for (int i = 0; i < 300; ++i) {
    Decision d = test::random_decision(rng);
    std::string text = serialize_decision(d);
    auto parsed = parse_decision_lenient(text);
    CAPTURE(text);
    CHECK(parsed.decision.structurally_equal(d));
    // Ordinals are strictly increasing and match the textual order.
    for (size_t k = 0; k < parsed.decision.sub_tasks.size(); ++k) {
      CHECK(parsed.decision.sub_tasks[k].ordinal == static_cast<int>(k));
    }
  }
}

TEST_CASE("strict mode accepts only canonical headers and bracketed tasks") {
  ParseOptions strict;
  strict.strict = true;
  std::string canonical = test::decision_text(
      {{ExpertModule::VisionIQAnalyst, "inspect the image"}});
  CHECK(parse_decision(canonical, strict).decision.sub_tasks.size() == 1);

  std::string colon_form =
      "Task Allocation:\nVisionIQ Analyst: inspect the image\n";
  CHECK_THROWS_AS(parse_decision(colon_form, strict), ParseError);
}

TEST_CASE("fixture corpus parses to the expected structures") {
  namespace fs = std::filesystem;
  int checked = 0;
  for (const auto& entry :
       fs::directory_iterator(test::fixtures_dir() / "decisions")) {
    if (entry.path().extension() != ".txt") continue;
    fs::path sidecar = entry.path();
    sidecar.replace_extension(".json");
    REQUIRE(fs::exists(sidecar));
    json expected = json::parse(read_file(sidecar));
    std::string raw = read_file(entry.path());
    CAPTURE(entry.path().string());

    ParseOptions options;
    if (expected.contains("policy")) {
      options.policy = *parse_policy(expected["policy"].get<std::string>());
    }

    if (expected.contains("expect_error")) {
      try {
        parse_decision(raw, options);
        FAIL("expected error for fixture ", entry.path().string());
      } catch (const ParseError& err) {
        CHECK(err.code() == expected["expect_error"].get<std::string>());
      }
      ++checked;
      continue;
    }

    auto parsed = parse_decision(raw, options);
    CHECK(parsed.decision.principle_analysis ==
          expected["principle_analysis"].get<std::string>());
    REQUIRE(parsed.decision.sub_tasks.size() ==
            expected["sub_tasks"].size());
    for (size_t i = 0; i < parsed.decision.sub_tasks.size(); ++i) {
      const auto& task = parsed.decision.sub_tasks[i];
      CHECK(display_name(task.module) ==
            expected["sub_tasks"][i]["module"].get<std::string>());
      CHECK(task.instruction ==
            expected["sub_tasks"][i]["instruction"].get<std::string>());
    }
    REQUIRE(parsed.decision.module_selections.size() ==
            expected["module_selections"].size());
    for (size_t i = 0; i < parsed.decision.module_selections.size(); ++i) {
      const auto& sel = parsed.decision.module_selections[i];
      CHECK(display_name(sel.module) ==
            expected["module_selections"][i]["module"].get<std::string>());
      CHECK(sel.reason ==
            expected["module_selections"][i]["reason"].get<std::string>());
    }
    if (expected.contains("unknown_modules")) {
      CHECK(parsed.diagnostics.unknown_modules ==
            expected["unknown_modules"].get<std::vector<std::string>>());
    }
    ++checked;
  }
  CHECK(checked >= 6);
}

TEST_CASE("fuzz smoke: arbitrary bytes never escape the typed error set") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> len(0, 300);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 500; ++i) {
    std::string input;
    int n = len(rng);
    for (int k = 0; k < n; ++k) input.push_back(static_cast<char>(byte(rng)));
    try {
      auto parsed = parse_decision_lenient(input);
      (void)parsed;
    } catch (const ParseError&) {
      // typed error: fine
    }
  }
}
