#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "cantor/evaluation.hpp"
#include "cantor/errors.hpp"
#include "helpers.hpp"

using namespace cantor;

namespace {

// Fixture traces with known outcomes: `correct_ids` answer the gold index,
// everyone else picks a wrong option.
std::vector<QueryTrace> fixture_traces(const std::vector<QueryRecord>& records,
                                       const std::set<std::string>& correct_ids) {
  std::vector<QueryTrace> traces;
  for (const auto& record : records) {
    QueryTrace trace;
    trace.record_id = record.id;
    trace.config = test::mock_config();
    bool correct = correct_ids.count(record.id) > 0;
    trace.final_answer.choice_index =
        correct ? record.gold.choice_index
                : (record.gold.choice_index + 1) %
                      static_cast<int>(record.options.size());
    trace.final_answer.raw = "Answer";
    traces.push_back(std::move(trace));
  }
  return traces;
}

}  // namespace

TEST_CASE("score_run computes overall and per-tag accuracy") {
  std::vector<QueryRecord> records;
  for (int i = 0; i < 10; ++i) {
    QueryRecord record = test::make_choice_record("s" + std::to_string(i), i % 4);
    record.categories["subject"] = {i < 6 ? "NAT" : "SOC"};
    record.categories["grade"] = {i % 2 ? "G1-6" : "G7-12"};
    records.push_back(std::move(record));
  }
  auto traces = fixture_traces(
      records, {"s0", "s1", "s2", "s3", "s4", "s5", "s6"});  // 7 correct
  RunReport report = score_run(traces, records, "fixture");

  CHECK(report.total == 10);
  CHECK(report.correct == 7);
  CHECK(report.accuracy == doctest::Approx(0.70));
  CHECK(report.unscored == 0);

  CHECK(report.per_tag.at("subject=NAT").count == 6);
  CHECK(report.per_tag.at("subject=NAT").correct == 6);
  CHECK(report.per_tag.at("subject=SOC").count == 4);
  CHECK(report.per_tag.at("subject=SOC").correct == 1);
  // Tag with zero records is absent, not NaN.
  CHECK(report.per_tag.count("subject=LAN") == 0);

  // Recomposition: sum over a partitioning family equals total correct.
  long recomposed = report.per_tag.at("subject=NAT").correct +
                    report.per_tag.at("subject=SOC").correct;
  CHECK(recomposed == report.correct);
}

TEST_CASE("all-correct run scores 1.0") {
  std::vector<QueryRecord> records = {test::make_choice_record("a", 0),
                                      test::make_choice_record("b", 1)};
  auto traces = fixture_traces(records, {"a", "b"});
  CHECK(score_run(traces, records).accuracy == doctest::Approx(1.0));
}

TEST_CASE("score_run rejects missing or unknown traces") {
  std::vector<QueryRecord> records = {test::make_choice_record("a", 0),
                                      test::make_choice_record("b", 1)};
  auto traces = fixture_traces(records, {});
  traces.pop_back();
  try {
    score_run(traces, records);
    FAIL("expected missing_trace");
  } catch (const DataError& err) {
    CHECK(err.code() == "missing_trace");
    CHECK(std::string(err.what()).find("b") != std::string::npos);
  }

  auto unknown = fixture_traces(records, {});
  unknown[0].record_id = "ghost";
  CHECK_THROWS_AS(score_run(unknown, records), DataError);
}

TEST_CASE("module usage proportions per group") {
  std::vector<QueryRecord> records = {test::make_choice_record("u1", 0),
                                      test::make_choice_record("u2", 0)};
  records[0].categories["subject"] = {"NAT"};
  records[1].categories["subject"] = {"SOC"};

  auto traces = fixture_traces(records, {});
  auto add_call = [](QueryTrace& trace, ExpertModule module) {
    SubTaskTrace st;
    st.sub_task = {module, "x", static_cast<int>(trace.sub_tasks.size())};
    st.status = SubAnswerStatus::Ok;
    st.text = "y";
    trace.sub_tasks.push_back(std::move(st));
  };
  add_call(traces[0], ExpertModule::VisionIQAnalyst);
  add_call(traces[0], ExpertModule::VisionIQAnalyst);
  add_call(traces[0], ExpertModule::ObjectQuantLocator);

  auto usage = module_usage_stats(traces, records, "subject");
  REQUIRE(usage.count("NAT") == 1);
  CHECK(usage.at("NAT").proportion.at("VisionIQ Analyst") ==
        doctest::Approx(2.0 / 3.0));
  CHECK(usage.at("NAT").proportion.at("ObjectQuant Locator") ==
        doctest::Approx(1.0 / 3.0));
  CHECK(usage.at("NAT").proportion.at("ChartSense Expert") == 0.0);
  CHECK(usage.at("NAT").proportion.at("TextIntel Extractor") == 0.0);

  // Zero-task group: flagged, all proportions zero.
  REQUIRE(usage.count("SOC") == 1);
  CHECK(usage.at("SOC").zero_denominator);
  for (const auto& [name, p] : usage.at("SOC").proportion) CHECK(p == 0.0);

  // Proportions sum to 1 within 1e-9 when any call exists.
  double sum = 0;
  for (const auto& [name, p] : usage.at("NAT").proportion) sum += p;
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("single trace with a single sub-task yields proportion 1.0") {
  std::vector<QueryRecord> records = {test::make_choice_record("one", 0)};
  auto traces = fixture_traces(records, {});
  SubTaskTrace st;
  st.sub_task = {ExpertModule::ChartSenseExpert, "read", 0};
  st.status = SubAnswerStatus::Ok;
  traces[0].sub_tasks.push_back(st);
  auto usage = module_usage_stats(traces, records, "subject");
  CHECK(usage.at("NAT").proportion.at("ChartSense Expert") == doctest::Approx(1.0));
}

TEST_CASE("report JSON round-trips losslessly") {
  std::vector<QueryRecord> records;
  for (int i = 0; i < 6; ++i) {
    records.push_back(test::make_choice_record("r" + std::to_string(i), 0));
  }
  auto traces = fixture_traces(records, {"r0", "r3"});
  RunReport report = score_run(traces, records, "round-trip");
  RunReport reparsed = report_from_json(report_to_json(report));
  CHECK(reparsed == report);
}

TEST_CASE("markdown and csv renderings carry the expected shapes") {
  std::vector<QueryRecord> records = {test::make_choice_record("m", 0)};
  auto traces = fixture_traces(records, {"m"});
  RunReport report = score_run(traces, records, "fmt");
  std::string md = report_to_markdown(report);
  CHECK(md.find("100.00%") != std::string::npos);
  CHECK(md.find("subject=NAT") != std::string::npos);

  std::string csv = report_to_csv(report);
  CHECK(csv.rfind("tag,metric,value\n", 0) == 0);
  CHECK(csv.find("overall,accuracy,") != std::string::npos);
  // One row per (tag, metric): 3 metrics per tag plus 5 overall rows plus
  // 4 module rows plus header.
  size_t rows = std::count(csv.begin(), csv.end(), '\n');
  CHECK(rows == 1 + 5 + report.per_tag.size() * 3 + 4);
}

namespace {

// Scenario where only TextIntel sub-answers flip outcomes: synthesis is
// correct iff the supplementary section carries the TextIntel fact.
PipelineFactory textintel_factory() {
  return [](const RunConfig& config) {
    auto decision = MockBackend::constant(test::decision_text(
        {{ExpertModule::TextIntelExtractor, "read the label"},
         {ExpertModule::ObjectQuantLocator, "count the items"},
         {ExpertModule::VisionIQAnalyst, "describe the scene"},
         {ExpertModule::ChartSenseExpert, "read the chart"}}));
    auto expert = std::make_shared<MockBackend>([](const BackendRequest& r) {
      if (r.text.find("read the label") != std::string::npos) {
        return std::string("TEXTINTEL_FACT: the label names option B");
      }
      return std::string("generic observation");
    });
    auto synthesis = std::make_shared<MockBackend>([](const BackendRequest& r) {
      if (r.text.find("TEXTINTEL_FACT") != std::string::npos) {
        return std::string("the label settles it\nAnswer: (B)");
      }
      return std::string("guessing\nAnswer: (A)");
    });
    return Pipeline(config, test::shared_prompts(), {decision, expert, synthesis});
  };
}

}  // namespace

TEST_CASE("ablation matrix: only TextIntel flips outcomes") {
  std::vector<QueryRecord> records;
  for (int i = 0; i < 12; ++i) {
    records.push_back(test::make_choice_record("ab" + std::to_string(i), 1));
  }
  RunConfig base = test::mock_config();
  AblationResult result = run_ablation_matrix(records, base, textintel_factory());

  CHECK(result.baseline_accuracy == doctest::Approx(0.0));
  CHECK(result.full_accuracy == doctest::Approx(1.0));

  const auto& enable_ti = result.enable_only.at("TextIntel Extractor");
  CHECK(enable_ti.accuracy == doctest::Approx(1.0));
  CHECK(enable_ti.delta > 0.0);
  for (const char* other :
       {"ObjectQuant Locator", "VisionIQ Analyst", "ChartSense Expert"}) {
    CHECK(result.enable_only.at(other).delta == doctest::Approx(0.0));
    // Full >= every enable-only accuracy in this monotone scenario.
    CHECK(result.full_accuracy >= result.enable_only.at(other).accuracy);
  }
  const auto& disable_ti = result.disable_only.at("TextIntel Extractor");
  CHECK(disable_ti.accuracy == doctest::Approx(0.0));
  CHECK(disable_ti.delta < 0.0);

  // Delta arithmetic is exact (same doubles, same subtraction).
  for (const auto& [name, cell] : result.enable_only) {
    CHECK(cell.delta == cell.accuracy - result.baseline_accuracy);
  }
  for (const auto& [name, cell] : result.disable_only) {
    CHECK(cell.delta == cell.accuracy - result.full_accuracy);
  }

  std::string md = ablation_to_markdown(result);
  CHECK(md.find("(+") != std::string::npos);
  CHECK(md.find("| Baseline |") != std::string::npos);
  CHECK(md.find("| Full |") != std::string::npos);
}

TEST_CASE("visual sweep: constant oracle makes all levels equal") {
  std::vector<QueryRecord> records;
  for (int i = 0; i < 6; ++i) {
    QueryRecord record =
        test::with_image(test::make_choice_record("sv" + std::to_string(i), 0));
    record.captions["rough_caption"] = "a photo";
    record.captions["detailed_caption"] = "a detailed photo of the scene";
    records.push_back(std::move(record));
  }
  PipelineFactory factory = [](const RunConfig& config) {
    return Pipeline(config, test::shared_prompts(),
                    {MockBackend::constant("unused"),
                     MockBackend::constant("unused"),
                     MockBackend::constant("sure\nAnswer: (A)")});
  };
  auto rows = run_visual_sweep(records, test::mock_config(),
                               {VisualLevel::None, VisualLevel::RoughCaption,
                                VisualLevel::DetailedCaption, VisualLevel::Image},
                               factory);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.report.accuracy == doctest::Approx(1.0));
    CHECK(row.skipped_missing_caption == 0);
  }
}

TEST_CASE("visual sweep: image level adds two flips over none on 20 items") {
  std::vector<QueryRecord> records;
  for (int i = 0; i < 20; ++i) {
    QueryRecord record =
        test::with_image(test::make_choice_record("sw" + std::to_string(i), 1));
    record.captions["detailed_caption"] = "caption";
    records.push_back(std::move(record));
  }
  PipelineFactory factory = [](const RunConfig& config) {
    auto synthesis = std::make_shared<MockBackend>([](const BackendRequest& r) {
      bool sees_image = r.text.find(std::string(kImageMarker)) != std::string::npos;
      bool flip_item = r.text.find("item sw0?") != std::string::npos ||
                       r.text.find("item sw1?") != std::string::npos;
      if (sees_image && flip_item) return std::string("clear now\nAnswer: (B)");
      return std::string("unclear\nAnswer: (A)");
    });
    return Pipeline(config, test::shared_prompts(),
                    {MockBackend::constant("unused"),
                     MockBackend::constant("unused"), synthesis});
  };
  auto rows = run_visual_sweep(records, test::mock_config(),
                               {VisualLevel::None, VisualLevel::Image}, factory);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].report.accuracy == doctest::Approx(0.0));
  CHECK(rows[1].report.accuracy == doctest::Approx(0.10));
  CHECK(rows[1].report.accuracy - rows[0].report.accuracy ==
        doctest::Approx(0.10));
}

TEST_CASE("sweep surfaces missing captions as skipped records") {
  std::vector<QueryRecord> records = {
      test::with_image(test::make_choice_record("nc", 0))};  // no captions
  PipelineFactory factory = [](const RunConfig& config) {
    return Pipeline(config, test::shared_prompts(),
                    {MockBackend::constant("x"), MockBackend::constant("x"),
                     MockBackend::constant("ok\nAnswer: (A)")});
  };
  auto rows = run_visual_sweep(records, test::mock_config(),
                               {VisualLevel::DetailedCaption}, factory);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].skipped_missing_caption == 1);
  CHECK(rows[0].report.unscored == 1);
}
