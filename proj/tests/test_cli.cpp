#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "cantor/datasets.hpp"
#include "helpers.hpp"
#include "synthetic_datasets.hpp"

using namespace cantor;
using nlohmann::json;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

const char* cantor_bin() { return std::getenv("CANTOR_BIN"); }

CommandResult run_cli(const test::TempDir& tmp, const std::string& args) {
  auto out_path = tmp.path / "stdout.txt";
  auto err_path = tmp.path / "stderr.txt";
  std::string command = std::string(cantor_bin()) + " --prompts " +
                        std::string(CANTOR_PROMPTS_DIR) + " " + args + " > " +
                        out_path.string() + " 2> " + err_path.string();
  int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = std::filesystem::exists(out_path) ? read_file(out_path) : "";
  result.err = std::filesystem::exists(err_path) ? read_file(err_path) : "";
  return result;
}

// record/replay wrappers accept the prompts flag after the wrapped command.
CommandResult run_cli_raw(const test::TempDir& tmp, const std::string& args) {
  auto out_path = tmp.path / "stdout.txt";
  auto err_path = tmp.path / "stderr.txt";
  std::string command = std::string(cantor_bin()) + " " + args + " > " +
                        out_path.string() + " 2> " + err_path.string();
  int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = std::filesystem::exists(out_path) ? read_file(out_path) : "";
  result.err = std::filesystem::exists(err_path) ? read_file(err_path) : "";
  return result;
}

std::filesystem::path write_fixture_records(const test::TempDir& tmp) {
  std::vector<QueryRecord> records;
  for (int i = 0; i < 5; ++i) {
    // Gold 0 for two records: the builtin mock always answers (A).
    records.push_back(
        test::make_choice_record("fx" + std::to_string(i), i < 2 ? 0 : 1));
  }
  auto path = tmp.path / "records.jsonl";
  save_canonical(path, records);
  return path;
}

}  // namespace

TEST_CASE("cli: import, run, eval, replay, trace, cache" *
          doctest::skip(std::getenv("CANTOR_BIN") == nullptr)) {
  test::TempDir tmp;

  SUBCASE("import scienceqa produces canonical records") {
    auto upstream = test::write_scienceqa_upstream(tmp.path / "up", 8, 3);
    auto out = tmp.path / "imported.jsonl";
    auto result = run_cli(
        tmp, "import scienceqa --source " + upstream.problems_json.string() +
                 " --split test --images " + upstream.image_root.string() +
                 " --out " + out.string());
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("imported 8 records") != std::string::npos);
    CHECK(load_canonical(out).size() == 8);
  }

  SUBCASE("run with an unknown record id exits 3 and names the id") {
    auto records = write_fixture_records(tmp);
    auto result = run_cli(tmp, "run --records " + records.string() +
                                   " --record-id nope-42");
    CHECK(result.exit_code == 3);
    CHECK(result.err.find("nope-42") != std::string::npos);
  }

  SUBCASE("run prints the final answer for a known record") {
    auto records = write_fixture_records(tmp);
    auto result =
        run_cli(tmp, "run --records " + records.string() + " --record-id fx0");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("choice_index") != std::string::npos);
    CHECK(result.out.find("\"rationale\"") != std::string::npos);
  }

  SUBCASE("record then replay an eval run: byte-identical report, exit 0") {
    auto records = write_fixture_records(tmp);
    auto transcript = tmp.path / "session.jsonl";
    auto run_a = tmp.path / "a" / "fixture-run";
    auto run_b = tmp.path / "b" / "fixture-run";

    auto recorded = run_cli_raw(
        tmp, "record --transcript " + transcript.string() + " --prompts " +
                 std::string(CANTOR_PROMPTS_DIR) + " eval --records " +
                 records.string() + " --out " + run_a.string());
    REQUIRE(recorded.exit_code == 0);
    CHECK(std::filesystem::exists(run_a / "report.json"));
    CHECK(std::filesystem::exists(run_a / "manifest.json"));
    // Frozen fixture expectation: builtin mock answers (A); 2/5 golds are 0.
    json report = json::parse(read_file(run_a / "report.json"));
    CHECK(report["accuracy"].get<double>() == doctest::Approx(0.4));

    auto replayed = run_cli_raw(
        tmp, "replay --transcript " + transcript.string() + " --prompts " +
                 std::string(CANTOR_PROMPTS_DIR) + " eval --records " +
                 records.string() + " --out " + run_b.string());
    REQUIRE(replayed.exit_code == 0);
    CHECK(read_file(run_a / "report.json") == read_file(run_b / "report.json"));

    // Trace dump of a replayed record is readable.
    auto shown = run_cli(tmp, "trace show " +
                                  (run_b / "traces" / "fx0.json").string());
    CHECK(shown.exit_code == 0);
    CHECK(shown.out.find("final answer") != std::string::npos);
  }

  SUBCASE("replay with an incomplete transcript exits 4 with the digest") {
    auto records = write_fixture_records(tmp);
    auto transcript = tmp.path / "partial.jsonl";
    auto run_a = tmp.path / "a" / "r";
    auto recorded = run_cli_raw(
        tmp, "record --transcript " + transcript.string() + " --prompts " +
                 std::string(CANTOR_PROMPTS_DIR) + " eval --records " +
                 records.string() + " --limit 2 --out " + run_a.string());
    REQUIRE(recorded.exit_code == 0);

    auto replayed = run_cli_raw(
        tmp, "replay --transcript " + transcript.string() + " --prompts " +
                 std::string(CANTOR_PROMPTS_DIR) + " eval --records " +
                 records.string() + " --out " + (tmp.path / "b" / "r").string());
    CHECK(replayed.exit_code == 4);
    CHECK(replayed.err.find("replay") != std::string::npos);
    CHECK(replayed.err.find("request key") != std::string::npos);
  }

  SUBCASE("caption augments image records via the mock backend") {
    QueryRecord record = test::with_image(test::make_choice_record("cap0", 0));
    auto records = tmp.path / "img_records.jsonl";
    // The mock backend never reads the payload, so a fabricated ref is fine.
    save_canonical(records, {record});
    auto out = tmp.path / "captioned.jsonl";
    auto result = run_cli(tmp, "caption --records " + records.string() +
                                   " --out " + out.string() + " --level detailed");
    CHECK(result.exit_code == 0);
    auto loaded = load_canonical(out);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].captions.count("detailed_caption") == 1);
  }

  SUBCASE("ablate and sweep-visual write their artifacts") {
    auto records = write_fixture_records(tmp);
    auto out = tmp.path / "ab";
    auto result = run_cli(tmp, "ablate --records " + records.string() +
                                   " --limit 3 --out " + out.string());
    CHECK(result.exit_code == 0);
    CHECK(std::filesystem::exists(out / "ablation.json"));
    CHECK(result.out.find("Enable Only") != std::string::npos);

    auto sweep_out = tmp.path / "sw";
    auto sweep = run_cli(tmp, "sweep-visual --records " + records.string() +
                                  " --levels none --out " + sweep_out.string());
    CHECK(sweep.exit_code == 0);
    CHECK(std::filesystem::exists(sweep_out / "sweep.csv"));
  }

  SUBCASE("cache stats and clear") {
    auto dir = tmp.path / "cache";
    auto stats = run_cli(tmp, "cache stats --dir " + dir.string());
    CHECK(stats.exit_code == 0);
    CHECK(stats.out.find("entries") != std::string::npos);
    CHECK(run_cli(tmp, "cache clear --dir " + dir.string()).exit_code == 0);
  }

  SUBCASE("config errors exit 2") {
    auto records = write_fixture_records(tmp);
    auto result = run_cli(tmp, "eval --records " + records.string() +
                                   " --out " + (tmp.path / "x").string() +
                                   " --set parallelism=0");
    CHECK(result.exit_code == 2);
  }

  SUBCASE("missing records file exits 3") {
    auto result = run_cli(tmp, "eval --records /nonexistent.jsonl --out " +
                                   (tmp.path / "x").string());
    CHECK(result.exit_code == 3);
  }
}
