#include <filesystem>

#include "doctest.h"

#include "codecause/cli.hpp"
#include "codecause/error.hpp"
#include "codecause/util.hpp"

using namespace codecause;
using namespace codecause::cli;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "codecause");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const std::string kStudy = CODECAUSE_FIXTURES "/replay/study.json";

}  // namespace

TEST_CASE("config resolves relative paths against its directory") {
  const auto c = PipelineConfig::load(kStudy);
  CHECK(c.testbed == fs::path(CODECAUSE_FIXTURES "/replay/testbed.jsonl").lexically_normal());
  CHECK(c.study.seed == c.seed);
  CHECK(PipelineConfig::from_json(c.to_json(), "/").to_json() == c.to_json());
}

TEST_CASE("invalid configs are usage errors") {
  const auto bad = [](const std::string& text) {
    return PipelineConfig::from_json(nlohmann::ordered_json::parse(text), "/tmp");
  };
  CHECK_THROWS_AS(bad(R"({"dedup": {"threshold": 1.5}})"), UsageError);
  CHECK_THROWS_AS(bad(R"({"llm": {"mode": "psychic"}})"), UsageError);
  CHECK_THROWS_AS(bad(R"({"treatments": {"T2": ["only one"]}})"), UsageError);
  CHECK_THROWS_AS(bad(R"({"seed": "seven"})"), UsageError);
  CHECK_THROWS_AS(bad(R"({"window": {"start": "2023-01-01", "end": "2022-01-01"}})"), UsageError);
  CHECK_THROWS_AS(PipelineConfig::load("/nonexistent/codecause.json"), UsageError);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(UsageError("x")) == 1);
  CHECK(exit_code_for(DataError("x")) == 2);
  CHECK(exit_code_for(UpstreamError("x", true)) == 3);
  CHECK(run_cli({"no-such-command"}) == 1);
  CHECK(run_cli({"-c", "/nonexistent.json", "report"}) == 1);
}

TEST_CASE("a step without its predecessor's output is a usage error") {
  const auto out = fresh_dir("codecause_cli_order");
  auto c = PipelineConfig::load(kStudy);
  c.output = out;
  try {
    run_command("correlate", c);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("run eval first") != std::string::npos);
  }
  CHECK(run_cli({"-c", kStudy, "-o", out.string(), "ate"}) == 1);
  fs::remove_all(out);
}

TEST_CASE("replay miss exits with the upstream code") {
  const auto dir = fresh_dir("codecause_cli_miss");
  auto j = nlohmann::ordered_json::parse(read_file(kStudy));
  j["paths"]["testbed"] = CODECAUSE_FIXTURES "/replay/testbed.jsonl";
  j["paths"]["tokenizer"] = CODECAUSE_FIXTURES "/replay/tokenizer.json";
  j["paths"]["cache"] = (dir / "empty_cache.jsonl").string();
  j["paths"]["output"] = (dir / "out").string();
  write_file_atomic(dir / "empty_cache.jsonl", "");
  write_file_atomic(dir / "cfg.json", j.dump(2));
  CHECK(run_cli({"-c", (dir / "cfg.json").string(), "run-all"}) == 3);
  fs::remove_all(dir);
}

TEST_CASE("replay study runs, then skips when nothing changed") {
  const auto out = fresh_dir("codecause_cli_study");
  CHECK(run_cli({"-c", kStudy, "-o", out.string(), "run-all"}) == 0);
  CHECK(fs::exists(out / "reports" / "results.csv"));
  CHECK(fs::exists(out / "manifests" / "report.json"));
  const std::string first = read_file(out / "reports" / "results.csv");

  auto c = PipelineConfig::load(kStudy);
  c.output = out;
  CHECK_FALSE(run_command("report", c));
  CHECK(run_command("report", c, RunOptions{true}));
  CHECK(read_file(out / "reports" / "results.csv") == first);

  // A different seed changes the config hash, so the step runs again.
  c.seed = 8;
  c.study.seed = 8;
  CHECK(run_command("ate", c));
  fs::remove_all(out);
}
