#include <iostream>

#include "CLI11.hpp"
#include "codecause/cli.hpp"
#include "codecause/error.hpp"

namespace codecause::cli {

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return static_cast<int>(err->kind());
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return static_cast<int>(ErrorKind::Data);
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return static_cast<int>(ErrorKind::Data);
  return static_cast<int>(ErrorKind::Data);
}

int main(int argc, char** argv) {
  CLI::App app{"Causal evaluation of prompt treatments for code generation models"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file = "codecause.json";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> threshold;
  std::string output;
  bool force = false;
  app.add_option("-c,--config", config_file, "Pipeline config (JSON)")->capture_default_str();
  app.add_option("--seed", seed, "Overrides the config seed");
  app.add_option("-j,--jobs", jobs, "Worker threads for parallel kernels")->check(CLI::NonNegativeNumber);
  app.add_option("--threshold", threshold, "Jaccard dedup threshold in (0, 1]");
  app.add_option("-o,--output", output, "Overrides the output directory");
  app.add_flag("--force", force, "Run even when inputs are unchanged");

  const std::map<std::string, std::string> help = {
      {"mine", "Harvest methods from repositories or import a sample file"},
      {"extract", "Compute features for every sample"},
      {"validate", "Drop samples that violate the corpus rules"},
      {"dedup", "Remove exact duplicates, build the raw testbeds and train the tokenizer"},
      {"build-testbeds", "Sample, deduplicate and cut the task testbeds"},
      {"prompt", "Render control and treatment prompts for the study testbed"},
      {"eval", "Query the model (or the replay cache) and score the generations"},
      {"correlate", "Correlate confounders and effect modifiers with the outcomes"},
      {"ate", "Estimate and refute treatment effects"},
      {"report", "Write the descriptive, results and figure files"},
      {"run-all", "Run every step in order"},
  };
  for (const std::string& name : command_names()) app.add_subcommand(name, help.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
  }

  try {
    PipelineConfig config = PipelineConfig::load(config_file);
    if (seed) {
      config.seed = *seed;
      config.study.seed = *seed;
    }
    if (jobs) config.jobs = *jobs;
    if (threshold) config.threshold = *threshold;
    if (!output.empty()) config.output = std::filesystem::absolute(output);
    config.validate();
    run_command(app.get_subcommands().front()->get_name(), config, RunOptions{force});
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace codecause::cli
