#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "codecause/causal.hpp"
#include "codecause/ingest.hpp"
#include "codecause/llm_eval.hpp"

namespace codecause::cli {

struct PipelineConfig {
  std::uint64_t seed = 42;
  ingest::RepoQuery query;
  ingest::DateWindow window;

  // Inputs. Relative paths are resolved against the config file's directory.
  std::filesystem::path samples;   // pre-mined sample JSONL
  std::filesystem::path catalog;   // repository catalog JSONL with local clones
  std::vector<std::filesystem::path> repos;  // local clones mined without the query filter
  std::filesystem::path testbed;   // study testbed used instead of the built one
  std::filesystem::path tokenizer; // trained BPE model used instead of training one
  std::filesystem::path taxonomy;  // keyword table; built-in when empty
  std::filesystem::path cache = "llm_cache.jsonl";
  std::filesystem::path output = "out";

  std::size_t vocab_size = 2000;
  double threshold = 0.7;
  std::size_t testbed_size = 3000;
  std::string study_testbed = "WithDocstring";

  std::vector<llm_eval::TreatmentSpec> treatments;  // control, T1, T2
  llm_eval::ClientMode llm_mode = llm_eval::ClientMode::replay;
  llm_eval::GenerationParams generation;
  llm_eval::ClientLimits limits;

  causal::StudyConfig study;
  int jobs = 0;  // 0 = OpenMP default

  /// Throws UsageError on invalid fields.
  void validate() const;
  /// Canonical form; paths rendered as given after resolution.
  nlohmann::ordered_json to_json() const;
  /// `base` resolves relative paths. Missing keys keep their defaults.
  static PipelineConfig from_json(const nlohmann::ordered_json& j, const std::filesystem::path& base);
  static PipelineConfig load(const std::filesystem::path& file);
};

/// Pipeline commands in execution order.
const std::vector<std::string>& command_names();

struct RunOptions {
  bool force = false;  // ignore the content-hash skip
};

/// Runs one command; throws codecause::Error subclasses. Returns false when skipped because
/// inputs, config and outputs are unchanged.
bool run_command(const std::string& name, const PipelineConfig& config, const RunOptions& options = {});

/// Maps an exception to the CLI exit code (1 usage, 2 data, 3 upstream).
int exit_code_for(const std::exception& e);

/// Entry point shared by the executable and the tests.
int main(int argc, char** argv);

}  // namespace codecause::cli
