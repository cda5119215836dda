#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "codecause/testbeds.hpp"
#include "codecause/tokenization.hpp"

namespace codecause::llm_eval {

// ---- prompts ---------------------------------------------------------------

enum class TreatmentId { control, T1, T2 };

std::string_view treatment_str(TreatmentId t);
TreatmentId treatment_from_str(std::string_view s);

/// Templates use the placeholders {partial code}, {code}, {fun_name} and {docstring}.
struct TreatmentSpec {
  TreatmentId id = TreatmentId::control;
  std::vector<std::string> steps;

  /// control and T1 have one step, T2 has two; throws UsageError otherwise.
  void validate() const;
  static TreatmentSpec defaults(TreatmentId id);
};

struct PromptInput {
  std::string partial_code;
  std::string fun_name;
  std::optional<std::string> docstring;
};

/// Uses the cut prefix when the point has one, else the full method.
PromptInput prompt_input(const testbeds::TestbedPoint& tp);

/// Throws DataError when a template needs a docstring the input lacks, or names an
/// unknown placeholder.
std::vector<std::string> render_prompts(const PromptInput& input, const TreatmentSpec& treatment);

// ---- completion client -----------------------------------------------------

struct GenerationParams {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::int64_t max_tokens = 1024;

  nlohmann::ordered_json to_json() const;
  static GenerationParams from_json(const nlohmann::ordered_json& j);
};

/// sha256 over the canonical JSON of [model, params, prompts].
std::string request_hash(const GenerationParams& params, const std::vector<std::string>& prompts);

struct CacheEntry {
  std::string request_hash;
  std::string model;
  nlohmann::ordered_json params;
  std::vector<std::string> prompts;
  std::string response;
  std::string timestamp;
};

nlohmann::ordered_json to_json(const CacheEntry& e);
CacheEntry cache_entry_from_json(const nlohmann::ordered_json& j);

/// Content-addressed JSONL store. Lookups may run concurrently; appends are serialized and
/// written through to disk one line at a time.
class ReplayCache {
 public:
  /// Loads the file if present; a missing file is an empty cache.
  explicit ReplayCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& hash) const;
  void append(const CacheEntry& entry);
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> responses_;
};

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string content;
};

/// One chat request over the whole conversation so far; returns the assistant reply.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string send(const std::vector<ChatMessage>& conversation, const GenerationParams& params) = 0;
};

/// OpenAI-style chat-completions endpoint.
class HttpTransport : public Transport {
 public:
  /// `endpoint` is a full URL such as https://host/v1/chat/completions.
  HttpTransport(std::string endpoint, std::string api_key, std::chrono::seconds timeout = std::chrono::seconds(120));
  /// Reads CODECAUSE_LLM_ENDPOINT and CODECAUSE_LLM_API_KEY; throws UsageError when the
  /// endpoint is unset.
  static std::unique_ptr<HttpTransport> from_environment();

  std::string send(const std::vector<ChatMessage>& conversation, const GenerationParams& params) override;

 private:
  std::string scheme_host_;
  std::string path_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

enum class ClientMode { replay, live };

struct ClientLimits {
  std::ptrdiff_t max_concurrent = 4;
  double requests_per_second = 2.0;
  double burst = 4.0;
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
};

class TokenBucket {
 public:
  TokenBucket(double rate, double burst);
  /// Blocks until one token is available.
  void acquire();

 private:
  std::mutex mutex_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

class LlmClient {
 public:
  /// `transport` may be null in replay mode.
  LlmClient(ClientMode mode, std::shared_ptr<ReplayCache> cache, std::shared_ptr<Transport> transport = nullptr,
            ClientLimits limits = {});

  /// Replay: the recorded response, or a non-retriable UpstreamError on a miss. Live: the
  /// cached response if present, else the steps are sent in order within one conversation
  /// and the final reply is stored.
  std::string complete(const std::vector<std::string>& prompts, const GenerationParams& params);

  ClientMode mode() const { return mode_; }

 private:
  std::string send_with_retry(const std::vector<ChatMessage>& conversation, const GenerationParams& params);

  ClientMode mode_;
  std::shared_ptr<ReplayCache> cache_;
  std::shared_ptr<Transport> transport_;
  ClientLimits limits_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
  TokenBucket bucket_;
};

/// Longest fenced code block in a chat reply, else the whole reply.
std::string extract_code(std::string_view response);

// ---- metrics ---------------------------------------------------------------

/// Significant lexical tokens of the Python lexer, as text.
std::vector<std::string> code_tokens(std::string_view code);

/// Per-token weights for the unigram precision; empty means all 1.
using TokenWeight = std::function<double(const std::string&)>;

/// BLEU over pre-tokenized input. Add-one smoothing replaces zero match counts for n >= 2.
/// Throws DataError on an empty reference.
double bleu_tokens(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
                   int max_n = 4, const TokenWeight& unigram_weight = {});
double bleu(std::string_view candidate, std::string_view reference, int max_n = 4);

struct CodeBleuWeights {
  double ngram = 0.25;
  double weighted_ngram = 0.25;
  double syntax = 0.25;
  double dataflow = 0.25;
};

struct CodeBleuParts {
  double ngram = 0.0;
  double weighted_ngram = 0.0;
  double syntax = 0.0;
  double dataflow = 0.0;
  double score = 0.0;
};

/// Keywords weigh 1.0 in the unigram precision, everything else 0.2.
double keyword_weight(const std::string& token);
double weighted_ngram_match(std::string_view candidate, std::string_view reference);
/// Fraction of the reference's subtrees (node types only) found in the candidate.
double syntax_match(std::string_view candidate, std::string_view reference);

struct DataflowItem {
  std::string name;
  std::string relation;  // "computedFrom" or "comesFrom"
  std::vector<std::string> sources;
  auto operator<=>(const DataflowItem&) const = default;
  bool operator==(const DataflowItem&) const = default;
};

/// Def-use items of every function in the code, in source order.
std::vector<DataflowItem> dataflow_items(std::string_view code);
/// Multiset overlap of items, relative to the reference; 1.0 when both are empty.
double dataflow_match(std::string_view candidate, std::string_view reference);

/// Throws UsageError unless the weights are non-negative and sum to 1.
CodeBleuParts codebleu_parts(std::string_view candidate, std::string_view reference, const CodeBleuWeights& w = {});
double codebleu(std::string_view candidate, std::string_view reference, const CodeBleuWeights& w = {});

struct EditResult {
  std::int64_t distance = 0;
  double similarity = 1.0;
};

/// Unit-cost edit distance over Unicode code points (bytes when not valid UTF-8).
EditResult levenshtein(std::string_view a, std::string_view b);

// ---- evaluation records ----------------------------------------------------

struct EvalRecord {
  std::string point_id;
  TreatmentId treatment = TreatmentId::control;
  std::int64_t prompt_size = 0;
  std::string generated;
  double y_bleu = 0.0;
  double y_codebleu = 0.0;
  std::int64_t y_lev_distance = 0;
  double y_lev_similarity = 0.0;
};

/// Stable id from commit, path, function name and code.
std::string point_id(const features::DataPoint& p);

/// BPE tokens over all rendered steps.
std::int64_t prompt_size(const std::vector<std::string>& prompts, const tokenization::BpeModel& model);

struct Generation {
  std::string point_id;
  TreatmentId treatment = TreatmentId::control;
  std::int64_t prompt_size = 0;
  std::string response;  // raw reply; code is extracted before scoring
};

/// Scores every generation against the reference method code. Parallel over generations.
std::vector<EvalRecord> score_all(const std::vector<Generation>& generations,
                                  const std::map<std::string, std::string>& references,
                                  const CodeBleuWeights& weights = {});
std::vector<EvalRecord> score_all_serial(const std::vector<Generation>& generations,
                                         const std::map<std::string, std::string>& references,
                                         const CodeBleuWeights& weights = {});

std::string eval_csv(const std::vector<EvalRecord>& records);
/// `generated` is left empty; it lives in the generations file.
std::vector<EvalRecord> parse_eval_csv(std::string_view text);

std::string generations_jsonl(const std::vector<Generation>& generations);
std::vector<Generation> parse_generations_jsonl(std::string_view text);

}  // namespace codecause::llm_eval
