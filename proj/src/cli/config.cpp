#include "codecause/cli.hpp"
#include "codecause/error.hpp"
#include "codecause/testbeds.hpp"
#include "codecause/util.hpp"

namespace codecause::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::vector<llm_eval::TreatmentSpec> default_treatments() {
  return {llm_eval::TreatmentSpec::defaults(llm_eval::TreatmentId::control),
          llm_eval::TreatmentSpec::defaults(llm_eval::TreatmentId::T1),
          llm_eval::TreatmentSpec::defaults(llm_eval::TreatmentId::T2)};
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    query.validate();
    testbeds::name_from_str(study_testbed);
  } catch (const DataError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) throw UsageError("dedup threshold must lie in (0, 1]");
  if (vocab_size <= 256) throw UsageError("tokenizer vocab_size must exceed the 256-byte alphabet");
  if (testbed_size == 0) throw UsageError("testbed size must be positive");
  if (treatments.size() != 3) throw UsageError("treatments must define control, T1 and T2");
  for (const auto& t : treatments) t.validate();
  if (generation.max_tokens <= 0) throw UsageError("max_tokens must be positive");
  if (limits.max_concurrent < 1 || limits.requests_per_second <= 0.0 || limits.burst < 1.0 || limits.max_retries < 0) {
    throw UsageError("llm limits must be positive");
  }
  if (jobs < 0) throw UsageError("jobs must be non-negative");
  if (output.empty()) throw UsageError("an output directory is required");
}

ordered_json PipelineConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["query"] = {{"language", query.language},
                {"fork_allowed", query.fork_allowed},
                {"min_size_kb", query.min_size_kb},
                {"pushed_after", format_date(query.pushed_after)},
                {"min_stars", query.min_stars}};
  j["window"] = {{"start", format_date(window.start)}, {"end", format_date(window.end)}};
  ordered_json repo_list = ordered_json::array();
  for (const auto& r : repos) repo_list.push_back(r.string());
  j["paths"] = {{"samples", samples.string()},   {"catalog", catalog.string()},   {"repos", repo_list},
                {"testbed", testbed.string()},   {"tokenizer", tokenizer.string()}, {"taxonomy", taxonomy.string()},
                {"cache", cache.string()},       {"output", output.string()}};
  j["tokenizer"] = {{"vocab_size", vocab_size}};
  j["dedup"] = {{"threshold", threshold}};
  j["testbeds"] = {{"size", testbed_size}, {"study_testbed", study_testbed}};
  ordered_json t = ordered_json::object();
  for (const auto& spec : treatments) t[std::string(llm_eval::treatment_str(spec.id))] = spec.steps;
  j["treatments"] = t;
  j["llm"] = {{"mode", llm_mode == llm_eval::ClientMode::live ? "live" : "replay"},
              {"generation", generation.to_json()},
              {"max_concurrent", limits.max_concurrent},
              {"requests_per_second", limits.requests_per_second},
              {"burst", limits.burst},
              {"max_retries", limits.max_retries},
              {"backoff_ms", limits.backoff.count()}};
  j["study"] = study.to_json();
  j["jobs"] = jobs;
  return j;
}

PipelineConfig PipelineConfig::from_json(const ordered_json& j, const fs::path& base) {
  PipelineConfig c;
  c.treatments = default_treatments();
  try {
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    c.seed = j.value("seed", c.seed);
    if (j.contains("query")) {
      const auto& q = j["query"];
      c.query.language = q.value("language", c.query.language);
      c.query.fork_allowed = q.value("fork_allowed", c.query.fork_allowed);
      c.query.min_size_kb = q.value("min_size_kb", c.query.min_size_kb);
      if (q.contains("pushed_after")) c.query.pushed_after = parse_date(q["pushed_after"].get<std::string>());
      c.query.min_stars = q.value("min_stars", c.query.min_stars);
    }
    if (j.contains("window")) {
      const auto& w = j["window"];
      const Date start = w.contains("start") ? parse_date(w["start"].get<std::string>()) : c.window.start;
      const Date end = w.contains("end") ? parse_date(w["end"].get<std::string>()) : c.window.end;
      c.window = ingest::DateWindow(start, end);
    }
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      auto path = [&](const char* key, fs::path& field) {
        if (p.contains(key)) field = resolve(base, p[key].get<std::string>());
      };
      path("samples", c.samples);
      path("catalog", c.catalog);
      path("testbed", c.testbed);
      path("tokenizer", c.tokenizer);
      path("taxonomy", c.taxonomy);
      path("cache", c.cache);
      path("output", c.output);
      if (p.contains("repos")) {
        for (const auto& r : p["repos"]) c.repos.push_back(resolve(base, r.get<std::string>()));
      }
    }
    if (!c.cache.is_absolute()) c.cache = resolve(base, c.cache.string());
    if (!c.output.is_absolute()) c.output = resolve(base, c.output.string());
    if (j.contains("tokenizer")) c.vocab_size = j["tokenizer"].value("vocab_size", c.vocab_size);
    if (j.contains("dedup")) c.threshold = j["dedup"].value("threshold", c.threshold);
    if (j.contains("testbeds")) {
      c.testbed_size = j["testbeds"].value("size", c.testbed_size);
      c.study_testbed = j["testbeds"].value("study_testbed", c.study_testbed);
    }
    if (j.contains("treatments")) {
      for (auto& spec : c.treatments) {
        const std::string key(llm_eval::treatment_str(spec.id));
        if (j["treatments"].contains(key)) spec.steps = j["treatments"][key].get<std::vector<std::string>>();
      }
    }
    if (j.contains("llm")) {
      const auto& l = j["llm"];
      const std::string mode = l.value("mode", std::string("replay"));
      if (mode == "live") {
        c.llm_mode = llm_eval::ClientMode::live;
      } else if (mode != "replay") {
        throw UsageError("llm.mode must be 'replay' or 'live'");
      }
      if (l.contains("generation")) c.generation = llm_eval::GenerationParams::from_json(l["generation"]);
      c.limits.max_concurrent = l.value("max_concurrent", c.limits.max_concurrent);
      c.limits.requests_per_second = l.value("requests_per_second", c.limits.requests_per_second);
      c.limits.burst = l.value("burst", c.limits.burst);
      c.limits.max_retries = l.value("max_retries", c.limits.max_retries);
      c.limits.backoff = std::chrono::milliseconds(l.value("backoff_ms", c.limits.backoff.count()));
    }
    if (j.contains("study")) c.study = causal::StudyConfig::from_json(j["study"]);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const DataError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  c.study.seed = c.seed;
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& file) {
  if (!fs::exists(file)) throw UsageError("config file not found: " + file.string());
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(file));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + file.string() + ": " + e.what());
  }
  return from_json(j, fs::absolute(file).parent_path());
}

}  // namespace codecause::cli
