#include <atomic>
#include <exception>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include <omp.h>

#include "codecause/cli.hpp"
#include "codecause/csv.hpp"
#include "codecause/error.hpp"
#include "codecause/features.hpp"
#include "codecause/process.hpp"
#include "codecause/report.hpp"
#include "codecause/testbeds.hpp"
#include "codecause/tokenization.hpp"
#include "codecause/util.hpp"

#ifndef CODECAUSE_VERSION
#define CODECAUSE_VERSION "0.0.0"
#endif

namespace codecause::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using llm_eval::TreatmentId;

namespace {

void log(const std::string& msg) { std::cerr << "[codecause] " << msg << '\n'; }

// ---- artifact layout -------------------------------------------------------

constexpr const char* kSamples = "corpus/samples.jsonl";
constexpr const char* kDatapoints = "corpus/datapoints.jsonl";
constexpr const char* kValidated = "corpus/validated.jsonl";
constexpr const char* kValidation = "reports/validation.csv";
constexpr const char* kDistinct = "work/distinct.csv";
constexpr const char* kTokenizer = "tokenizer/bpe.json";
constexpr const char* kDedup = "reports/dedup.csv";
constexpr const char* kPrompts = "eval/prompts.jsonl";
constexpr const char* kGenerations = "eval/generations.jsonl";
constexpr const char* kEval = "eval/eval.csv";
constexpr const char* kCorrelations = "causal/correlations.csv";
constexpr const char* kEffects = "causal/effects.csv";

std::string testbed_file(testbeds::TestbedName n) { return "testbeds/" + std::string(testbeds::name_str(n)) + ".jsonl"; }

const std::vector<testbeds::TestbedName>& all_testbeds() {
  using testbeds::TestbedName;
  static const std::vector<TestbedName> names = {TestbedName::RawData,       TestbedName::RawDataDocstring,
                                                 TestbedName::RandomCut,     TestbedName::WithDocstring,
                                                 TestbedName::FromDocstring, TestbedName::CommitGen,
                                                 TestbedName::SummarizationGen};
  return names;
}

/// A predecessor artifact; `producer` names the command that writes it.
fs::path require(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    throw UsageError("missing " + path.string() + ": run " + std::string(producer) + " first");
  }
  return path;
}

fs::path require_input(const fs::path& path, std::string_view what) {
  if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path.string());
  return path;
}

fs::path testbed_path(const PipelineConfig& c) {
  if (!c.testbed.empty()) return require_input(c.testbed, "study testbed");
  return require(c.output / testbed_file(testbeds::name_from_str(c.study_testbed)), "build-testbeds");
}

fs::path tokenizer_path(const PipelineConfig& c) {
  if (!c.tokenizer.empty()) return require_input(c.tokenizer, "tokenizer");
  return require(c.output / kTokenizer, "dedup");
}

tokenization::BpeModel load_tokenizer(const fs::path& p) { return tokenization::BpeModel::from_json(read_file(p)); }

tokenization::TaxonomyTable load_taxonomy(const PipelineConfig& c) {
  if (c.taxonomy.empty()) return {};
  return tokenization::TaxonomyTable::from_json(read_file(require_input(c.taxonomy, "taxonomy table")));
}

testbeds::Testbed load_testbed(const fs::path& p) { return testbeds::import_jsonl(read_file(p)); }

std::map<std::string, features::FeatureVector> features_by_point(const testbeds::Testbed& tb) {
  std::map<std::string, features::FeatureVector> out;
  for (const auto& tp : tb.points) out.emplace(llm_eval::point_id(tp.point), tp.point.features);
  return out;
}

// ---- manifests -------------------------------------------------------------

/// Hash of the settings; paths are excluded because their contents are hashed as inputs.
std::string config_hash(const PipelineConfig& c) {
  ordered_json j = c.to_json();
  j.erase("paths");
  j.erase("jobs");
  return sha256_hex(j.dump());
}

std::string input_hash(const fs::path& p) {
  if (fs::is_directory(p)) {
    // A git clone is identified by its refs.
    const CommandResult r = codecause::run_command({"git", "-C", p.string(), "show-ref", "--head"});
    if (r.exit_code != 0) throw DataError("cannot read repository " + p.string());
    return sha256_hex(r.out);
  }
  return sha256_hex(read_file(p));
}

struct Outputs {
  fs::path root;
  std::map<std::string, std::string> written;  // relative path -> sha256

  void write(const std::string& rel, const std::string& content) {
    const fs::path p = root / rel;
    fs::create_directories(p.parent_path());
    write_file_atomic(p, content);
    written[rel] = sha256_hex(content);
  }
};

struct Step {
  std::string name;
  std::vector<std::pair<std::string, fs::path>> inputs;  // role -> file
  std::function<void(Outputs&)> run;
};

ordered_json manifest_head(const std::string& name, const PipelineConfig& c,
                           const std::vector<std::pair<std::string, fs::path>>& inputs) {
  ordered_json m;
  m["command"] = name;
  m["version"] = CODECAUSE_VERSION;
  m["seed"] = c.seed;
  m["config_hash"] = config_hash(c);
  ordered_json in = ordered_json::object();
  for (const auto& [role, path] : inputs) in[role] = input_hash(path);
  m["inputs"] = in;
  return m;
}

bool up_to_date(const fs::path& manifest, const ordered_json& head, const fs::path& root) {
  if (!fs::exists(manifest)) return false;
  ordered_json old;
  try {
    old = ordered_json::parse(read_file(manifest));
  } catch (const nlohmann::json::exception&) {
    return false;
  }
  for (const auto& key : {"command", "version", "seed", "config_hash", "inputs"}) {
    if (!old.contains(key) || old[key] != head[key]) return false;
  }
  if (!old.contains("outputs") || !old["outputs"].is_object()) return false;
  for (const auto& [rel, hash] : old["outputs"].items()) {
    const fs::path p = root / rel;
    if (!fs::exists(p) || sha256_hex(read_file(p)) != hash.get<std::string>()) return false;
  }
  return true;
}

bool execute(const Step& step, const PipelineConfig& c, const RunOptions& options) {
  ordered_json head = manifest_head(step.name, c, step.inputs);
  const fs::path manifest = c.output / "manifests" / (step.name + ".json");
  if (!options.force && up_to_date(manifest, head, c.output)) {
    log(step.name + ": up to date");
    return false;
  }
  log(step.name + ": running");
  Outputs out{c.output, {}};
  step.run(out);
  head["outputs"] = out.written;
  fs::create_directories(manifest.parent_path());
  write_file_atomic(manifest, head.dump(2) + "\n");
  log(step.name + ": wrote " + std::to_string(out.written.size()) + " file(s)");
  return true;
}

int thread_count(const PipelineConfig& c) { return c.jobs > 0 ? c.jobs : omp_get_max_threads(); }

// ---- commands --------------------------------------------------------------

Step mine_step(const PipelineConfig& c) {
  Step s{"mine", {}, {}};
  std::vector<fs::path> repos = c.repos;
  if (!c.samples.empty()) {
    s.inputs.emplace_back("samples", require_input(c.samples, "sample file"));
  } else if (!c.catalog.empty() || !c.repos.empty()) {
    if (!c.catalog.empty()) {
      const auto catalog = ingest::read_catalog_jsonl(read_file(require_input(c.catalog, "catalog")));
      for (const ingest::RepoInfo& r : ingest::select_repositories(c.query, catalog)) {
        if (r.clone_path.empty()) throw DataError("repository " + r.full_name + " has no local clone");
        const fs::path p(r.clone_path);
        repos.push_back(p.is_absolute() ? p : (c.catalog.parent_path() / p).lexically_normal());
      }
      s.inputs.emplace_back("catalog", c.catalog);
    }
    for (std::size_t i = 0; i < repos.size(); ++i) {
      s.inputs.emplace_back("repo:" + std::to_string(i), require_input(repos[i], "repository"));
    }
  } else {
    throw UsageError("mine needs paths.samples, paths.catalog or paths.repos");
  }
  s.run = [&c, repos](Outputs& out) {
    std::vector<ingest::RawSample> samples;
    if (!c.samples.empty()) {
      samples = ingest::import_jsonl(read_file(c.samples));
    } else {
      samples = ingest::harvest_all(repos, c.window, thread_count(c));
    }
    log("mine: " + std::to_string(samples.size()) + " samples");
    out.write(kSamples, ingest::export_jsonl(samples));
  };
  return s;
}

Step extract_step(const PipelineConfig& c) {
  Step s{"extract", {{"samples", require(c.output / kSamples, "mine")}}, {}};
  s.run = [&c](Outputs& out) {
    auto points = features::extract_all(ingest::import_jsonl(read_file(c.output / kSamples)));
    out.write(kDatapoints, features::export_jsonl(points));
  };
  return s;
}

Step validate_step(const PipelineConfig& c) {
  Step s{"validate", {{"datapoints", require(c.output / kDatapoints, "extract")}}, {}};
  s.run = [&c](Outputs& out) {
    const auto points = features::import_jsonl(read_file(c.output / kDatapoints));
    std::vector<features::DataPoint> kept;
    std::string rejected = csv_line({"commit_id", "path", "fun_name", "reasons"});
    for (const auto& p : points) {
      const auto report = ingest::validate_sample(p.raw, c.window);
      if (report.pass) {
        kept.push_back(p);
        continue;
      }
      std::string reasons;
      for (const auto& r : report.reasons) reasons += (reasons.empty() ? "" : "; ") + r;
      rejected += csv_line({p.raw.commit_id, p.raw.path, p.raw.fun_name, reasons});
    }
    log("validate: kept " + std::to_string(kept.size()) + " of " + std::to_string(points.size()));
    out.write(kValidated, features::export_jsonl(kept));
    out.write(kValidation, rejected);
  };
  return s;
}

/// Exact-duplicate removal on method code, first occurrence wins.
testbeds::Testbed distinct(testbeds::Testbed tb, testbeds::DedupReport& report) {
  report.testbed = std::string(testbeds::name_str(tb.name));
  report.before = tb.points.size();
  std::set<std::string> seen;
  std::vector<testbeds::TestbedPoint> kept;
  for (auto& tp : tb.points) {
    if (seen.insert(tp.point.raw.code).second) kept.push_back(std::move(tp));
  }
  tb.points = std::move(kept);
  report.after = tb.points.size();
  report.dupes = report.before - report.after;
  return tb;
}

Step dedup_step(const PipelineConfig& c) {
  Step s{"dedup", {{"validated", require(c.output / kValidated, "validate")}}, {}};
  if (!c.tokenizer.empty()) s.inputs.emplace_back("tokenizer", require_input(c.tokenizer, "tokenizer"));
  s.run = [&c](Outputs& out) {
    const auto points = features::import_jsonl(read_file(c.output / kValidated));
    if (points.empty()) throw DataError("no validated samples to build testbeds from");
    testbeds::DedupReport raw_report;
    testbeds::DedupReport doc_report;
    const auto raw = distinct(testbeds::make_raw_testbed(points), raw_report);
    const auto raw_doc = distinct(testbeds::make_raw_docstring_testbed(points), doc_report);
    if (c.tokenizer.empty()) {
      std::vector<std::string> corpus;
      for (const auto& tp : raw.points) corpus.push_back(tp.point.raw.code);
      out.write(kTokenizer, tokenization::BpeModel::train(corpus, c.vocab_size).to_json());
    }
    out.write(testbed_file(raw.name), testbeds::export_jsonl(raw));
    out.write(testbed_file(raw_doc.name), testbeds::export_jsonl(raw_doc));
    out.write(kDistinct, testbeds::dedup_csv_header() + testbeds::dedup_csv_row(raw_report) +
                             testbeds::dedup_csv_row(doc_report));
  };
  return s;
}

Step build_testbeds_step(const PipelineConfig& c) {
  using testbeds::TestbedName;
  Step s{"build-testbeds",
         {{"raw", require(c.output / testbed_file(TestbedName::RawData), "dedup")},
          {"raw_docstring", require(c.output / testbed_file(TestbedName::RawDataDocstring), "dedup")},
          {"tokenizer", tokenizer_path(c)}},
         {}};
  s.run = [&c](Outputs& out) {
    const auto raw = load_testbed(c.output / testbed_file(TestbedName::RawData));
    const auto raw_doc = load_testbed(c.output / testbed_file(TestbedName::RawDataDocstring));
    const auto model = load_tokenizer(tokenizer_path(c));
    const auto derived = testbeds::derive_task_testbeds(raw, raw_doc, c.testbed_size, c.seed, model, c.threshold);
    std::string table = testbeds::dedup_csv_header();
    for (std::size_t i = 0; i < derived.testbeds.size(); ++i) {
      out.write(testbed_file(derived.testbeds[i].name), testbeds::export_jsonl(derived.testbeds[i]));
      table += testbeds::dedup_csv_row(derived.reports[i]);
    }
    out.write(kDedup, table);
  };
  return s;
}

struct PromptRecord {
  std::string point_id;
  TreatmentId treatment = TreatmentId::control;
  std::int64_t prompt_size = 0;
  std::vector<std::string> prompts;
};

std::vector<PromptRecord> parse_prompts(std::string_view text) {
  std::vector<PromptRecord> out;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = ordered_json::parse(line);
      out.push_back({j.at("point_id").get<std::string>(),
                     llm_eval::treatment_from_str(j.at("treatment").get<std::string>()),
                     j.at("prompt_size").get<std::int64_t>(), j.at("prompts").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError("prompts line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Step prompt_step(const PipelineConfig& c) {
  Step s{"prompt", {{"testbed", testbed_path(c)}, {"tokenizer", tokenizer_path(c)}}, {}};
  s.run = [&c](Outputs& out) {
    const auto tb = load_testbed(testbed_path(c));
    if (tb.points.empty()) throw DataError("study testbed is empty");
    const auto model = load_tokenizer(tokenizer_path(c));
    std::string lines;
    for (const auto& tp : tb.points) {
      const std::string id = llm_eval::point_id(tp.point);
      const auto input = llm_eval::prompt_input(tp);
      for (const auto& spec : c.treatments) {
        const auto prompts = llm_eval::render_prompts(input, spec);
        ordered_json j;
        j["point_id"] = id;
        j["treatment"] = llm_eval::treatment_str(spec.id);
        j["prompt_size"] = llm_eval::prompt_size(prompts, model);
        j["prompts"] = prompts;
        lines += j.dump() + "\n";
      }
    }
    out.write(kPrompts, lines);
  };
  return s;
}

/// Runs every request on up to `workers` threads; results keep the request order.
std::vector<std::string> complete_all(llm_eval::LlmClient& client, const std::vector<PromptRecord>& requests,
                                      const llm_eval::GenerationParams& params, std::size_t workers) {
  std::vector<std::string> responses(requests.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        responses[i] = client.complete(requests[i].prompts, params);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = requests.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::max<std::size_t>(1, std::min(workers, requests.size())); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return responses;
}

Step eval_step(const PipelineConfig& c) {
  Step s{"eval", {{"prompts", require(c.output / kPrompts, "prompt")}, {"testbed", testbed_path(c)}}, {}};
  if (c.llm_mode == llm_eval::ClientMode::replay) {
    s.inputs.emplace_back("cache", require_input(c.cache, "replay cache"));
  } else if (fs::exists(c.cache)) {
    s.inputs.emplace_back("cache", c.cache);
  }
  s.run = [&c](Outputs& out) {
    const auto requests = parse_prompts(read_file(c.output / kPrompts));
    const auto tb = load_testbed(testbed_path(c));
    std::map<std::string, std::string> references;
    for (const auto& tp : tb.points) references.emplace(llm_eval::point_id(tp.point), tp.point.raw.code);

    auto cache = std::make_shared<llm_eval::ReplayCache>(c.cache);
    std::shared_ptr<llm_eval::Transport> transport;
    if (c.llm_mode == llm_eval::ClientMode::live) transport = llm_eval::HttpTransport::from_environment();
    llm_eval::LlmClient client(c.llm_mode, cache, transport, c.limits);
    const auto responses =
        complete_all(client, requests, c.generation, static_cast<std::size_t>(c.limits.max_concurrent));

    std::vector<llm_eval::Generation> generations;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      generations.push_back({requests[i].point_id, requests[i].treatment, requests[i].prompt_size, responses[i]});
    }
    const auto records = llm_eval::score_all(generations, references);
    out.write(kGenerations, llm_eval::generations_jsonl(generations));
    out.write(kEval, llm_eval::eval_csv(records));
  };
  return s;
}

Step correlate_step(const PipelineConfig& c) {
  Step s{"correlate", {{"eval", require(c.output / kEval, "eval")}, {"testbed", testbed_path(c)}}, {}};
  s.run = [&c](Outputs& out) {
    const auto records = llm_eval::parse_eval_csv(read_file(c.output / kEval));
    const auto cells = causal::correlation_table(records, features_by_point(load_testbed(testbed_path(c))), c.study);
    out.write(kCorrelations, causal::correlations_csv(cells));
  };
  return s;
}

Step ate_step(const PipelineConfig& c) {
  Step s{"ate", {{"eval", require(c.output / kEval, "eval")}, {"testbed", testbed_path(c)}}, {}};
  s.run = [&c](Outputs& out) {
    const auto records = llm_eval::parse_eval_csv(read_file(c.output / kEval));
    const auto cells = causal::run_effects(records, features_by_point(load_testbed(testbed_path(c))), c.study);
    out.write(kEffects, causal::effects_csv(cells));
  };
  return s;
}

Step report_step(const PipelineConfig& c) {
  Step s{"report",
         {{"eval", require(c.output / kEval, "eval")},
          {"generations", require(c.output / kGenerations, "eval")},
          {"correlations", require(c.output / kCorrelations, "correlate")},
          {"effects", require(c.output / kEffects, "ate")},
          {"testbed", testbed_path(c)},
          {"tokenizer", tokenizer_path(c)}},
         {}};
  if (!c.taxonomy.empty()) s.inputs.emplace_back("taxonomy", require_input(c.taxonomy, "taxonomy table"));
  for (auto name : all_testbeds()) {
    const fs::path p = c.output / testbed_file(name);
    if (fs::exists(p)) s.inputs.emplace_back(std::string(testbeds::name_str(name)), p);
  }
  s.run = [&c, inputs = s.inputs](Outputs& out) {
    // Table I over every testbed at hand.
    std::vector<report::DescriptiveRow> rows;
    std::set<std::string> described;
    for (auto name : all_testbeds()) {
      const fs::path p = c.output / testbed_file(name);
      if (!fs::exists(p)) continue;
      rows.push_back(report::describe(load_testbed(p)));
      described.insert(rows.back().testbed);
    }
    const auto study_tb = load_testbed(testbed_path(c));
    if (!described.count(std::string(testbeds::name_str(study_tb.name)))) rows.push_back(report::describe(study_tb));
    out.write("reports/descriptive.csv", report::descriptive_csv(rows));

    const auto records = llm_eval::parse_eval_csv(read_file(c.output / kEval));
    report::ResultsInput in;
    in.metrics = report::performance_metrics(records, c.study.treatments);
    in.correlations = causal::parse_correlations_csv(read_file(c.output / kCorrelations));
    in.effects = causal::parse_effects_csv(read_file(c.output / kEffects));
    in.confounders = c.study.scm.confounders;
    in.effect_modifiers = c.study.scm.effect_modifiers;
    out.write("reports/results.csv", report::results_csv(in));
    out.write("reports/results.md", report::results_markdown(in));

    // Figure data: ground truth of the evaluated points against each group's generated code.
    const auto generations = llm_eval::parse_generations_jsonl(read_file(c.output / kGenerations));
    std::map<std::string, std::string> code_of;
    for (const auto& tp : study_tb.points) code_of.emplace(llm_eval::point_id(tp.point), tp.point.raw.code);
    report::GroupTexts texts;
    texts.emplace_back("ground_truth", std::vector<std::string>{});
    std::set<std::string> seen;
    for (const auto& g : generations) {
      if (!seen.insert(g.point_id).second) continue;
      const auto it = code_of.find(g.point_id);
      if (it == code_of.end()) throw DataError("generated point " + g.point_id + " is not in the testbed");
      texts.front().second.push_back(it->second);
    }
    std::vector<std::pair<std::string, std::vector<double>>> sims;
    for (const auto& m : in.metrics) {
      const TreatmentId id = llm_eval::treatment_from_str(m.group);
      auto& group = texts.emplace_back(m.group, std::vector<std::string>{}).second;
      for (const auto& g : generations) {
        if (g.treatment == id) group.push_back(llm_eval::extract_code(g.response));
      }
      auto& s = sims.emplace_back(m.group, std::vector<double>{}).second;
      for (const auto& r : records) {
        if (r.treatment == id) s.push_back(r.y_lev_similarity);
      }
    }
    const auto model = load_tokenizer(tokenizer_path(c));
    const auto counts = report::taxonomy_counts(texts, model, load_taxonomy(c));
    const auto hist = report::token_histogram(texts, model);
    out.write("figures/taxonomy_counts.csv", report::taxonomy_counts_csv(counts));
    out.write("figures/token_dist.csv", report::token_dist_csv(hist, "ground_truth"));
    out.write("figures/token_dist.meta.json", report::token_dist_metadata(hist, "ground_truth"));
    out.write("figures/similarity_proportion.csv", report::similarity_proportion_csv(sims));
    out.write("figures/taxonomy_counts.svg", report::taxonomy_svg(counts));
    out.write("figures/token_dist.svg", report::token_dist_svg(hist));
    out.write("figures/similarity_proportion.svg", report::proportion_svg(sims));
  };
  return s;
}

Step make_step(const std::string& name, const PipelineConfig& c) {
  if (name == "mine") return mine_step(c);
  if (name == "extract") return extract_step(c);
  if (name == "validate") return validate_step(c);
  if (name == "dedup") return dedup_step(c);
  if (name == "build-testbeds") return build_testbeds_step(c);
  if (name == "prompt") return prompt_step(c);
  if (name == "eval") return eval_step(c);
  if (name == "correlate") return correlate_step(c);
  if (name == "ate") return ate_step(c);
  if (name == "report") return report_step(c);
  throw UsageError("unknown command '" + name + "'");
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"mine",   "extract", "validate",  "dedup", "build-testbeds", "prompt",
                                                 "eval",   "correlate", "ate",     "report", "run-all"};
  return names;
}

bool run_command(const std::string& name, const PipelineConfig& config, const RunOptions& options) {
  if (config.jobs > 0) omp_set_num_threads(config.jobs);
  if (name != "run-all") return execute(make_step(name, config), config, options);
  const bool has_source = !config.samples.empty() || !config.catalog.empty() || !config.repos.empty();
  if (!has_source && config.testbed.empty()) {
    throw UsageError("run-all needs a corpus source (paths.samples, paths.catalog or paths.repos) or paths.testbed");
  }
  std::vector<std::string> chain;
  if (has_source) chain = {"mine", "extract", "validate", "dedup", "build-testbeds"};
  for (const char* n : {"prompt", "eval", "correlate", "ate", "report"}) chain.emplace_back(n);
  bool ran = false;
  for (const std::string& n : chain) ran = execute(make_step(n, config), config, options) || ran;
  return ran;
}

}  // namespace codecause::cli
