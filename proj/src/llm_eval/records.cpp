#include <exception>

#include "codecause/csv.hpp"
#include "codecause/error.hpp"
#include "codecause/llm_eval.hpp"
#include "codecause/util.hpp"

namespace codecause::llm_eval {

std::string point_id(const features::DataPoint& p) {
  const std::string key = p.raw.commit_id + "\x1f" + p.raw.path + "\x1f" + p.raw.fun_name + "\x1f" + p.raw.code;
  return sha256_hex(key).substr(0, 16);
}

std::int64_t prompt_size(const std::vector<std::string>& prompts, const tokenization::BpeModel& model) {
  std::int64_t n = 0;
  for (const std::string& p : prompts) n += static_cast<std::int64_t>(model.encode_ids(p).size());
  return n;
}

namespace {

EvalRecord score_one(const Generation& g, const std::map<std::string, std::string>& references,
                     const CodeBleuWeights& weights) {
  const auto ref = references.find(g.point_id);
  if (ref == references.end()) throw DataError("no reference for point " + g.point_id);
  EvalRecord r;
  r.point_id = g.point_id;
  r.treatment = g.treatment;
  r.prompt_size = g.prompt_size;
  r.generated = extract_code(g.response);
  r.y_bleu = bleu(r.generated, ref->second);
  r.y_codebleu = codebleu(r.generated, ref->second, weights);
  const EditResult lev = levenshtein(r.generated, ref->second);
  r.y_lev_distance = lev.distance;
  r.y_lev_similarity = lev.similarity;
  return r;
}

}  // namespace

std::vector<EvalRecord> score_all(const std::vector<Generation>& generations,
                                  const std::map<std::string, std::string>& references,
                                  const CodeBleuWeights& weights) {
  std::vector<EvalRecord> out(generations.size());
  std::vector<std::exception_ptr> errors(generations.size());
  const auto n = static_cast<std::ptrdiff_t>(generations.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = score_one(generations[i], references, weights);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<EvalRecord> score_all_serial(const std::vector<Generation>& generations,
                                         const std::map<std::string, std::string>& references,
                                         const CodeBleuWeights& weights) {
  std::vector<EvalRecord> out;
  out.reserve(generations.size());
  for (const Generation& g : generations) out.push_back(score_one(g, references, weights));
  return out;
}

std::string eval_csv(const std::vector<EvalRecord>& records) {
  std::string out = csv_line(
      {"point_id", "treatment", "prompt_size", "y_bleu", "y_codebleu", "y_lev_distance", "y_lev_similarity"});
  for (const EvalRecord& r : records) {
    out += csv_line({r.point_id, std::string(treatment_str(r.treatment)), std::to_string(r.prompt_size),
                     format_double(r.y_bleu), format_double(r.y_codebleu), std::to_string(r.y_lev_distance),
                     format_double(r.y_lev_similarity)});
  }
  return out;
}

std::vector<EvalRecord> parse_eval_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows.front().size() != 7 || rows.front()[0] != "point_id") {
    throw DataError("eval CSV: unexpected header");
  }
  std::vector<EvalRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& row = rows[i];
    if (row.size() != 7) throw DataError("eval CSV row " + std::to_string(i + 1) + ": expected 7 columns");
    EvalRecord r;
    r.point_id = row[0];
    r.treatment = treatment_from_str(row[1]);
    try {
      r.prompt_size = std::stoll(row[2]);
      r.y_lev_distance = std::stoll(row[5]);
    } catch (const std::exception&) {
      throw DataError("eval CSV row " + std::to_string(i + 1) + ": malformed integer");
    }
    r.y_bleu = parse_double(row[3]);
    r.y_codebleu = parse_double(row[4]);
    r.y_lev_similarity = parse_double(row[6]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string generations_jsonl(const std::vector<Generation>& generations) {
  std::string out;
  for (const Generation& g : generations) {
    nlohmann::ordered_json j;
    j["point_id"] = g.point_id;
    j["treatment"] = treatment_str(g.treatment);
    j["prompt_size"] = g.prompt_size;
    j["response"] = g.response;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Generation> parse_generations_jsonl(std::string_view text) {
  std::vector<Generation> out;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::ordered_json::parse(line);
      Generation g;
      g.point_id = j.at("point_id").get<std::string>();
      g.treatment = treatment_from_str(j.at("treatment").get<std::string>());
      g.prompt_size = j.at("prompt_size").get<std::int64_t>();
      g.response = j.at("response").get<std::string>();
      out.push_back(std::move(g));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("generations line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace codecause::llm_eval
