// Writes a replay cache of synthetic model replies for every request in a prompts file.
// Used once to produce the checked-in replay fixtures:
//   record_fixture <prompts.jsonl> <testbed.jsonl> <cache.jsonl>
// Replies are perturbed copies of the reference method. The perturbation rate grows with the
// method length and shifts with the treatment, so the fixture carries both confounding and a
// treatment effect.
#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "codecause/error.hpp"
#include "codecause/llm_eval.hpp"
#include "codecause/util.hpp"

using namespace codecause;

namespace {

std::string mutate_line(const std::string& line, std::mt19937_64& rng) {
  static const char* const kNames[] = {"value", "result", "item", "data", "tmp", "out"};
  std::uniform_int_distribution<int> kind(0, 2);
  switch (kind(rng)) {
    case 0:
      return "";  // dropped
    case 1: {
      // Rename the first identifier after the indentation.
      const auto start = line.find_first_not_of(' ');
      auto end = start;
      while (end < line.size() && (std::isalnum(static_cast<unsigned char>(line[end])) || line[end] == '_')) ++end;
      if (start == std::string::npos || end == start) return line;
      return line.substr(0, start) + kNames[rng() % std::size(kNames)] + line.substr(end);
    }
    default: {
      auto digit = line.find_first_of("0123456789");
      if (digit == std::string::npos) return line + "  # check";
      std::string out = line;
      out[digit] = static_cast<char>('0' + (out[digit] - '0' + 1 + static_cast<int>(rng() % 8)) % 10);
      return out;
    }
  }
}

std::string synthesize(const std::string& code, llm_eval::TreatmentId t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto lines = split_lines(code);
  const double shift = t == llm_eval::TreatmentId::T1 ? 0.06 : t == llm_eval::TreatmentId::T2 ? -0.04 : 0.0;
  const double rate = std::clamp(0.05 + 0.012 * static_cast<double>(lines.size()) + shift, 0.01, 0.8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::string body;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (t == llm_eval::TreatmentId::T2 && trim(line).starts_with("#")) continue;
    if (i > 0 && u(rng) < rate) {
      line = mutate_line(line, rng);
      if (line.empty()) continue;
    }
    body += line + "\n";
  }
  switch (t) {
    case llm_eval::TreatmentId::control:
      return "Here is the completed method:\n\n```python\n" + body +
             "```\n\nThe function follows the structure of the partial code.";
    case llm_eval::TreatmentId::T1:
      return "```python\n" + body + "```";
    case llm_eval::TreatmentId::T2:
      return "```python\n" + body + "```\nComments were removed.";
  }
  return body;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: record_fixture <prompts.jsonl> <testbed.jsonl> <cache.jsonl>\n";
    return 1;
  }
  try {
    const auto tb = testbeds::import_jsonl(read_file(argv[2]));
    std::map<std::string, std::string> code_of;
    for (const auto& tp : tb.points) code_of.emplace(llm_eval::point_id(tp.point), tp.point.raw.code);

    const llm_eval::GenerationParams params;
    std::string out;
    for (const std::string& line : split_lines(read_file(argv[1]))) {
      if (trim(line).empty()) continue;
      const auto j = nlohmann::ordered_json::parse(line);
      const std::string id = j.at("point_id").get<std::string>();
      const std::string treatment = j.at("treatment").get<std::string>();
      const auto prompts = j.at("prompts").get<std::vector<std::string>>();
      const auto it = code_of.find(id);
      if (it == code_of.end()) throw DataError("prompt for unknown point " + id);
      const std::uint64_t seed = std::stoull(sha256_hex(id + "|" + treatment).substr(0, 16), nullptr, 16);
      llm_eval::CacheEntry e;
      e.request_hash = llm_eval::request_hash(params, prompts);
      e.model = params.model;
      e.params = params.to_json();
      e.prompts = prompts;
      e.response = synthesize(it->second, llm_eval::treatment_from_str(treatment), seed);
      e.timestamp = "2023-04-01T00:00:00Z";
      out += llm_eval::to_json(e).dump() + "\n";
    }
    write_file_atomic(argv[3], out);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
