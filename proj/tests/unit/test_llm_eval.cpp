#include <atomic>
#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "codecause/error.hpp"
#include "codecause/llm_eval.hpp"
#include "codecause/util.hpp"

using namespace codecause;
using namespace codecause::llm_eval;
namespace fs = std::filesystem;

namespace {

class ScriptedTransport : public Transport {
 public:
  int failures_left = 0;
  bool retriable = true;
  std::atomic<int> calls{0};
  std::vector<std::size_t> conversation_sizes;

  std::string send(const std::vector<ChatMessage>& conversation, const GenerationParams&) override {
    ++calls;
    conversation_sizes.push_back(conversation.size());
    if (failures_left > 0) {
      --failures_left;
      throw UpstreamError("HTTP 503", retriable);
    }
    return "reply to: " + conversation.back().content;
  }
};

ClientLimits fast_limits() {
  ClientLimits l;
  l.requests_per_second = 1000.0;
  l.burst = 100.0;
  l.backoff = std::chrono::milliseconds(1);
  return l;
}

fs::path temp_cache(const std::string& name) {
  const auto p = fs::temp_directory_path() / name;
  fs::remove(p);
  return p;
}

}  // namespace

TEST_CASE("prompt rendering fills placeholders") {
  const PromptInput in{"def f(x):\n    return", "f", std::string("Return x.")};
  const auto control = render_prompts(in, TreatmentSpec::defaults(TreatmentId::control));
  REQUIRE(control.size() == 1);
  CHECK(control[0] == "Complete the following python method: ```def f(x):\n    return```");
  const auto t2 = render_prompts(in, TreatmentSpec::defaults(TreatmentId::T2));
  REQUIRE(t2.size() == 2);
  CHECK(t2[1].find("named `f`") != std::string::npos);
  CHECK(t2[0].find("```Return x.```") != std::string::npos);

  PromptInput no_doc = in;
  no_doc.docstring.reset();
  CHECK_THROWS_AS(render_prompts(no_doc, TreatmentSpec::defaults(TreatmentId::T2)), DataError);
  CHECK_THROWS_AS(render_prompts(in, TreatmentSpec{TreatmentId::control, {"{nope}"}}), DataError);
  CHECK_THROWS_AS(TreatmentSpec({TreatmentId::T2, {"one"}}).validate(), UsageError);
}

TEST_CASE("request hash depends on model, params and prompts") {
  GenerationParams p;
  const auto h = request_hash(p, {"a"});
  CHECK(h.size() == 64);
  CHECK(h == request_hash(p, {"a"}));
  CHECK(h != request_hash(p, {"b"}));
  CHECK(h != request_hash(p, {"a", ""}));
  p.temperature = 0.5;
  CHECK(h != request_hash(p, {"a"}));
}

TEST_CASE("replay cache persists appends") {
  const auto path = temp_cache("codecause_cache_test.jsonl");
  {
    ReplayCache cache(path);
    CHECK(cache.size() == 0);
    CacheEntry e;
    e.request_hash = "h1";
    e.model = "m";
    e.params = GenerationParams{}.to_json();
    e.prompts = {"p"};
    e.response = "line one\nline two";
    e.timestamp = "2023-04-01T00:00:00Z";
    cache.append(e);
  }
  ReplayCache reloaded(path);
  CHECK(reloaded.size() == 1);
  CHECK(reloaded.lookup("h1") == std::optional<std::string>("line one\nline two"));
  CHECK_FALSE(reloaded.lookup("h2").has_value());
  fs::remove(path);
}

TEST_CASE("replay miss is a non-retriable upstream error") {
  auto cache = std::make_shared<ReplayCache>(temp_cache("codecause_cache_miss.jsonl"));
  LlmClient client(ClientMode::replay, cache);
  try {
    client.complete({"anything"}, GenerationParams{});
    FAIL("expected a cache miss");
  } catch (const UpstreamError& e) {
    CHECK_FALSE(e.retriable());
    CHECK(e.kind() == ErrorKind::Upstream);
  }
}

TEST_CASE("live client records replies and serves repeats from the cache") {
  const auto path = temp_cache("codecause_cache_live.jsonl");
  auto cache = std::make_shared<ReplayCache>(path);
  auto transport = std::make_shared<ScriptedTransport>();
  LlmClient live(ClientMode::live, cache, transport, fast_limits());
  const GenerationParams params;
  CHECK(live.complete({"first", "second"}, params) == "reply to: second");
  // Two steps: one user message, then user, assistant, user.
  CHECK(transport->conversation_sizes == std::vector<std::size_t>{1, 3});
  CHECK(live.complete({"first", "second"}, params) == "reply to: second");
  CHECK(transport->calls == 2);

  LlmClient replay(ClientMode::replay, std::make_shared<ReplayCache>(path));
  CHECK(replay.complete({"first", "second"}, params) == "reply to: second");
  fs::remove(path);
}

TEST_CASE("retries transient failures with a bound") {
  auto transport = std::make_shared<ScriptedTransport>();
  auto limits = fast_limits();
  limits.max_retries = 3;
  transport->failures_left = 2;
  LlmClient client(ClientMode::live, std::make_shared<ReplayCache>(temp_cache("codecause_retry1.jsonl")), transport,
                   limits);
  CHECK(client.complete({"x"}, GenerationParams{}) == "reply to: x");
  CHECK(transport->calls == 3);

  auto always = std::make_shared<ScriptedTransport>();
  always->failures_left = 100;
  LlmClient giving_up(ClientMode::live, std::make_shared<ReplayCache>(temp_cache("codecause_retry2.jsonl")), always,
                      limits);
  CHECK_THROWS_AS(giving_up.complete({"x"}, GenerationParams{}), UpstreamError);
  CHECK(always->calls == 4);

  auto fatal = std::make_shared<ScriptedTransport>();
  fatal->failures_left = 1;
  fatal->retriable = false;
  LlmClient no_retry(ClientMode::live, std::make_shared<ReplayCache>(temp_cache("codecause_retry3.jsonl")), fatal,
                     limits);
  CHECK_THROWS_AS(no_retry.complete({"x"}, GenerationParams{}), UpstreamError);
  CHECK(fatal->calls == 1);
}

TEST_CASE("live mode without an endpoint is a usage error") {
  unsetenv("CODECAUSE_LLM_ENDPOINT");
  CHECK_THROWS_AS(HttpTransport::from_environment(), UsageError);
}

TEST_CASE("code extraction picks the longest fenced block") {
  CHECK(extract_code("Sure:\n```python\nx = 1\n```\nand\n```\ny = 2\nz = 3\n```\n") == "y = 2\nz = 3\n");
  CHECK(extract_code("def f():\n    pass\n") == "def f():\n    pass\n");
}

TEST_CASE("levenshtein on known pairs") {
  CHECK(levenshtein("kitten", "sitting").distance == 3);
  CHECK(levenshtein("kitten", "sitting").similarity == doctest::Approx(1.0 - 3.0 / 7.0));
  CHECK(levenshtein("", "").similarity == 1.0);
  CHECK(levenshtein("", "abc").distance == 3);
  CHECK(levenshtein("caf\xc3\xa9", "cafe").distance == 1);
}

TEST_CASE("bleu on hand-worked references") {
  // p1 = 5/6, p2 = 3/5, p3 = 1/4, p4 = 0 -> 1/(3+1); equal lengths. (1/32)^(1/4).
  const std::vector<std::string> cand = {"the", "cat", "sat", "on", "the", "mat"};
  const std::vector<std::string> ref = {"the", "cat", "is", "on", "the", "mat"};
  CHECK(bleu_tokens(cand, ref) == doctest::Approx(std::pow(2.0, -1.25)).epsilon(1e-12));
  // Every n-gram matches; brevity penalty exp(1 - 6/4).
  CHECK(bleu_tokens({"a", "b", "c", "d"}, {"a", "b", "c", "d", "e", "f"}) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(bleu_tokens({"z"}, {"a", "b"}) == 0.0);
  CHECK_THROWS_AS(bleu_tokens({"a"}, {}), DataError);
}

TEST_CASE("codebleu components") {
  const std::string code = "def f(a, b):\n    c = a + b\n    return c\n";
  CHECK(codebleu(code, code) == doctest::Approx(1.0));
  const auto parts = codebleu_parts("def f(a, b):\n    d = a - b\n    return d\n", code);
  CHECK(parts.syntax == doctest::Approx(1.0));
  CHECK(parts.dataflow < 1.0);
  CHECK(parts.score == doctest::Approx(0.25 * (parts.ngram + parts.weighted_ngram + parts.syntax + parts.dataflow)));
  CHECK(codebleu(code, code.substr(0, 20), {1, 0, 0, 0}) == doctest::Approx(bleu(code, code.substr(0, 20))));
  CHECK_THROWS_AS(codebleu(code, code, {0.5, 0.5, 0.5, 0}), UsageError);
  CHECK(keyword_weight("return") == 1.0);
  CHECK(keyword_weight("c") == 0.2);
}

TEST_CASE("dataflow items") {
  const auto items = dataflow_items("def f(a):\n    b = a\n    return b\n");
  REQUIRE_FALSE(items.empty());
  const DataflowItem def{"b", "computedFrom", {"a"}};
  CHECK(std::find(items.begin(), items.end(), def) != items.end());
}

TEST_CASE("parallel scoring equals the serial reference and round-trips") {
  std::map<std::string, std::string> refs;
  std::vector<Generation> gens;
  for (int i = 0; i < 40; ++i) {
    const std::string id = "p" + std::to_string(i);
    refs[id] = "def f" + std::to_string(i) + "(x):\n    return x + " + std::to_string(i) + "\n";
    gens.push_back({id, static_cast<TreatmentId>(i % 3), 10 + i,
                    "```python\ndef f" + std::to_string(i) + "(x):\n    return x - " + std::to_string(i) + "\n```"});
  }
  const auto par = score_all(gens, refs);
  const auto ser = score_all_serial(gens, refs);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].y_codebleu == ser[i].y_codebleu);
    CHECK(par[i].y_lev_distance == ser[i].y_lev_distance);
  }
  CHECK(par[3].y_lev_distance == 1);

  const auto back = parse_eval_csv(eval_csv(par));
  REQUIRE(back.size() == par.size());
  CHECK(back[5].y_bleu == par[5].y_bleu);
  CHECK(back[5].y_lev_similarity == par[5].y_lev_similarity);
  CHECK(back[5].treatment == par[5].treatment);
  CHECK(parse_generations_jsonl(generations_jsonl(gens))[7].response == gens[7].response);

  gens.push_back({"unknown", TreatmentId::control, 1, "x"});
  CHECK_THROWS_AS(score_all(gens, refs), DataError);
}
