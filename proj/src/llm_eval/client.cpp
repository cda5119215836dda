#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>
#include <fstream>
#include <thread>

#include "codecause/error.hpp"
#include "codecause/llm_eval.hpp"
#include "codecause/util.hpp"

namespace codecause::llm_eval {

nlohmann::ordered_json GenerationParams::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["temperature"] = temperature;
  j["max_tokens"] = max_tokens;
  return j;
}

GenerationParams GenerationParams::from_json(const nlohmann::ordered_json& j) {
  GenerationParams p;
  p.model = j.value("model", p.model);
  p.temperature = j.value("temperature", p.temperature);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  if (p.model.empty()) throw UsageError("generation params: model must not be empty");
  if (p.max_tokens < 1) throw UsageError("generation params: max_tokens must be positive");
  return p;
}

std::string request_hash(const GenerationParams& params, const std::vector<std::string>& prompts) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  j.push_back(params.model);
  j.push_back(params.to_json());
  j.push_back(prompts);
  return sha256_hex(j.dump());
}

nlohmann::ordered_json to_json(const CacheEntry& e) {
  nlohmann::ordered_json j;
  j["request_hash"] = e.request_hash;
  j["model"] = e.model;
  j["params"] = e.params;
  j["prompts"] = e.prompts;
  j["response"] = e.response;
  j["timestamp"] = e.timestamp;
  return j;
}

CacheEntry cache_entry_from_json(const nlohmann::ordered_json& j) {
  CacheEntry e;
  for (const char* key : {"request_hash", "model", "params", "prompts", "response"}) {
    if (!j.contains(key)) throw DataError(std::string("cache entry missing '") + key + "'");
  }
  e.request_hash = j["request_hash"].get<std::string>();
  e.model = j["model"].get<std::string>();
  e.params = j["params"];
  e.prompts = j["prompts"].get<std::vector<std::string>>();
  e.response = j["response"].get<std::string>();
  e.timestamp = j.value("timestamp", "");
  return e;
}

ReplayCache::ReplayCache(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(read_file(path_))) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const CacheEntry e = cache_entry_from_json(nlohmann::ordered_json::parse(line));
      responses_[e.request_hash] = e.response;
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(path_.string() + " line " + std::to_string(line_no) + ": " + ex.what());
    } catch (const DataError& ex) {
      throw DataError(path_.string() + " line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
}

std::optional<std::string> ReplayCache::lookup(const std::string& hash) const {
  std::shared_lock lock(mutex_);
  const auto it = responses_.find(hash);
  if (it == responses_.end()) return std::nullopt;
  return it->second;
}

void ReplayCache::append(const CacheEntry& entry) {
  std::unique_lock lock(mutex_);
  if (responses_.count(entry.request_hash)) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << to_json(entry).dump() << '\n';
  out.flush();
  if (!out) throw DataError("cannot append to cache " + path_.string());
  responses_[entry.request_hash] = entry.response;
}

std::size_t ReplayCache::size() const {
  std::shared_lock lock(mutex_);
  return responses_.size();
}

HttpTransport::HttpTransport(std::string endpoint, std::string api_key, std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw UsageError("endpoint must be a full URL: '" + endpoint + "'");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  scheme_host_ = endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
}

std::unique_ptr<HttpTransport> HttpTransport::from_environment() {
  const char* endpoint = std::getenv("CODECAUSE_LLM_ENDPOINT");
  if (!endpoint || !*endpoint) throw UsageError("live mode needs CODECAUSE_LLM_ENDPOINT");
  const char* key = std::getenv("CODECAUSE_LLM_API_KEY");
  return std::make_unique<HttpTransport>(endpoint, key ? key : "");
}

std::string HttpTransport::send(const std::vector<ChatMessage>& conversation, const GenerationParams& params) {
  nlohmann::ordered_json body;
  body["model"] = params.model;
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_tokens;
  body["messages"] = nlohmann::ordered_json::array();
  for (const ChatMessage& m : conversation) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Client client(scheme_host_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw UpstreamError("request to " + scheme_host_ + " failed: " + httplib::to_string(res.error()), true);
  if (res->status == 401 || res->status == 403) {
    throw UpstreamError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")", true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw UpstreamError("endpoint returned HTTP " + std::to_string(res->status), true);
  }
  if (res->status != 200) throw UpstreamError("endpoint returned HTTP " + std::to_string(res->status), false);
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw UpstreamError(std::string("unexpected completion payload: ") + e.what(), false);
  }
}

TokenBucket::TokenBucket(double rate, double burst)
    : rate_(rate), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)), last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (rate_ <= 0.0) return;
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

LlmClient::LlmClient(ClientMode mode, std::shared_ptr<ReplayCache> cache, std::shared_ptr<Transport> transport,
                     ClientLimits limits)
    : mode_(mode),
      cache_(std::move(cache)),
      transport_(std::move(transport)),
      limits_(limits),
      slots_(std::make_unique<std::counting_semaphore<>>(std::max<std::ptrdiff_t>(1, limits.max_concurrent))),
      bucket_(limits.requests_per_second, limits.burst) {
  if (!cache_) throw UsageError("client needs a cache");
  if (mode_ == ClientMode::live && !transport_) throw UsageError("live mode needs a transport");
}

std::string LlmClient::send_with_retry(const std::vector<ChatMessage>& conversation, const GenerationParams& params) {
  auto backoff = limits_.backoff;
  for (int attempt = 0;; ++attempt) {
    bucket_.acquire();
    slots_->acquire();
    try {
      std::string reply = transport_->send(conversation, params);
      slots_->release();
      return reply;
    } catch (const UpstreamError& e) {
      slots_->release();
      if (!e.retriable() || attempt >= limits_.max_retries) throw;
    } catch (...) {
      slots_->release();
      throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

std::string LlmClient::complete(const std::vector<std::string>& prompts, const GenerationParams& params) {
  if (prompts.empty()) throw UsageError("no prompts to send");
  const std::string hash = request_hash(params, prompts);
  if (auto hit = cache_->lookup(hash)) return *hit;
  if (mode_ == ClientMode::replay) {
    throw UpstreamError("replay cache miss for request " + hash.substr(0, 12) + " (" +
                            std::to_string(prompts.size()) + " step(s), model " + params.model + ")",
                        false);
  }
  std::vector<ChatMessage> conversation;
  std::string reply;
  for (const std::string& p : prompts) {
    conversation.push_back({"user", p});
    reply = send_with_retry(conversation, params);
    conversation.push_back({"assistant", reply});
  }
  CacheEntry entry;
  entry.request_hash = hash;
  entry.model = params.model;
  entry.params = params.to_json();
  entry.prompts = prompts;
  entry.response = reply;
  entry.timestamp = format_timestamp(Timestamp{std::chrono::duration_cast<std::chrono::seconds>(
                                                   std::chrono::system_clock::now().time_since_epoch())
                                                   .count()});
  cache_->append(entry);
  return reply;
}

std::string extract_code(std::string_view response) {
  std::string_view best;
  bool found = false;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t open = response.find("```", pos);
    if (open == std::string_view::npos) break;
    const std::size_t line_end = response.find('\n', open + 3);
    if (line_end == std::string_view::npos) break;
    const std::size_t close = response.find("```", line_end + 1);
    if (close == std::string_view::npos) break;
    const std::string_view body = response.substr(line_end + 1, close - line_end - 1);
    if (!found || body.size() > best.size()) best = body;
    found = true;
    pos = close + 3;
  }
  return std::string(found ? best : response);
}

}  // namespace codecause::llm_eval
