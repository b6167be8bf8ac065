#include "iftkit/oracle/client.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <spdlog/spdlog.h>

#include "iftkit/common/digest.hpp"
#include "iftkit/common/files.hpp"
#include "iftkit/common/rng.hpp"

namespace iftkit::oracle {

using json = nlohmann::json;

namespace {

std::uint64_t seed_from_digest(const std::string& digest) {
  return std::stoull(digest.substr(0, 16), nullptr, 16);
}

bool transient_status(int status) {
  return status == 0 || status == 429 || (status >= 500 && status <= 599);
}

}  // namespace

void OracleConfig::check() const {
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (retry.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (retry.base_backoff_ms < 0) throw ConfigError("base_backoff_ms must be >= 0");
  if (!(retry.jitter >= 0.0 && retry.jitter <= 1.0)) {
    throw ConfigError("retry jitter must lie in [0, 1]");
  }
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (max_tokens < 1) throw ConfigError("max_tokens must be positive");
  if (model_id.empty()) throw ConfigError("model_id is required");
}

json OracleConfig::to_json() const {
  return {{"endpoint_url", endpoint_url},
          {"model_id", model_id},
          {"temperature", temperature},
          {"max_tokens", max_tokens},
          {"max_in_flight", max_in_flight},
          {"retry",
           {{"max_attempts", retry.max_attempts},
            {"base_backoff_ms", retry.base_backoff_ms},
            {"jitter", retry.jitter}}},
          {"cache_dir", cache_dir.string()},
          {"timeout_ms", timeout_ms}};
}

OracleConfig OracleConfig::from_json(const json& j) {
  OracleConfig c;
  c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
  c.model_id = j.value("model_id", c.model_id);
  c.temperature = j.value("temperature", c.temperature);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  if (j.contains("retry")) {
    const auto& r = j["retry"];
    c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
    c.retry.base_backoff_ms = r.value("base_backoff_ms", c.retry.base_backoff_ms);
    c.retry.jitter = r.value("jitter", c.retry.jitter);
  }
  c.cache_dir = j.value("cache_dir", std::string());
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  return c;
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

std::string_view failure_class_name(FailureClass c) {
  switch (c) {
    case FailureClass::kTransientExhausted: return "transient_exhausted";
    case FailureClass::kPermanent: return "permanent";
    case FailureClass::kProtocol: return "protocol";
  }
  return "unknown";
}

std::vector<std::size_t> BatchResult::failed_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].ok()) out.push_back(i);
  }
  return out;
}

json wire_body(const json& canonical_request) {
  json body = canonical_request;
  body.erase("sample_index");
  return body;
}

ChatResponse parse_completion_body(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw OracleError(FailureClass::kProtocol, 1, 200,
                      "response body is not JSON");
  }
  const json* content = nullptr;
  if (j.is_object() && j.contains("choices") && j["choices"].is_array() &&
      !j["choices"].empty()) {
    const auto& choice = j["choices"][0];
    if (choice.is_object() && choice.contains("message") &&
        choice["message"].is_object() && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
      content = &choice["message"]["content"];
    }
  }
  if (content == nullptr) {
    throw OracleError(FailureClass::kProtocol, 1, 200,
                      "response lacks choices[0].message.content");
  }
  ChatResponse r;
  r.content = content->get<std::string>();
  const auto& choice = j["choices"][0];
  if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
    r.finish_reason = choice["finish_reason"].get<std::string>();
  }
  if (j.contains("usage") && j["usage"].is_object()) {
    const auto& u = j["usage"];
    r.usage = Usage{u.value("prompt_tokens", std::int64_t{0}),
                    u.value("completion_tokens", std::int64_t{0}),
                    u.value("total_tokens", std::int64_t{0})};
  }
  return r;
}

OracleClient::OracleClient(OracleConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.check();
  if (!transport_) {
    transport_ = make_http_transport(config_.endpoint_url, config_.timeout_ms);
  }
  if (const char* key = std::getenv("ORACLE_API_KEY")) api_key_ = key;
  sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

json OracleClient::canonical(const ChatRequest& request) const {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  // nlohmann::json objects keep keys sorted, so dump() is canonical.
  json j = {{"model", config_.model_id},
            {"messages", std::move(messages)},
            {"temperature", request.temperature.value_or(config_.temperature)},
            {"max_tokens", request.max_tokens.value_or(config_.max_tokens)}};
  if (request.sample_index != 0) j["sample_index"] = request.sample_index;
  return j;
}

std::string OracleClient::digest(const ChatRequest& request) const {
  return sha256_hex(canonical(request).dump());
}

std::optional<ChatResponse> OracleClient::load_cached(const std::string& digest) const {
  if (config_.cache_dir.empty()) return std::nullopt;
  const auto path = config_.cache_dir / (digest + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    const json j = json::parse(read_file(path));
    const auto& r = j.at("response");
    ChatResponse out;
    out.content = r.at("content").get<std::string>();
    out.finish_reason = r.value("finish_reason", std::string());
    if (r.contains("usage") && r["usage"].is_object()) {
      const auto& u = r["usage"];
      out.usage = Usage{u.value("prompt_tokens", std::int64_t{0}),
                        u.value("completion_tokens", std::int64_t{0}),
                        u.value("total_tokens", std::int64_t{0})};
    }
    out.request_digest = digest;
    out.from_cache = true;
    return out;
  } catch (const std::exception& e) {
    spdlog::warn("ignoring unreadable cache entry {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void OracleClient::store_cached(const std::string& digest, const json& request,
                                const ChatResponse& response) const {
  if (config_.cache_dir.empty()) return;
  json r = {{"content", response.content},
            {"finish_reason", response.finish_reason}};
  if (response.usage) {
    r["usage"] = {{"prompt_tokens", response.usage->prompt_tokens},
                  {"completion_tokens", response.usage->completion_tokens},
                  {"total_tokens", response.usage->total_tokens}};
  }
  const json entry = {{"digest", digest}, {"request", request}, {"response", r}};
  write_file_atomic(config_.cache_dir / (digest + ".json"), entry.dump(2) + "\n");
}

bool OracleClient::is_cached(const ChatRequest& request) const {
  if (config_.cache_dir.empty()) return false;
  std::error_code ec;
  return std::filesystem::exists(config_.cache_dir / (digest(request) + ".json"), ec);
}

CallPlan OracleClient::plan(std::span<const ChatRequest> requests) const {
  CallPlan p;
  p.total = requests.size();
  for (const auto& r : requests) {
    if (is_cached(r)) ++p.cached;
  }
  p.network = p.total - p.cached;
  return p;
}

int OracleClient::backoff_delay_ms(const std::string& digest, int retry) const {
  // retry is 1 for the delay before the second attempt. base * 2^(retry-1),
  // stretched by up to `jitter`; with jitter <= 1 the sequence never shrinks.
  SplitMix64 rng(seed_from_digest(digest) + static_cast<std::uint64_t>(retry));
  const double base = config_.retry.base_backoff_ms * std::ldexp(1.0, retry - 1);
  return static_cast<int>(std::floor(base * (1.0 + config_.retry.jitter * rng.uniform())));
}

ChatResponse OracleClient::chat(const ChatRequest& request) const {
  const json canon = canonical(request);
  const std::string dig = sha256_hex(canon.dump());
  if (auto hit = load_cached(dig)) return *hit;

  const std::string body = wire_body(canon).dump();
  std::vector<int> delays;
  HttpReply last;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      const int d = backoff_delay_ms(dig, attempt - 1);
      delays.push_back(d);
      sleeper_(std::chrono::milliseconds(d));
    }
    network_calls_.fetch_add(1);
    last = transport_->post_json(body, api_key_);
    if (last.status >= 200 && last.status < 300) {
      ChatResponse response;
      try {
        response = parse_completion_body(last.body);
      } catch (const OracleError& e) {
        throw OracleError(FailureClass::kProtocol, attempt, last.status, e.what());
      }
      response.request_digest = dig;
      response.attempts = attempt;
      response.backoff_ms = delays;
      store_cached(dig, canon, response);
      return response;
    }
    if (!transient_status(last.status)) {
      throw OracleError(FailureClass::kPermanent, attempt, last.status,
                        "oracle rejected request with HTTP " +
                            std::to_string(last.status));
    }
    spdlog::warn("oracle attempt {}/{} failed ({}), retrying", attempt,
                 config_.retry.max_attempts,
                 last.status == 0 ? last.error : "HTTP " + std::to_string(last.status));
  }
  throw OracleError(FailureClass::kTransientExhausted, config_.retry.max_attempts,
                    last.status,
                    "oracle unavailable after " +
                        std::to_string(config_.retry.max_attempts) + " attempts (" +
                        (last.status == 0 ? last.error
                                          : "HTTP " + std::to_string(last.status)) +
                        ")");
}

BatchResult OracleClient::chat_batch(std::span<const ChatRequest> requests) const {
  BatchResult result;
  result.items.resize(requests.size());
  if (requests.empty()) return result;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < requests.size();
         i = next.fetch_add(1)) {
      auto& item = result.items[i];
      try {
        item.response = chat(requests[i]);
      } catch (const OracleError& e) {
        item.failure = e.failure();
        item.error = e.what();
      } catch (const std::exception& e) {
        item.failure = FailureClass::kProtocol;
        item.error = e.what();
      }
    }
  };
  const auto workers = std::min<std::size_t>(
      static_cast<std::size_t>(config_.max_in_flight), requests.size());
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return result;
}

}  // namespace iftkit::oracle
