#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iftkit/common/error.hpp"

namespace iftkit::oracle {

struct RetryPolicy {
  int max_attempts = 4;
  int base_backoff_ms = 500;
  double jitter = 0.25;  // fraction in [0, 1]; keeps delays non-decreasing
};

struct OracleConfig {
  std::string endpoint_url;  // e.g. https://api.example.com/v1
  std::string model_id;
  double temperature = 0.0;
  int max_tokens = 1024;
  int max_in_flight = 4;
  RetryPolicy retry;
  std::filesystem::path cache_dir;  // empty disables the cache
  int timeout_ms = 120000;

  void check() const;
  nlohmann::json to_json() const;
  static OracleConfig from_json(const nlohmann::json& j);
};

enum class Role { kSystem, kUser, kAssistant };
std::string_view role_name(Role role);

struct Message {
  Role role;
  std::string content;
};

struct ChatRequest {
  std::vector<Message> messages;
  std::optional<double> temperature;  // falls back to OracleConfig
  std::optional<int> max_tokens;      // falls back to OracleConfig
  // Distinguishes deliberate re-asks of an identical prompt (fresh samples)
  // in the cache key. Zero for ordinary requests.
  std::uint32_t sample_index = 0;
};

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t total_tokens = 0;
};

struct ChatResponse {
  std::string content;
  std::string finish_reason;
  std::optional<Usage> usage;
  std::string request_digest;
  bool from_cache = false;
  int attempts = 0;                // HTTP attempts made for this call
  std::vector<int> backoff_ms;     // delay slept before each retry
};

enum class FailureClass { kTransientExhausted, kPermanent, kProtocol };
std::string_view failure_class_name(FailureClass c);

class OracleError : public TransportError {
 public:
  OracleError(FailureClass failure, int attempts, int http_status,
              const std::string& message)
      : TransportError(message),
        failure_(failure),
        attempts_(attempts),
        http_status_(http_status) {}

  FailureClass failure() const { return failure_; }
  int attempts() const { return attempts_; }
  int http_status() const { return http_status_; }

 private:
  FailureClass failure_;
  int attempts_;
  int http_status_;
};

// One raw HTTP exchange. status 0 means the connection itself failed.
struct HttpReply {
  int status = 0;
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post_json(const std::string& body,
                              const std::string& bearer_token) = 0;
};

// POSTs to {endpoint_url}/chat/completions over HTTP or HTTPS.
std::shared_ptr<Transport> make_http_transport(const std::string& endpoint_url,
                                               int timeout_ms);

struct BatchItem {
  std::optional<ChatResponse> response;
  std::optional<FailureClass> failure;
  std::string error;

  bool ok() const { return response.has_value(); }
};

struct BatchResult {
  std::vector<BatchItem> items;  // input order

  std::vector<std::size_t> failed_indices() const;
  std::size_t failure_count() const { return failed_indices().size(); }
};

struct CallPlan {
  std::size_t total = 0;
  std::size_t cached = 0;
  std::size_t network = 0;
};

// Chat-completions client with a bounded in-flight window, retries with
// exponential backoff, and a content-addressed on-disk cache. Safe to use
// from several threads at once.
class OracleClient {
 public:
  explicit OracleClient(OracleConfig config,
                        std::shared_ptr<Transport> transport = nullptr);

  ChatResponse chat(const ChatRequest& request) const;
  BatchResult chat_batch(std::span<const ChatRequest> requests) const;

  // Cache key: SHA-256 over the canonical JSON of model, messages,
  // temperature and max_tokens (plus sample_index when nonzero).
  std::string digest(const ChatRequest& request) const;
  bool is_cached(const ChatRequest& request) const;
  CallPlan plan(std::span<const ChatRequest> requests) const;

  // Number of HTTP attempts issued so far by this client.
  std::size_t network_calls() const { return network_calls_.load(); }

  // Replaces the sleep used between retries (tests pass a no-op).
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) {
    sleeper_ = std::move(sleeper);
  }

  const OracleConfig& config() const { return config_; }

 private:
  nlohmann::json canonical(const ChatRequest& request) const;
  std::optional<ChatResponse> load_cached(const std::string& digest) const;
  void store_cached(const std::string& digest, const nlohmann::json& request,
                    const ChatResponse& response) const;
  int backoff_delay_ms(const std::string& digest, int retry) const;

  OracleConfig config_;
  std::shared_ptr<Transport> transport_;
  std::string api_key_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
  mutable std::atomic<std::size_t> network_calls_{0};
};

// Parses a chat-completions response body. Throws OracleError(kProtocol) if
// the first choice carries no message content.
ChatResponse parse_completion_body(const std::string& body);

// Request body sent on the wire.
nlohmann::json wire_body(const nlohmann::json& canonical_request);

}  // namespace iftkit::oracle
