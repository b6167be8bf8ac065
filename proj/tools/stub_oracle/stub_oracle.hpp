#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

namespace httplib {
class Server;
}

namespace iftkit::stub {

struct StubReply {
  int status = 200;
  std::string content;            // wrapped in a chat-completions body
  std::optional<std::string> raw;  // sent verbatim instead, when set
  int delay_ms = 0;
};

// Called with the parsed request body and the 0-based index of the call.
using StubHandler = std::function<StubReply(const nlohmann::json& request, std::size_t call)>;

// Local chat-completions endpoint serving POST <prefix>/chat/completions.
class StubOracle {
 public:
  explicit StubOracle(StubHandler handler);
  ~StubOracle();
  StubOracle(const StubOracle&) = delete;
  StubOracle& operator=(const StubOracle&) = delete;

  // Binds 127.0.0.1 (port 0 = any free port) and serves in the background.
  int start(int port = 0);
  void stop();
  // Blocks serving on the calling thread.
  void run(const std::string& host, int port);

  std::string url() const;  // http://127.0.0.1:<port>/v1
  std::size_t calls() const { return calls_.load(); }
  int peak_in_flight() const { return peak_.load(); }
  void reset_counters();

 private:
  StubHandler handler_;
  std::unique_ptr<httplib::Server> server_;
  std::jthread thread_;
  int port_ = 0;
  std::atomic<std::size_t> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

// The last user message of a request.
std::string user_content(const nlohmann::json& request);

// Text between `begin` and `end` markers (trimmed); empty when absent.
std::string between(std::string_view text, std::string_view begin, std::string_view end);

// Scores the longer answer 9 and the shorter 6 (7/7 when equal length).
StubReply length_preferring_judge(const nlohmann::json& request);
// Always prefers whichever answer is shown first: "10 1".
StubReply positional_judge(const nlohmann::json& request);
// Returns a review plus the original response with " (refined)" appended.
// A fixed fraction of prompts, chosen by content hash, get a completion with
// no delimiters; the choice is stable across re-asks.
StubReply echo_refiner(const nlohmann::json& request, double malformed_rate);
bool refiner_malforms(std::string_view user_prompt, double malformed_rate);
// Grade from response length: 1 + words / 10, capped at 5, rounded to 0.5.
StubReply length_grader(const nlohmann::json& request);

// Dispatches on prompt shape: pairwise judge, refinement or grading.
StubHandler pipeline_handler(double malformed_rate = 0.0);

}  // namespace iftkit::stub
