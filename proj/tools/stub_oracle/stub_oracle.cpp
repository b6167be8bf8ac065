#include "stub_oracle.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iftkit/common/digest.hpp"
#include "iftkit/corpus/tokenizer.hpp"

namespace iftkit::stub {

StubOracle::StubOracle(StubHandler handler)
    : handler_(std::move(handler)), server_(std::make_unique<httplib::Server>()) {
  auto serve = [this](const httplib::Request& req, httplib::Response& res) {
    const std::size_t call = calls_.fetch_add(1);
    const int now = in_flight_.fetch_add(1) + 1;
    int peak = peak_.load();
    while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
    }
    StubReply reply;
    try {
      reply = handler_(nlohmann::json::parse(req.body), call);
    } catch (const std::exception&) {
      reply.status = 500;
      reply.raw = "{\"error\":\"stub handler failed\"}";
    }
    if (reply.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(reply.delay_ms));
    res.status = reply.status;
    if (reply.raw) {
      res.set_content(*reply.raw, "application/json");
    } else {
      nlohmann::json body = {
          {"id", "stub-" + std::to_string(call)},
          {"object", "chat.completion"},
          {"choices",
           {{{"index", 0},
             {"message", {{"role", "assistant"}, {"content", reply.content}}},
             {"finish_reason", "stop"}}}},
          {"usage", {{"prompt_tokens", 0}, {"completion_tokens", 0}, {"total_tokens", 0}}}};
      res.set_content(body.dump(), "application/json");
    }
    in_flight_.fetch_sub(1);
  };
  server_->Post(R"(/.*/chat/completions|/chat/completions)", serve);
}

StubOracle::~StubOracle() { stop(); }

int StubOracle::start(int port) {
  port_ = port == 0 ? server_->bind_to_any_port("127.0.0.1")
                    : (server_->bind_to_port("127.0.0.1", port) ? port : -1);
  if (port_ < 0) throw std::runtime_error("stub oracle: cannot bind");
  thread_ = std::jthread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void StubOracle::run(const std::string& host, int port) {
  port_ = port;
  if (!server_->listen(host, port)) throw std::runtime_error("stub oracle: cannot listen");
}

void StubOracle::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string StubOracle::url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

void StubOracle::reset_counters() {
  calls_ = 0;
  peak_ = 0;
}

std::string user_content(const nlohmann::json& request) {
  const auto& msgs = request.at("messages");
  for (auto it = msgs.rbegin(); it != msgs.rend(); ++it) {
    if ((*it).at("role") == "user") return (*it).at("content").get<std::string>();
  }
  return "";
}

std::string between(std::string_view text, std::string_view begin, std::string_view end) {
  auto b = text.find(begin);
  if (b == std::string_view::npos) return "";
  b += begin.size();
  auto e = text.find(end, b);
  if (e == std::string_view::npos) e = text.size();
  auto s = text.substr(b, e - b);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

namespace {

std::size_t words(std::string_view s) { return corpus::unicode_words(s).size(); }

std::pair<std::string, std::string> judge_answers(const nlohmann::json& request) {
  const auto u = user_content(request);
  return {between(u, "[The Start of Assistant 1's Answer]", "[The End of Assistant 1's Answer]"),
          between(u, "[The Start of Assistant 2's Answer]", "[The End of Assistant 2's Answer]")};
}

}  // namespace

StubReply length_preferring_judge(const nlohmann::json& request) {
  auto [a1, a2] = judge_answers(request);
  const auto w1 = words(a1), w2 = words(a2);
  StubReply r;
  if (w1 == w2) r.content = "7 7\nBoth answers are comparable.";
  else if (w1 > w2) r.content = "9 6\nAssistant 1 gives more detail.";
  else r.content = "6 9\nAssistant 2 gives more detail.";
  return r;
}

StubReply positional_judge(const nlohmann::json&) {
  return {200, "10 1\nThe first answer is better.", std::nullopt, 0};
}

bool refiner_malforms(std::string_view user_prompt, double malformed_rate) {
  if (malformed_rate <= 0) return false;
  const auto h = sha256_hex(user_prompt);
  const auto v = std::stoull(h.substr(0, 12), nullptr, 16) % 1000000;
  return static_cast<double>(v) < malformed_rate * 1000000.0;
}

StubReply echo_refiner(const nlohmann::json& request, double malformed_rate) {
  const auto u = user_content(request);
  StubReply r;
  if (refiner_malforms(u, malformed_rate)) {
    r.content = "I think the response is fine as it is.";
    return r;
  }
  const auto original = between(u, "### Original Response:\n", "\n\nFirst, write a brief review");
  r.content = "### Review:\nThe response is correct but terse.\n### Improved Response:\n" +
              original + " (refined)";
  return r;
}

StubReply length_grader(const nlohmann::json& request) {
  const auto u = user_content(request);
  const auto response = between(u, "### Response:\n", "\n\nPlease rate");
  double score = 1.0 + static_cast<double>(words(response)) / 10.0;
  score = std::min(5.0, std::round(score * 2) / 2);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f", score);
  return {200, std::string(buf) + "\nScored by length.", std::nullopt, 0};
}

StubHandler pipeline_handler(double malformed_rate) {
  return [malformed_rate](const nlohmann::json& request, std::size_t) {
    const auto u = user_content(request);
    if (u.find("[The Start of Assistant 1's Answer]") != std::string::npos) {
      return length_preferring_judge(request);
    }
    if (u.find("### Original Response:") != std::string::npos) {
      return echo_refiner(request, malformed_rate);
    }
    return length_grader(request);
  };
}

}  // namespace iftkit::stub
