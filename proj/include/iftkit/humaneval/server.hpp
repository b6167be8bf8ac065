#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "iftkit/humaneval/service.hpp"

namespace httplib {
class Server;
}

namespace iftkit::humaneval {

// HTTP+JSON front end:
//   POST /api/studies
//   GET  /api/studies/{id}/next?annotator=...
//   POST /api/studies/{id}/results
//   GET  /api/studies/{id}/summary
//   GET  /api/studies/{id}/rule
// plus an optional static mount for the UI bundle at "/".
class HumanEvalServer {
 public:
  explicit HumanEvalServer(HumanEvalService& service,
                           std::filesystem::path static_dir = {});
  ~HumanEvalServer();

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  void routes();

  HumanEvalService& service_;
  std::filesystem::path static_dir_;
  std::unique_ptr<httplib::Server> server_;
  std::jthread thread_;
};

// Parses a POST /api/studies body. Sets and responses are given inline
// ("sets": {...}, "responses_a": [...], "responses_b": [...]) or as server-side
// paths ("sets_path", "responses_a_path", "responses_b_path").
struct StudyRequest {
  std::vector<judge::EvalSet> sets;
  judge::ResponseSet a;
  judge::ResponseSet b;
  StudyParams params;
};
StudyRequest parse_study_request(const nlohmann::json& body);

}  // namespace iftkit::humaneval
