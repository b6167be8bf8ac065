#include "iftkit/humaneval/server.hpp"

#include <httplib.h>

#include "iftkit/common/error.hpp"

namespace iftkit::humaneval {
namespace {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kIo: return 500;
    default: return 400;
  }
}

void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorKind kind, const std::string& message) {
  send_json(res, http_status(kind), {{"error", to_string(kind)}, {"message", message}});
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.kind(), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, ErrorKind::kParse, e.what());
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
    }
  };
}

nlohmann::json parse_body(const httplib::Request& req) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("request body: ") + e.what());
  }
}

judge::ResponseSet inline_responses(const nlohmann::json& arr, std::string_view field) {
  if (!arr.is_array()) throw ValidationError(std::string(field) + " must be an array");
  std::string jsonl;
  for (const auto& r : arr) jsonl += r.dump() + "\n";
  return judge::responses_from_jsonl(jsonl, field);
}

}  // namespace

StudyRequest parse_study_request(const nlohmann::json& body) {
  if (!body.is_object()) throw ValidationError("study request must be a JSON object");
  StudyRequest req;
  if (body.contains("sets_path")) {
    req.sets = judge::load_eval_sets(body.at("sets_path").get<std::string>());
  } else if (body.contains("sets")) {
    req.sets = judge::eval_sets_from_json(body.at("sets"));
  } else {
    throw ValidationError("study request needs 'sets' or 'sets_path'");
  }
  auto responses = [&](const char* key) {
    const std::string path_key = std::string(key) + "_path";
    if (body.contains(path_key)) return judge::load_responses(body.at(path_key).get<std::string>());
    if (body.contains(key)) return inline_responses(body.at(key), key);
    throw ValidationError(std::string("study request needs '") + key + "' or '" + path_key + "'");
  };
  req.a = responses("responses_a");
  req.b = responses("responses_b");
  req.params.n = body.value("n", std::size_t{100});
  if (!body.contains("seed") || !body.at("seed").is_number_unsigned()) {
    throw ValidationError("study request needs a non-negative integer 'seed'");
  }
  req.params.seed = body.at("seed").get<std::uint64_t>();
  req.params.forced_choice = body.value("forced_choice", true);
  if (body.contains("rule_text")) req.params.rule_text = body.at("rule_text").get<std::string>();
  return req;
}

HumanEvalServer::HumanEvalServer(HumanEvalService& service, std::filesystem::path static_dir)
    : service_(service),
      static_dir_(std::move(static_dir)),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

HumanEvalServer::~HumanEvalServer() { stop(); }

void HumanEvalServer::routes() {
  auto& s = *server_;
  s.Post("/api/studies", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto r = parse_study_request(parse_body(req));
    auto study = service_.create_study(r.sets, r.a, r.b, r.params);
    send_json(res, 201,
              {{"study_id", study->study_id},
               {"n_tasks", study->tasks.size()},
               {"forced_choice", study->forced_choice}});
  }));
  s.Get(R"(/api/studies/([^/]+)/next)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          const std::string annotator = req.get_param_value("annotator");
          if (annotator.empty()) throw ValidationError("query parameter 'annotator' is required");
          const std::string id = req.matches[1];
          auto task = service_.next_task(id, annotator);
          const auto total = service_.snapshot(id)->study->tasks.size();
          nlohmann::ordered_json body;
          body["done"] = !task.has_value();
          body["progress"] = {{"answered", service_.answered_count(id, annotator)},
                              {"total", total}};
          body["task"] = task ? task->to_json() : nlohmann::ordered_json(nullptr);
          send_json(res, 200, body);
        }));
  s.Post(R"(/api/studies/([^/]+)/results)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           auto result = AnnotationResult::from_json(parse_body(req));
           service_.submit_preference(std::string(req.matches[1]), result);
           send_json(res, 201, {{"ok", true}});
         }));
  s.Get(R"(/api/studies/([^/]+)/summary)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, service_.study_results(std::string(req.matches[1])).to_json());
        }));
  s.Get(R"(/api/studies/([^/]+)/rule)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, {{"rule_text", service_.rule_text(std::string(req.matches[1]))}});
        }));
  if (!static_dir_.empty() && !s.set_mount_point("/", static_dir_.string())) {
    throw ConfigError("static directory " + static_dir_.string() + " does not exist");
  }
}

int HumanEvalServer::start(const std::string& host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : server_->bind_to_port(host, port) ? port : -1;
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::jthread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HumanEvalServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HumanEvalServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace iftkit::humaneval
