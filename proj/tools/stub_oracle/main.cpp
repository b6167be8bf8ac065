// Local stand-in for a chat-completions endpoint, for offline pipeline runs.
#include <CLI11.hpp>

#include <iostream>

#include "stub_oracle.hpp"

int main(int argc, char** argv) {
  CLI::App app{"iftkit-stub-oracle: deterministic local chat-completions server"};
  std::string host = "127.0.0.1", mode = "pipeline";
  int port = 8091;
  double malformed = 0.0;
  app.add_option("--host", host);
  app.add_option("--port", port);
  app.add_option("--mode", mode, "pipeline, length-judge, positional-judge, refiner or grader");
  app.add_option("--malformed-rate", malformed, "Fraction of malformed refinements");
  CLI11_PARSE(app, argc, argv);

  using namespace iftkit::stub;
  StubHandler handler;
  if (mode == "pipeline") {
    handler = pipeline_handler(malformed);
  } else if (mode == "length-judge") {
    handler = [](const nlohmann::json& r, std::size_t) { return length_preferring_judge(r); };
  } else if (mode == "positional-judge") {
    handler = [](const nlohmann::json& r, std::size_t) { return positional_judge(r); };
  } else if (mode == "refiner") {
    handler = [malformed](const nlohmann::json& r, std::size_t) { return echo_refiner(r, malformed); };
  } else if (mode == "grader") {
    handler = [](const nlohmann::json& r, std::size_t) { return length_grader(r); };
  } else {
    std::cerr << "unknown mode " << mode << "\n";
    return 2;
  }
  StubOracle stub(handler);
  std::cerr << "stub oracle on http://" << host << ":" << port << "/v1\n";
  stub.run(host, port);
  return 0;
}
