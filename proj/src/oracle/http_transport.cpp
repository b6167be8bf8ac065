#include <httplib.h>

#include "iftkit/common/error.hpp"
#include "iftkit/oracle/client.hpp"

namespace iftkit::oracle {

namespace {

class HttpTransport : public Transport {
 public:
  HttpTransport(std::string scheme_host_port, std::string path, int timeout_ms)
      : scheme_host_port_(std::move(scheme_host_port)),
        path_(std::move(path)),
        timeout_ms_(timeout_ms) {}

  HttpReply post_json(const std::string& body,
                      const std::string& bearer_token) override {
    // One client per call: httplib::Client serializes requests internally,
    // and the batch layer already bounds concurrency.
    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::milliseconds(timeout_ms_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!bearer_token.empty()) {
      headers.emplace("Authorization", "Bearer " + bearer_token);
    }
    auto res = client.Post(path_, headers, body, "application/json");
    HttpReply reply;
    if (!res) {
      reply.error = httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    reply.body = res->body;
    return reply;
  }

 private:
  std::string scheme_host_port_;
  std::string path_;
  int timeout_ms_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(const std::string& endpoint_url,
                                               int timeout_ms) {
  const auto scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint_url must start with http:// or https://: '" +
                      endpoint_url + "'");
  }
  const std::string scheme = endpoint_url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
  }
  const auto path_start = endpoint_url.find('/', scheme_end + 3);
  std::string authority = endpoint_url.substr(0, path_start);
  std::string prefix =
      path_start == std::string::npos ? "" : endpoint_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return std::make_shared<HttpTransport>(std::move(authority),
                                         prefix + "/chat/completions", timeout_ms);
}

}  // namespace iftkit::oracle
