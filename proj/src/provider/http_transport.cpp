// The only place that opens network connections to model backends.
#include "httplib.h"

#include "dashgen/provider/provider.hpp"

#include "dashgen/common/errors.hpp"

namespace dashgen::provider {

namespace {

class HttplibTransport final : public Transport {
 public:
  HttplibTransport(const std::string& base_url, std::chrono::milliseconds timeout) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base URL needs a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    origin_ = base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    timeout_ = timeout;
  }

  HttpResponse post(const std::string& path, const std::string& body,
                    const std::map<std::string, std::string>& headers) override {
    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        h.emplace(k, v);
      }
    }
    auto result = client.Post(prefix_ + path, h, body, content_type);
    if (!result) throw TransportFailure(httplib::to_string(result.error()));
    return {result->status, result->body};
  }

 private:
  std::string origin_;
  std::string prefix_;
  std::chrono::milliseconds timeout_{30'000};
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const std::string& base_url,
                                               std::chrono::milliseconds timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

}  // namespace dashgen::provider
