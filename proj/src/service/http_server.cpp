#include "dashgen/service/http_server.hpp"

#include "dashgen/common/errors.hpp"
#include "httplib.h"

namespace dashgen::service {

struct HttpServer::Impl {
  std::shared_ptr<Service> service;
  ServerOptions options;
  httplib::Server server;
  int port = 0;
};

HttpServer::HttpServer(std::shared_ptr<Service> service, ServerOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  impl_->options = std::move(options);
  auto& srv = impl_->server;

  auto forward = [svc = impl_->service](const httplib::Request& req, httplib::Response& res) {
    const auto reply = svc->dispatch(req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.text(), reply.content_type);
  };
  for (const char* pattern : {R"(/sessions.*)", R"(/assets/.*)", R"(/healthz)", R"(/templates)", R"(/palettes)"}) {
    srv.Get(pattern, forward);
    srv.Post(pattern, forward);
  }
  if (impl_->options.static_dir && !srv.set_mount_point("/", impl_->options.static_dir->string())) {
    throw ConfigError("static directory not found: " + impl_->options.static_dir->string());
  }
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) {
      res.set_content(R"({"error":"NotFound","message":"no route for )" + req.method + " " + req.path + "\"}",
                      "application/json");
    }
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& o = impl_->options;
  impl_->port = o.port == 0 ? impl_->server.bind_to_any_port(o.host) : (impl_->server.bind_to_port(o.host, o.port) ? o.port : -1);
  if (impl_->port < 0) throw ConfigError("cannot bind " + o.host + ":" + std::to_string(o.port));
  return impl_->port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace dashgen::service
