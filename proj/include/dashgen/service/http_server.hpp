#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "dashgen/service/service.hpp"

namespace dashgen::service {

struct ServerOptions {
  std::string host = "0.0.0.0";
  int port = 8080;
  /// Served at "/" when set (the web client's built assets).
  std::optional<std::filesystem::path> static_dir;
};

/// Thin httplib front end; every API request goes through Service::dispatch.
class HttpServer {
 public:
  HttpServer(std::shared_ptr<Service> service, ServerOptions options);
  ~HttpServer();

  /// Binds; returns the bound port (useful with port 0). Throws ConfigError.
  int bind();
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dashgen::service
