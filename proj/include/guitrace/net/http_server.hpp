#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "guitrace/service.hpp"

namespace guitrace::net {

inline constexpr std::uint16_t kDefaultHttpPort = 4791;

struct HttpResponse {
  unsigned status = 200;
  Json body;
};

/// Routes one request to the service. Socket-free so it can be tested
/// directly. `target` is the request path including any query string.
HttpResponse route_request(SessionService& service, std::string_view method, std::string_view target,
                           std::string_view body);

/// Local HTTP server for the session service:
///   GET  /program  /trace  /filters  /callgraph  /source  /export
///   POST /fire     /filters
///   GET  /live     (WebSocket upgrade; push channel)
/// One thread per connection.
class HttpServer {
 public:
  HttpServer(SessionService& service, std::uint16_t port, std::string address = "127.0.0.1");
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  std::uint16_t port() const noexcept;
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace guitrace::net
