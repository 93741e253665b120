#pragma once

#include <string>

#include "httplib.h"

#include "divcf/service.hpp"

namespace divcf::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  int request_timeout_seconds = 300;
  std::string cors_origin = "*";
};

// Routes every request through Service::handle and adds CORS headers.
inline void bind_routes(httplib::Server& server, Service& svc, const ServerOptions& opts) {
  auto forward = [&svc, origin = opts.cors_origin](const httplib::Request& req,
                                                   httplib::Response& res) {
    const auto out = svc.handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_content(out.body.dump(), "application/json");
  };
  server.Get(R"(/.*)", forward);
  server.Post(R"(/.*)", forward);
  server.Options(R"(/.*)", [origin = opts.cors_origin](const httplib::Request&,
                                                       httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  server.set_read_timeout(opts.request_timeout_seconds, 0);
  server.set_write_timeout(opts.request_timeout_seconds, 0);
}

// Blocks until the server stops.
inline bool serve(Service& svc, const ServerOptions& opts) {
  httplib::Server server;
  bind_routes(server, svc, opts);
  return server.listen(opts.host, opts.port);
}

}  // namespace divcf::service
