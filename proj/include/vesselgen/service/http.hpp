#pragma once

#include <memory>
#include <string>

#include "vesselgen/service/session.hpp"

namespace vg::service {

/// JSON-over-HTTP front end for a SessionService.
///   POST   /sessions                      {"branch": "aorta"}            -> 201 session
///   GET    /sessions/{id}                                                -> session
///   POST   /sessions/{id}/prompts         {"kind", "points", "label"}    -> 201 session
///   DELETE /sessions/{id}/prompts/{idx}                                  -> session
///   POST   /sessions/{id}/jobs            {"K", "L", "gamma", "seed"}    -> 202 {"id", "status"}
///   GET    /jobs/{id}                                                    -> job
///   GET    /jobs/{id}/export?format=obj|latent[&sample=k]                -> artifact
/// Errors come back as {"error": message} with 400, 404 or 409.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves on a background thread. port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace vg::service
