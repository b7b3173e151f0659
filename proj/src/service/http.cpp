#include "vesselgen/service/http.hpp"

#include <thread>

// Last: resolv.h, pulled in by httplib, defines a macro named _res that breaks Eigen.
#include <httplib.h>

namespace vg::service {

namespace {

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
  }
}

int parse_int(const std::string& s, const char* what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ValidationError(std::string(what) + " must be an integer");
  return v;
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const NotFoundError& e) {
      send_json(res, {{"error", e.what()}}, 404);
    } catch (const ConflictError& e) {
      send_json(res, {{"error", e.what()}}, 409);
    } catch (const ValidationError& e) {
      send_json(res, {{"error", e.what()}}, 400);
    } catch (const Json::exception& e) {
      send_json(res, {{"error", std::string("malformed request: ") + e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, {{"error", e.what()}}, 500);
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(SessionService& svc) : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  s.Post("/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           const Json body = parse_body(req);
           if (!body.contains("branch") || !body.at("branch").is_string())
             throw ValidationError("body must name a branch");
           send_json(res, svc.get_session(svc.create_session(body.at("branch").get<std::string>())), 201);
         }));
  s.Get(R"(/sessions/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          send_json(res, svc.get_session(req.matches[1]));
        }));
  s.Post(R"(/sessions/([^/]+)/prompts)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           send_json(res, svc.add_prompt(req.matches[1], parse_body(req)), 201);
         }));
  s.Delete(R"(/sessions/([^/]+)/prompts/([^/]+))",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             send_json(res, svc.remove_prompt(req.matches[1], parse_int(req.matches[2], "prompt index")));
           }));
  s.Post(R"(/sessions/([^/]+)/jobs)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           const std::string id = svc.submit_job(req.matches[1], parse_body(req));
           send_json(res, {{"id", id}, {"status", svc.get_job(id).at("status")}}, 202);
         }));
  s.Get(R"(/jobs/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          send_json(res, svc.get_job(req.matches[1]));
        }));
  s.Get(R"(/jobs/([^/]+)/export)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          const std::string format = req.has_param("format") ? req.get_param_value("format") : "obj";
          const int sample = req.has_param("sample") ? parse_int(req.get_param_value("sample"), "sample") : 0;
          const std::string body = svc.export_job(req.matches[1], format, sample);
          res.set_content(body, format == "latent" ? "application/json" : "text/plain");
        }));
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_json(res, {{"error", "no such endpoint"}}, res.status);
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  auto& s = impl_->server;
  port_ = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void HttpServer::listen(const std::string& host, int port) {
  port_ = port;
  if (!impl_->server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace vg::service
