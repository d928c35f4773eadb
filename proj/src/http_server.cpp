#include <stdexcept>

#include "faceq/service.hpp"
#include "httplib.h"
#include "json.hpp"

namespace faceq::service {

using nlohmann::json;

struct HttpServer::Impl {
  AnnotationService& service;
  httplib::Server server;

  explicit Impl(AnnotationService& s) : service(s) {}
};

namespace {

void send(httplib::Response& res, const Reply& reply) {
  res.status = reply.status;
  res.set_content(reply.body, reply.content_type);
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    json j = json::parse(req.body);
    if (j.is_object()) return j;
  } catch (const json::exception&) {
  }
  send(res, error_reply(400, "E_BAD_REQUEST", "request body must be a JSON object"));
  return std::nullopt;
}

}  // namespace

HttpServer::HttpServer(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;

  srv.Post("/sessions", [&svc](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    if (!body->contains("rater_id") || !(*body)["rater_id"].is_string()) {
      send(res, error_reply(400, "E_BAD_REQUEST", "rater_id is required"));
      return;
    }
    send(res, svc.create_session((*body)["rater_id"].get<std::string>()));
  });

  srv.Get(R"(/sessions/([0-9a-f]+)/next)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.next_pair(req.matches[1]));
  });

  srv.Post(R"(/sessions/([0-9a-f]+)/responses)", [&svc](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    const auto& b = *body;
    if (!b.contains("position") || !b["position"].is_number_unsigned() || !b.contains("response") ||
        !b["response"].is_string()) {
      send(res, error_reply(400, "E_BAD_REQUEST", "position (non-negative integer) and response are required"));
      return;
    }
    send(res, svc.submit(req.matches[1], b["position"].get<std::size_t>(), b["response"].get<std::string>()));
  });

  srv.Get(R"(/sessions/([0-9a-f]+)/status)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.status(req.matches[1]));
  });

  srv.Get("/admin/export", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.export_comparisons(req.get_header_value("Authorization")));
  });

  srv.Get(R"(/images/([0-9a-f]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.image(req.matches[1]));
  });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const Reply r = error_reply(res.status, res.status == 404 ? "E_NOT_FOUND" : "E_HTTP", "request failed");
    res.set_content(r.body, r.content_type);
  });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace faceq::service
