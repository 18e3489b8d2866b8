#include "httplib.h"
#include "json.hpp"
#include "prodsearch/annotation.h"

namespace prodsearch {
namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", message}}.dump(), kJson);
}

}  // namespace

struct AnnotationServer::Impl {
  explicit Impl(AnnotationService& s) : service(s) {}
  AnnotationService& service;
  httplib::Server server;
};

AnnotationServer::AnnotationServer(AnnotationService& service)
    : impl_(std::make_unique<Impl>(service)) {
  auto& svc = impl_->service;
  auto& srv = impl_->server;

  srv.Get("/api/items/next", [&svc](const httplib::Request& req, httplib::Response& res) {
    const auto annotator = req.get_param_value("annotator");
    if (annotator.empty()) return send_error(res, 400, "missing annotator");
    try {
      const auto item = svc.next_item(annotator);
      if (!item) {
        res.set_content(R"({"item":null})", kJson);
        return;
      }
      res.set_content("{\"item\":" + item_to_json(*item, svc.status(item->query_id)) + "}",
                      kJson);
    } catch (const std::out_of_range& e) {
      send_error(res, 404, e.what());
    }
  });

  srv.Get(R"(/api/items/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto item = svc.item(id);
    if (!item) return send_error(res, 404, "unknown query_id " + id);
    auto j = nlohmann::ordered_json::parse(item_to_json(*item, svc.status(id)));
    nlohmann::ordered_json labels = nlohmann::ordered_json::object();
    for (const auto& [a, l] : svc.labels(id)) labels[a] = std::string(to_string(l));
    j["labels"] = labels;
    res.set_content(j.dump(), kJson);
  });

  srv.Post("/api/labels", [&svc](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      return send_error(res, 400, "body is not valid JSON");
    }
    if (!body.is_object() || !body.contains("annotator") || !body.contains("query_id") ||
        !body.contains("label") || !body["annotator"].is_string() ||
        !body["query_id"].is_string() || !body["label"].is_string()) {
      return send_error(res, 400, "expected {annotator, query_id, label} strings");
    }
    const auto label = parse_annotation_label(body["label"].get<std::string>());
    if (!label) return send_error(res, 400, "unknown label " + body["label"].dump());
    try {
      const auto status = svc.submit_label(body["annotator"].get<std::string>(),
                                           body["query_id"].get<std::string>(), *label);
      res.set_content(nlohmann::json{{"ok", true}, {"status", std::string(to_string(status))}}.dump(),
                      kJson);
    } catch (const std::out_of_range& e) {
      send_error(res, 404, e.what());
    } catch (const std::runtime_error& e) {
      send_error(res, 500, e.what());
    }
  });

  srv.Get("/api/progress", [&svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(progress_to_json(svc.progress()), kJson);
  });

  srv.Get("/api/agreement", [&svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(agreement_to_json(svc.agreement()), kJson);
  });
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void AnnotationServer::listen() { impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace prodsearch
