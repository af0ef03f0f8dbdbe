#include "activedpo/annotation_server.hpp"

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "activedpo/errors.hpp"

namespace activedpo {

using nlohmann::json;

struct AnnotationServer::Impl {
  explicit Impl(AnnotationService& s) : service(s) {}

  AnnotationService& service;
  httplib::Server server;
  std::thread thread;
  bool bound = false;

  json hash() const {
    const SessionStatus s = service.status();
    return s.active ? json(s.config_hash) : json(nullptr);
  }

  void reply(httplib::Response& res, int code, json body) const {
    body["config_hash"] = hash();
    res.status = code;
    res.set_content(body.dump(), "application/json");
  }

  void fail(httplib::Response& res, int code, const std::string& kind, const std::string& message,
            json extra = json::object()) const {
    extra["error"] = {{"kind", kind}, {"message", message}};
    reply(res, code, std::move(extra));
  }

  // Runs a handler and maps library errors onto HTTP status codes.
  template <typename F>
  void guarded(httplib::Response& res, F handler) const {
    try {
      handler();
    } catch (const StateError& e) {
      fail(res, 409, e.kind(), e.what(), {{"state", e.state()}});
    } catch (const json::exception& e) {
      fail(res, 400, "bad_request", e.what());
    } catch (const Error& e) {
      fail(res, 400, e.kind(), e.what());
    } catch (const std::exception& e) {
      fail(res, 500, "internal_error", e.what());
    }
  }

  void routes() {
    server.Get("/session/status", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, to_json(service.status())); });
    });

    server.Get("/session/next-batch", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        const auto items = service.next_batch();
        json list = json::array();
        for (const auto& item : items) list.push_back(to_json(item));
        reply(res, 200, {{"iteration", service.status().iteration}, {"remaining", items.size()}, {"items", list}});
      });
    });

    server.Post("/session/label", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        if (!body.is_object() || !body.contains("triplet_id") || !body.contains("winner"))
          throw InvalidArgument("label body needs triplet_id and winner");
        const auto side = parse_side(body.at("winner").get<std::string>());
        if (!side) throw InvalidArgument("winner must be \"A\" or \"B\"");
        const SubmitResult r = service.submit_label(body.at("triplet_id").get<TripletId>(), *side);
        if (r.accepted) {
          reply(res, 200, to_json(r));
        } else {
          const std::string message = r.reason == "duplicate" ? "triplet already labeled" : "triplet not in the current batch";
          fail(res, r.reason == "duplicate" ? 409 : 404, r.reason + "_triplet", message, to_json(r));
        }
      });
    });

    server.Post("/session/start", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        if (!body.is_object() || !body.contains("config")) throw InvalidArgument("start body needs a config path");
        const std::string run_dir = body.value("run_dir", std::string());
        reply(res, 200, to_json(service.start_from_file(body.at("config").get<std::string>(), run_dir)));
      });
    });
  }
};

AnnotationServer::AnnotationServer(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {
  impl_->routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port = impl_->server.bind_to_any_port(host);
    if (port < 0) throw IoError("cannot bind " + host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return port;
}

void AnnotationServer::listen() {
  if (!impl_->bound) throw InvalidArgument("bind() must succeed before listen()");
  impl_->server.listen_after_bind();
}

void AnnotationServer::start() {
  if (!impl_->bound) throw InvalidArgument("bind() must succeed before start()");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void AnnotationServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace activedpo
