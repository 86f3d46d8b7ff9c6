#include "chroma/http_frontend.hpp"

#include "httplib.h"

namespace chroma {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Format:
    case ErrorCode::OutOfRange:
    case ErrorCode::Degenerate:
      return 400;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::NoData: return 422;
    case ErrorCode::Io: return 500;
  }
  return 500;
}

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  reply(res, status, Json{{"error", {{"code", code}, {"message", message}}}});
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      reply_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
    } catch (const Json::exception& e) {
      reply_error(res, 400, "format", e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "internal", e.what());
    }
  };
}

Json body_json(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  return parse_json(req.body, "request body");
}

Json status_json(const SessionStatus& s) {
  Json j{{"id", s.id},
         {"phase", to_string(s.phase)},
         {"calibration_count", s.calibration_count},
         {"measurement_count", s.measurement_count},
         {"run", s.run},
         {"flags",
          {{"gap", s.flags.gap},
           {"late_responses", s.flags.late_responses},
           {"resets", s.flags.resets},
           {"clamped_stimuli", s.flags.clamped_stimuli},
           {"finalized", s.flags.finalized}}}};
  j["pending"] = s.pending ? to_json(*s.pending) : Json(nullptr);
  if (s.estimate) j["estimate"] = to_json(*s.estimate);
  return j;
}

}  // namespace

HttpFrontend::HttpFrontend(StudyService& service, std::filesystem::path assets)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  srv.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, Json{{"status", "ok"}});
  }));
  srv.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = service_.create_session(session_config_from_json(body_json(req)));
    reply(res, 201, Json{{"id", id}});
  }));
  srv.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, Json{{"sessions", service_.session_ids()}});
  }));
  srv.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, status_json(service_.status(req.matches[1])));
  }));
  srv.Get(R"(/sessions/([^/]+)/trial)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, to_json(service_.next_trial(req.matches[1])));
  }));
  srv.Post(R"(/sessions/([^/]+)/response)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const Json body = body_json(req);
    if (!body.contains("trial_id") || !body["trial_id"].is_number_unsigned()) {
      throw Error(ErrorCode::Format, "response needs an unsigned 'trial_id'");
    }
    if (!body.contains("choice") || !body["choice"].is_string()) {
      throw Error(ErrorCode::Format, "response needs a 'choice' of 'lagging' or 'further'");
    }
    const Choice choice = parse_choice(body["choice"].get<std::string>());
    const double latency = json_number(body, "latency", 0.0);
    reply(res, 200,
          to_json(service_.submit_response(req.matches[1], body["trial_id"].get<std::uint64_t>(), choice, latency)));
  }));
  srv.Get(R"(/sessions/([^/]+)/results)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string f = req.has_param("finalize") ? req.get_param_value("finalize") : "";
    const bool finalize = f == "1" || f == "true";
    reply(res, 200, to_json(service_.results(req.matches[1], finalize)));
  }));
  srv.Get(R"(/sessions/([^/]+)/records)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::ostringstream out;
    write_records(out, service_.export_records(req.matches[1]));
    res.status = 200;
    res.set_content(out.str(), "application/x-ndjson");
  }));
  srv.Post(R"(/sessions/([^/]+)/reset)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    service_.reset(req.matches[1]);
    reply(res, 200, status_json(service_.status(req.matches[1])));
  }));
  if (!assets.empty()) srv.set_mount_point("/assets", assets.string());
}

HttpFrontend::~HttpFrontend() = default;

bool HttpFrontend::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpFrontend::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpFrontend::listen_after_bind() { return server_->listen_after_bind(); }

void HttpFrontend::stop() { server_->stop(); }

}  // namespace chroma
