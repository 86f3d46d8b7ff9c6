#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "chroma/study_service.hpp"

namespace httplib {
class Server;
}

namespace chroma {

/// JSON-over-HTTP binding of the study service.
///
///   GET  /health
///   POST /sessions                    body: session config (may be {})   -> 201 {"id"}
///   GET  /sessions                    -> {"sessions": [...]}
///   GET  /sessions/{id}               -> status
///   GET  /sessions/{id}/trial         -> {"status": "trial", "trial": {...}} or a notice
///   POST /sessions/{id}/response      body: {"trial_id", "choice", "latency"}
///   GET  /sessions/{id}/results       ?finalize=1 ends an unfinished session
///   GET  /sessions/{id}/records       JSON-lines export
///   POST /sessions/{id}/reset
///   GET  /assets/...                  static files when an asset directory is set
///
/// Errors come back as {"error": {"code", "message"}} with a 4xx/5xx status.
class HttpFrontend {
 public:
  explicit HttpFrontend(StudyService& service, std::filesystem::path assets = {});
  ~HttpFrontend();

  /// Binds and serves until stop(); returns false if binding failed.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it (or -1); serve with listen_after_bind.
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();

 private:
  StudyService& service_;
  std::unique_ptr<httplib::Server> server_;
};

int http_status(ErrorCode code);

}  // namespace chroma
