#pragma once

#include <memory>
#include <string>

#include "activedpo/annotation.hpp"

namespace activedpo {

// JSON-over-HTTP front end for an AnnotationService.
//
//   GET  /session/status
//   GET  /session/next-batch
//   POST /session/label   {"triplet_id": <id>, "winner": "A" | "B"}
//   POST /session/start   {"config": "<path>", "run_dir": "<path>"?}
//
// Every response body is a JSON object carrying "config_hash" (null before a
// session exists). Failures carry {"error": {"kind", "message"}}.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationService& service);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Binds the listening socket; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port);
  // Serves until stop(). Requires a successful bind().
  void listen();
  // listen() on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace activedpo
