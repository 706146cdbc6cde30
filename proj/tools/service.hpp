#pragma once

#include "app.hpp"

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace ctirag::app {

// Minimal HTTP surface over the same pipeline code paths as the CLI.
//   POST /v1/respond   alert in, IncidentPackage out
//   POST /v1/evaluate  package in, per-metric scores out
//   GET  /v1/health    store size + backend reachability
//   GET  /v1/version
// Statuses: 400 malformed body, 401 bad token, 409 store absent,
// 429 over the concurrency limit, 503 backend unavailable.

// Registers the routes on a caller-owned server (tests drive this directly).
void configure_routes(httplib::Server& server, std::shared_ptr<Components> state);

// Blocks until SIGINT/SIGTERM; in-flight requests drain before return.
int serve(const RunConfig& config, const std::string& bind_addr);

} // namespace ctirag::app
