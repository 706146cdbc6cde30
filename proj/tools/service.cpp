#include "service.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/log.hpp"
#include "ctirag/version.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <csignal>
#include <memory>
#include <thread>

namespace ctirag::app {

using nlohmann::json;

namespace {

struct InflightGuard {
    std::atomic<int>& counter;
    bool admitted;
    InflightGuard(std::atomic<int>& c, int limit) : counter(c) {
        admitted = counter.fetch_add(1) < limit;
        if (!admitted) counter.fetch_sub(1);
    }
    ~InflightGuard() {
        if (admitted) counter.fetch_sub(1);
    }
};

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::string& field = "") {
    json j;
    j["error"] = message;
    if (!field.empty()) j["field"] = field;
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

bool authorized(const Components& c, const httplib::Request& req) {
    std::string token = c.config.get_str("serve.auth_token", "");
    if (token.empty()) return true;
    return req.get_header_value("Authorization") == "Bearer " + token;
}

int map_error_status(const Error& e) {
    switch (e.code()) {
    case ErrorCode::invalid_params:
    case ErrorCode::missing_binding:
    case ErrorCode::unknown_placeholder:
        return 400;
    case ErrorCode::backend_unavailable:
    case ErrorCode::network_error:
    case ErrorCode::rate_limited:
        return 503;
    default:
        return 500;
    }
}

} // namespace

void configure_routes(httplib::Server& server, std::shared_ptr<Components> state) {
    auto inflight = std::make_shared<std::atomic<int>>(0);
    const int max_concurrency =
        static_cast<int>(state->config.get_int("serve.max_concurrency"));

    server.Get("/v1/health", [state](const httplib::Request&, httplib::Response& res) {
        json j;
        j["status"] = "ok";
        j["store_size"] = state->kb ? state->kb->size() : 0;
        j["documents"] = state->kb ? state->kb->document_count() : 0;
        j["store_absent"] = state->store_absent;
        j["warning_empty_store"] = !state->kb || state->kb->size() == 0;
        j["intel_backend"] = state->intel->backend_kind();
        j["gateway_backend"] = state->gateway->backend_kind();
        j["deterministic"] = state->deterministic;
        res.set_content(j.dump(), "application/json");
    });

    server.Get("/v1/version", [](const httplib::Request&, httplib::Response& res) {
        json j;
        j["name"] = "ctirag";
        j["version"] = kVersion;
        j["package_schema_version"] = kPackageSchemaVersion;
        res.set_content(j.dump(), "application/json");
    });

    server.Post("/v1/respond", [state, inflight, max_concurrency](const httplib::Request& req,
                                                                  httplib::Response& res) {
        if (!authorized(*state, req)) return send_error(res, 401, "missing or bad bearer token");
        InflightGuard guard(*inflight, max_concurrency);
        if (!guard.admitted) return send_error(res, 429, "concurrency limit reached");
        if (state->store_absent || !state->pipeline)
            return send_error(res, 409, "knowledge-base store absent; ingest first");

        Alert alert;
        try {
            alert = alert_from_json(req.body);
        } catch (const Error& e) {
            return send_error(res, 400, e.what(), "alert");
        }
        try {
            IncidentPackage package = state->pipeline->run(alert);
            res.set_content(package_to_json(package), "application/json");
        } catch (const PipelineError& e) {
            json j;
            j["error"] = e.what();
            j["stage"] = e.stage();
            res.status = contains(e.what(), "BackendUnavailable") ||
                                 contains(e.what(), "NetworkError")
                             ? 503
                             : 500;
            res.set_content(j.dump(), "application/json");
        } catch (const Error& e) {
            send_error(res, map_error_status(e), e.what());
        }
    });

    server.Post("/v1/evaluate", [state, inflight, max_concurrency](const httplib::Request& req,
                                                                   httplib::Response& res) {
        if (!authorized(*state, req)) return send_error(res, 401, "missing or bad bearer token");
        InflightGuard guard(*inflight, max_concurrency);
        if (!guard.admitted) return send_error(res, 429, "concurrency limit reached");

        IncidentPackage package;
        try {
            package = package_from_json(req.body);
        } catch (const Error& e) {
            return send_error(res, 400, e.what(), "package");
        }

        std::vector<Metric> metrics = {Metric::answer_relevance, Metric::context_relevance,
                                       Metric::groundedness};
        if (req.has_param("metrics")) {
            metrics.clear();
            for (const std::string& name : split(req.get_param_value("metrics"), ',')) {
                Metric metric;
                if (!metric_from_name(name, metric))
                    return send_error(res, 400, "unknown metric: " + name, "metrics");
                metrics.push_back(metric);
            }
        }
        std::string profile =
            req.has_param("profile") ? req.get_param_value("profile") : state->default_profile;

        try {
            json scores = json::array();
            for (Metric metric : metrics) {
                std::vector<Variant> variants =
                    metric == Metric::context_relevance
                        ? std::vector<Variant>{Variant::vt_plus_cti, Variant::vt_only,
                                               Variant::cti_only}
                        : std::vector<Variant>{Variant::not_applicable};
                for (Variant variant : variants) {
                    MetricScore score = state->judge->judge(metric, variant, package, profile);
                    json s;
                    s["metric"] = metric_name(score.metric);
                    s["variant"] = variant_name(score.variant);
                    s["rating"] = score.rating;
                    s["judge_profile"] = score.judge_profile;
                    s["rationale"] = score.rationale;
                    scores.push_back(std::move(s));
                }
            }
            json j;
            j["alert_id"] = package.alert.id;
            j["scores"] = scores;
            res.set_content(j.dump(), "application/json");
        } catch (const Error& e) {
            send_error(res, map_error_status(e), e.what());
        }
    });
}

int serve(const RunConfig& config, const std::string& bind_addr) {
    Components c;
    try {
        c = build_components(config, /*load_store=*/true);
    } catch (const Error& e) {
        log_error(std::string("service startup failed: ") + e.what());
        return 1;
    }

    auto state = std::make_shared<Components>(std::move(c));
    httplib::Server server;
    configure_routes(server, state);

    std::string host = "127.0.0.1";
    int port = 8080;
    {
        std::size_t colon = bind_addr.rfind(':');
        if (colon != std::string::npos) {
            host = bind_addr.substr(0, colon);
            try {
                port = std::stoi(bind_addr.substr(colon + 1));
            } catch (const std::exception&) {
                log_error("bad bind address: " + bind_addr);
                return 1;
            }
        } else if (!bind_addr.empty()) {
            host = bind_addr;
        }
    }

    // stop() takes locks, so it cannot run inside a signal handler; a
    // sigwait thread shuts the server down instead
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
    std::thread watcher([&server, &signals] {
        int received = 0;
        sigwait(&signals, &received);
        log_info("signal received, draining in-flight requests");
        server.stop();
    });

    log_info("serving on " + host + ":" + std::to_string(port));
    bool ok = server.listen(host, port);
    // listen returned on its own (bind failure or stop); wake the watcher
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    return ok ? 0 : 1;
}

} // namespace ctirag::app
