#include "service.hpp"

#include "ctirag/util.hpp"
#include "test_helpers.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <thread>

using namespace ctirag;
using namespace ctirag::app;
using ctirag::testing::TempDir;
using ctirag::testing::test_config;
using nlohmann::json;

namespace {

struct LiveServer {
    std::shared_ptr<Components> state;
    httplib::Server server;
    std::thread runner;
    int port = 0;

    explicit LiveServer(const RunConfig& config) {
        state = std::make_shared<Components>(build_components(config, /*load_store=*/true));
        configure_routes(server, state);
        port = server.bind_to_any_port("127.0.0.1");
        runner = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LiveServer() {
        server.stop();
        runner.join();
    }
    httplib::Client client() { return httplib::Client("127.0.0.1", port); }
};

// store seeded with two small documents
void seed_store(const RunConfig& config) {
    Components c = build_components(config, /*load_store=*/false);
    CtiDocument d1;
    d1.doc_id = "r1";
    d1.title = "exfil report";
    d1.body = "automated collection and exfiltration over c2 channels on linux servers";
    CtiDocument d2;
    d2.doc_id = "r2";
    d2.title = "injection report";
    d2.body = "portable executable injection into long lived windows processes";
    c.kb->ingest(d1);
    c.kb->ingest(d2);
    c.kb->persist(config.get_str("kb.store_path"));
}

std::string sample_alert_json() {
    return R"({"id":"svc-1","raw_text":"src.ip=10.0.0.8 file.sha256=)" + std::string(64, 'b') +
           R"( rule=exfil","source":"simulated","timestamp":"2024-09-02T00:00:00Z"})";
}

} // namespace

TEST_CASE("health and version endpoints") {
    TempDir tmp;
    RunConfig config = test_config(tmp);
    seed_store(config);
    LiveServer live(config);
    auto client = live.client();

    auto health = client.Get("/v1/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    json h = json::parse(health->body);
    CHECK(h["store_size"].get<int>() > 0);
    CHECK(h["warning_empty_store"] == false);
    CHECK(h["intel_backend"] == "fixture");
    CHECK(h["gateway_backend"] == "mock");

    auto version = client.Get("/v1/version");
    REQUIRE(version);
    CHECK(version->status == 200);
    json v = json::parse(version->body);
    CHECK(v["name"] == "ctirag");
    CHECK(v.contains("version"));
}

TEST_CASE("respond returns a package; malformed bodies get field-level 400") {
    TempDir tmp;
    RunConfig config = test_config(tmp);
    seed_store(config);
    LiveServer live(config);
    auto client = live.client();

    auto ok = client.Post("/v1/respond", sample_alert_json(), "application/json");
    REQUIRE(ok);
    CHECK(ok->status == 200);
    json package = json::parse(ok->body);
    CHECK(package["alert"]["id"] == "svc-1");
    CHECK(!package["response_plan"].get<std::string>().empty());

    auto bad = client.Post("/v1/respond", "{\"id\": 5}", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    json error = json::parse(bad->body);
    CHECK(error.contains("error"));
    CHECK(error["field"] == "alert");
}

TEST_CASE("respond without a store answers 409") {
    TempDir tmp;
    RunConfig config = test_config(tmp); // store path never created
    LiveServer live(config);
    auto client = live.client();

    auto health = client.Get("/v1/health");
    REQUIRE(health);
    CHECK(json::parse(health->body)["store_absent"] == true);

    auto res = client.Post("/v1/respond", sample_alert_json(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 409);
}

TEST_CASE("evaluate scores a package across metrics and variants") {
    TempDir tmp;
    RunConfig config = test_config(tmp);
    seed_store(config);
    LiveServer live(config);
    auto client = live.client();

    auto respond = client.Post("/v1/respond", sample_alert_json(), "application/json");
    REQUIRE(respond);
    REQUIRE(respond->status == 200);

    auto eval = client.Post("/v1/evaluate", respond->body, "application/json");
    REQUIRE(eval);
    CHECK(eval->status == 200);
    json scores = json::parse(eval->body);
    CHECK(scores["scores"].size() == 5); // AR + CR x3 + GND
    for (const json& s : scores["scores"]) {
        int rating = s["rating"].get<int>();
        CHECK(rating >= 1);
        CHECK(rating <= 5);
    }

    auto filtered =
        client.Post("/v1/evaluate?metrics=answer_relevance", respond->body, "application/json");
    REQUIRE(filtered);
    CHECK(json::parse(filtered->body)["scores"].size() == 1);

    auto unknown =
        client.Post("/v1/evaluate?metrics=bogus", respond->body, "application/json");
    REQUIRE(unknown);
    CHECK(unknown->status == 400);

    auto bad = client.Post("/v1/evaluate", "not json", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
}

TEST_CASE("bearer token guards the mutating endpoints") {
    TempDir tmp;
    RunConfig config = test_config(tmp);
    config.set("serve.auth_token", "open-sesame");
    seed_store(config);
    LiveServer live(config);
    auto client = live.client();

    auto denied = client.Post("/v1/respond", sample_alert_json(), "application/json");
    REQUIRE(denied);
    CHECK(denied->status == 401);

    httplib::Headers headers = {{"Authorization", "Bearer open-sesame"}};
    auto allowed = client.Post("/v1/respond", headers, sample_alert_json(), "application/json");
    REQUIRE(allowed);
    CHECK(allowed->status == 200);

    // health stays open for probes
    auto health = client.Get("/v1/health");
    REQUIRE(health);
    CHECK(health->status == 200);
}

TEST_CASE("gateway failure surfaces as 503") {
    TempDir tmp;
    RunConfig config = test_config(tmp);
    // script the generation step to fail
    std::string script = tmp.file("failing_mock.json");
    write_file(script,
               R"({"rules": [{"contains": "provide a concise and relevant incident response strategy", "fail": "unavailable"}]})");
    config.set("gateway.mock_script", script);
    seed_store(config);
    LiveServer live(config);
    auto client = live.client();

    auto res = client.Post("/v1/respond", sample_alert_json(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 503);
    json body = json::parse(res->body);
    CHECK(body["stage"] == "generation");
}

TEST_CASE("health reports an empty-but-present store with a warning flag") {
    TempDir tmp;
    RunConfig config = test_config(tmp);
    // persist a store with zero chunks
    Components c = build_components(config, /*load_store=*/false);
    c.kb->persist(config.get_str("kb.store_path"));

    LiveServer live(config);
    auto client = live.client();
    auto health = client.Get("/v1/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    json h = json::parse(health->body);
    CHECK(h["store_size"] == 0);
    CHECK(h["store_absent"] == false);
    CHECK(h["warning_empty_store"] == true);

    // responding still works: retrieval degrades to no context
    auto res = client.Post("/v1/respond", sample_alert_json(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["retrieved"].empty());
}

TEST_CASE("requests beyond the concurrency limit are rejected with 429") {
    TempDir tmp;
    RunConfig config = test_config(tmp);
    config.set("serve.max_concurrency", "0"); // every admission fails
    seed_store(config);
    LiveServer live(config);
    auto client = live.client();

    auto res = client.Post("/v1/respond", sample_alert_json(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 429);
}

TEST_CASE("cli and service produce identical packages for the same alert") {
    TempDir tmp;
    RunConfig config = test_config(tmp);
    seed_store(config);

    // direct pipeline run (the cli path)
    Components c = build_components(config, /*load_store=*/true);
    Alert alert = alert_from_json(sample_alert_json());
    std::string direct = package_to_json(c.pipeline->run(alert));

    LiveServer live(config);
    auto client = live.client();
    auto res = client.Post("/v1/respond", sample_alert_json(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    CHECK(res->body == direct);
}
