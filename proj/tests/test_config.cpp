#include "ctirag/config.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/util.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace ctirag;
using ctirag::testing::TempDir;

TEST_CASE("defaults carry every documented key") {
    RunConfig config = RunConfig::defaults();
    CHECK(config.get_str("intel.backend") == "fixture");
    CHECK(config.get_int("intel.rate_per_min") == 4);
    CHECK(config.get_int("intel.cache_ttl_s") == 86400);
    CHECK(config.get_int("kb.max_chunk_chars") == 1600);
    CHECK(config.get_int("kb.overlap_chars") == 200);
    CHECK(config.get_int("kb.dim") == 256);
    CHECK(config.get_str("kb.embedder") == "mock");
    CHECK(config.get_str("gateway.backend") == "mock");
    CHECK(config.get_int("pipeline.k") == 4);
    CHECK(config.get_str("judge.variance_convention") == "population");
    CHECK(config.unknown_keys().empty());
}

TEST_CASE("layering: defaults < file < env < set") {
    TempDir tmp;
    std::string path = tmp.file("config.json");
    write_file(path, R"({"pipeline": {"k": 8}, "kb": {"dim": 128}, "intel": {"backend": "down"}})");

    ::setenv("CTIRAG_KB_DIM", "96", 1);
    ::setenv("CTIRAG_INTEL_API_KEY", "sekrit", 1);

    RunConfig config = RunConfig::defaults();
    config.load_file(path);
    config.load_env();
    config.set_kv("pipeline.k=2");

    CHECK(config.get_int("kb.dim") == 96);            // env over file
    CHECK(config.get_int("pipeline.k") == 2);         // set over file
    CHECK(config.get_str("intel.backend") == "down"); // file over default
    CHECK(config.get_str("intel.api_key") == "sekrit");

    ::unsetenv("CTIRAG_KB_DIM");
    ::unsetenv("CTIRAG_INTEL_API_KEY");
}

TEST_CASE("typed getters validate their input") {
    RunConfig config = RunConfig::defaults();
    config.set("pipeline.k", "not-a-number");
    CHECK_THROWS_AS(config.get_int("pipeline.k"), Error);
    config.set("pipeline.query_raw_alert", "maybe");
    CHECK_THROWS_AS(config.get_bool("pipeline.query_raw_alert"), Error);
    config.set("pipeline.query_raw_alert", "true");
    CHECK(config.get_bool("pipeline.query_raw_alert"));
    CHECK_THROWS_AS(config.get_str("no.such.key"), Error);
    CHECK(config.get_str("no.such.key", "fallback") == "fallback");
    CHECK_THROWS_AS(config.set_kv("missing-equals"), Error);
}

TEST_CASE("secrets never appear in dumps") {
    RunConfig config = RunConfig::defaults();
    config.set("intel.api_key", "vt-key-123");
    config.set("gateway.api_key", "gw-key-456");
    config.set("serve.auth_token", "tok-789");
    std::string dump = config.dump_redacted();
    CHECK(dump.find("vt-key-123") == std::string::npos);
    CHECK(dump.find("gw-key-456") == std::string::npos);
    CHECK(dump.find("tok-789") == std::string::npos);
    CHECK(contains(dump, "intel.api_key = ***"));
}

TEST_CASE("unknown keys are surfaced, profile keys are not") {
    RunConfig config = RunConfig::defaults();
    config.set("gateway.profile.judge2.backend", "mock");
    config.set("totally.bogus", "1");
    auto unknown = config.unknown_keys();
    REQUIRE(unknown.size() == 1);
    CHECK(unknown[0] == "totally.bogus");
}

TEST_CASE("deterministic mode resolution") {
    RunConfig config = RunConfig::defaults();
    CHECK(deterministic_mode(config)); // fixture + mock

    config.set("intel.backend", "live");
    CHECK_FALSE(deterministic_mode(config));
    config.set("run.deterministic", "on");
    CHECK(deterministic_mode(config));
    config.set("run.deterministic", "off");
    CHECK_FALSE(deterministic_mode(config));

    config.set("run.deterministic", "auto");
    config.set("intel.backend", "down");
    CHECK(deterministic_mode(config));
    config.set("gateway.backend", "remote");
    CHECK_FALSE(deterministic_mode(config));
}

TEST_CASE("nested config files flatten to dotted keys") {
    TempDir tmp;
    std::string path = tmp.file("config.json");
    write_file(path, R"({"gateway": {"profile": {"j2": {"backend": "mock", "seed": 9}}}})");
    RunConfig config = RunConfig::defaults();
    config.load_file(path);
    CHECK(config.get_str("gateway.profile.j2.backend") == "mock");
    CHECK(config.get_int("gateway.profile.j2.seed") == 9);

    write_file(path, "[]");
    CHECK_THROWS_AS(config.load_file(path), Error);
}
