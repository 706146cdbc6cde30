#include "ctirag/corpus.hpp"

#include "ctirag/ioc.hpp"
#include "ctirag/util.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <set>

using namespace ctirag;
using ctirag::testing::TempDir;

TEST_CASE("the shipped scenario table has the ten published rows") {
    const auto& scenarios = load_scenarios();
    REQUIRE(scenarios.size() == 10);

    CHECK(scenarios[0].adversary == "Advanced Thief");
    CHECK(scenarios[0].ability_name == "Advanced File Search and Stager");
    CHECK(scenarios[0].tactic == "Collection");
    CHECK(scenarios[0].technique_id == "T1119");
    CHECK(scenarios[0].technique_name == "Automated Collection");
    CHECK(scenarios[0].host_os == HostOs::linux_host);

    // the injection row
    const AttackScenario* injection = nullptr;
    for (const auto& s : scenarios)
        if (s.ability_name == "Inject Sandcat into process") injection = &s;
    REQUIRE(injection != nullptr);
    CHECK(injection->technique_id == "T1055.002");
    CHECK(injection->host_os == HostOs::windows_host);
    CHECK(injection->tactic == "Defense-Evasion");
}

TEST_CASE("scenarios cover both host OSes and at least five tactics") {
    std::set<std::string> tactics;
    bool linux_seen = false, windows_seen = false;
    for (const auto& s : load_scenarios()) {
        tactics.insert(s.tactic);
        linux_seen |= s.host_os == HostOs::linux_host;
        windows_seen |= s.host_os == HostOs::windows_host;
        CHECK(technique_id_well_formed(s.technique_id));
    }
    CHECK(tactics.size() >= 5);
    CHECK(linux_seen);
    CHECK(windows_seen);
}

TEST_CASE("technique id shape") {
    CHECK(technique_id_well_formed("T1119"));
    CHECK(technique_id_well_formed("T1055.002"));
    CHECK_FALSE(technique_id_well_formed("T119"));
    CHECK_FALSE(technique_id_well_formed("1119"));
    CHECK_FALSE(technique_id_well_formed("T1055.02"));
    CHECK_FALSE(technique_id_well_formed("T1055-002"));
}

TEST_CASE("synthesize_alert is a pure function of (scenario, seed)") {
    const AttackScenario& s = load_scenarios()[2];
    Alert a = synthesize_alert(s, 42);
    Alert b = synthesize_alert(s, 42);
    CHECK(a.id == b.id);
    CHECK(a.raw_text == b.raw_text);
    CHECK(a.timestamp == b.timestamp);
    CHECK(a.source == AlertSource::simulated);

    Alert c = synthesize_alert(s, 43);
    CHECK(c.id != a.id);
    CHECK(c.raw_text != a.raw_text);
}

TEST_CASE("distinct seeds give distinct embedded ioc values") {
    const AttackScenario& s = load_scenarios()[0];
    auto iocs_a = extract_iocs(synthesize_alert(s, 1));
    auto iocs_b = extract_iocs(synthesize_alert(s, 2));
    std::set<std::string> a_values, b_values;
    for (const Ioc& i : iocs_a) a_values.insert(i.value);
    for (const Ioc& i : iocs_b) b_values.insert(i.value);
    for (const std::string& v : a_values) CHECK(b_values.count(v) == 0);
}

TEST_CASE("every synthesized alert parses into at least the ip and the hash") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (const AttackScenario& s : load_scenarios()) {
            Alert alert = synthesize_alert(s, seed);
            auto iocs = extract_iocs(alert);
            CHECK(iocs.size() >= 2);
            bool has_ip = false, has_hash = false;
            for (const Ioc& ioc : iocs) {
                if (ioc.kind == IocKind::ipv4) {
                    has_ip = true;
                    CHECK(is_private_or_reserved(ioc));
                }
                if (ioc.kind == IocKind::sha256) has_hash = true;
            }
            CHECK(has_ip);
            CHECK(has_hash);
            CHECK(contains(alert.raw_text, s.technique_id));
            CHECK(contains(alert.raw_text, s.tactic));
            CHECK(contains(alert.raw_text, host_os_name(s.host_os)));
        }
    }
}

TEST_CASE("synthesized batches round-trip through the alert batch format") {
    TempDir tmp;
    std::string path = tmp.file("alerts.jsonl");
    std::vector<Alert> alerts = synthesize_batch(25, 9);
    REQUIRE(alerts.size() == 25);
    std::set<std::string> ids;
    for (const Alert& a : alerts) ids.insert(a.id);
    CHECK(ids.size() == 25); // scenarios repeat, ids stay unique

    write_alert_batch(path, alerts);
    std::vector<std::pair<std::size_t, std::string>> errors;
    std::vector<Alert> back = read_alert_batch(path, &errors);
    CHECK(errors.empty());
    REQUIRE(back.size() == 25);
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].id == alerts[i].id);
        CHECK(back[i].raw_text == alerts[i].raw_text);
    }
}

TEST_CASE("a batch of ten covers every scenario once") {
    std::vector<Alert> alerts = synthesize_batch(10, 7);
    std::set<std::string> rules;
    for (const Alert& a : alerts) rules.insert(a.labels.at("rule"));
    CHECK(rules.size() == 10);
}

TEST_CASE("scenario export is one json object per row") {
    std::string jsonl = scenarios_to_jsonl();
    std::size_t lines = 0, pos = 0;
    while ((pos = jsonl.find('\n', pos)) != std::string::npos) {
        ++lines;
        ++pos;
    }
    CHECK(lines == 10);
    CHECK(contains(jsonl, "\"technique_id\":\"T1041\""));
}
