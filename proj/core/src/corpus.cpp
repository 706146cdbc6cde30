#include "ctirag/corpus.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/util.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <sstream>

namespace ctirag {

using nlohmann::json;

const char* host_os_name(HostOs os) {
    return os == HostOs::linux_host ? "linux" : "windows";
}

const std::vector<AttackScenario>& load_scenarios() {
    static const std::vector<AttackScenario> scenarios = {
        {"Advanced Thief", "Advanced File Search and Stager", "Collection", "T1119",
         "Automated Collection", HostOs::linux_host},
        {"Advanced Thief", "Compress staged directory", "Collection", "T1560.001",
         "Archive Collected Data: Archive via Utility", HostOs::linux_host},
        {"Advanced Thief", "Exfil staged directory", "Exfiltration", "T1041",
         "Exfiltration Over C2 Channel", HostOs::linux_host},
        {"Stowaway", "Discover injectable process", "Discovery", "T1057", "Process Discovery",
         HostOs::windows_host},
        {"Stowaway", "Inject Sandcat into process", "Defense-Evasion", "T1055.002",
         "Process Injection: Portable Executable Injection", HostOs::windows_host},
        {"atomic", "NMAP scan", "Technical-Information-Gathering", "T1254",
         "Conduct active scanning", HostOs::linux_host},
        {"atomic", "Access /etc/shadow (Local)", "Credential-Access", "T1003.008",
         "OS Credential Dumping: /etc/passwd, /etc/master.passwd and /etc/shadow",
         HostOs::linux_host},
        {"Windows Worm #1", "Collect ARP details", "Discovery", "T1018",
         "Remote System Discovery", HostOs::windows_host},
        {"Super Spy", "Find files", "Collection", "T1005", "Data from Local System",
         HostOs::windows_host},
        {"Super Spy", "Exfil staged directory windows", "Exfiltration", "T1041",
         "Exfiltration Over C2 Channel", HostOs::windows_host},
    };
    return scenarios;
}

bool technique_id_well_formed(const std::string& technique_id) {
    // T\d{4}(\.\d{3})?
    if (technique_id.size() != 5 && technique_id.size() != 9) return false;
    if (technique_id[0] != 'T') return false;
    for (int i = 1; i <= 4; ++i)
        if (technique_id[i] < '0' || technique_id[i] > '9') return false;
    if (technique_id.size() == 9) {
        if (technique_id[5] != '.') return false;
        for (int i = 6; i <= 8; ++i)
            if (technique_id[i] < '0' || technique_id[i] > '9') return false;
    }
    return true;
}

namespace {

// splitmix64: seeds expand into well-distributed streams without relying on
// distribution objects, which are not portable across standard libraries
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t below(std::uint64_t n) { return next() % n; }
};

std::string random_hex(Rng& rng, std::size_t chars) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(chars);
    for (std::size_t i = 0; i < chars; ++i) out.push_back(digits[rng.below(16)]);
    return out;
}

std::uint64_t scenario_fingerprint(const AttackScenario& s) {
    return fnv1a64(s.adversary + "|" + s.ability_name + "|" + s.technique_id);
}

} // namespace

Alert synthesize_alert(const AttackScenario& scenario, std::uint64_t seed) {
    Rng rng(seed ^ scenario_fingerprint(scenario));

    char ip[32];
    std::snprintf(ip, sizeof(ip), "10.%llu.%llu.%llu",
                  static_cast<unsigned long long>(rng.below(254) + 1),
                  static_cast<unsigned long long>(rng.below(256)),
                  static_cast<unsigned long long>(rng.below(254) + 1));
    std::string sha256 = random_hex(rng, 64);
    std::string host_name = std::string("lab-") +
                            (scenario.host_os == HostOs::linux_host ? "ln" : "win") + "-" +
                            std::to_string(rng.below(90) + 10);

    // alerts fall in a fixed observation window so timestamps stay synthetic
    std::int64_t base = 1725148800; // 2024-09-01T00:00:00Z
    std::int64_t timestamp = base + static_cast<std::int64_t>(rng.below(7 * 24 * 3600));

    Alert alert;
    alert.id = "sim-" + std::to_string(seed) + "-" + fnv1a64_hex(scenario.technique_id + scenario.ability_name).substr(0, 8);
    alert.source = AlertSource::simulated;
    alert.timestamp = timestamp;
    alert.labels = {
        {"rule", scenario.ability_name},
        {"host", host_name},
        {"adversary", scenario.adversary},
    };

    std::ostringstream body;
    body << "ts=" << format_utc(timestamp) << " severity=high rule=\"" << scenario.ability_name
         << "\"\n";
    body << "host.os=" << host_os_name(scenario.host_os) << " host.name=" << host_name << "\n";
    body << "mitre.tactic=" << scenario.tactic << " mitre.technique=" << scenario.technique_id
         << " technique.name=\"" << scenario.technique_name << "\"\n";
    body << "src.ip=" << ip << "\n";
    body << "file.sha256=" << sha256 << "\n";
    body << "message=Detection rule matched activity consistent with " << scenario.technique_name
         << " attributed to adversary profile " << scenario.adversary << "\n";
    alert.raw_text = body.str();
    return alert;
}

std::vector<Alert> synthesize_batch(std::size_t count, std::uint64_t seed) {
    const std::vector<AttackScenario>& scenarios = load_scenarios();
    std::vector<Alert> alerts;
    alerts.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        alerts.push_back(synthesize_alert(scenarios[i % scenarios.size()], seed + i));
    return alerts;
}

std::string scenarios_to_jsonl() {
    std::ostringstream out;
    for (const AttackScenario& s : load_scenarios()) {
        json j;
        j["adversary"] = s.adversary;
        j["ability_name"] = s.ability_name;
        j["tactic"] = s.tactic;
        j["technique_id"] = s.technique_id;
        j["technique_name"] = s.technique_name;
        j["host_os"] = host_os_name(s.host_os);
        out << j.dump() << '\n';
    }
    return out.str();
}

} // namespace ctirag
