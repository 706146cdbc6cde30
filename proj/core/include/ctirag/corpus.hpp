#pragma once

#include "ctirag/alert.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ctirag {

enum class HostOs { linux_host, windows_host };

const char* host_os_name(HostOs os);

struct AttackScenario {
    std::string adversary;
    std::string ability_name;
    std::string tactic;
    std::string technique_id;   // "T1234" or "T1234.001"
    std::string technique_name;
    HostOs host_os = HostOs::linux_host;
};

// The ten simulated-attack scenarios, in table order. Data is embedded.
const std::vector<AttackScenario>& load_scenarios();

bool technique_id_well_formed(const std::string& technique_id);

// Deterministic function of (scenario, seed). The alert body is a SIEM-like
// key:value layout embedding the technique id, tactic, host and two seeded
// synthetic IOCs: a 10.0.0.0/8 address and a random-hex sha256. Values come
// from reserved ranges and random hex so intel fixtures can be authored
// offline.
Alert synthesize_alert(const AttackScenario& scenario, std::uint64_t seed);

// count alerts cycling through the scenario table, seeds seed, seed+1, ...
std::vector<Alert> synthesize_batch(std::size_t count, std::uint64_t seed);

// Scenario table as JSON-lines, for documentation export.
std::string scenarios_to_jsonl();

} // namespace ctirag
