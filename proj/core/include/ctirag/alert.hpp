#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ctirag {

enum class AlertSource { real_siem, simulated };

const char* alert_source_name(AlertSource source);
bool alert_source_from_name(std::string_view name, AlertSource& out);

// One SIEM alert. Batch files carry one alert per line as a flat JSON
// object with exactly these field names: id, raw_text, source, timestamp,
// labels (optional).
struct Alert {
    std::string id;
    std::string raw_text;
    AlertSource source = AlertSource::real_siem;
    std::int64_t timestamp = 0; // unix seconds, UTC
    std::map<std::string, std::string> labels;

    void validate() const; // throws Error(invalid_params)
};

std::string alert_to_json(const Alert& alert);
Alert alert_from_json(const std::string& json_text); // throws Error(invalid_params)

// Reads a newline-delimited batch. Malformed lines are reported through
// `errors` as (line_number, message) and skipped; well-formed alerts with
// duplicate ids within the batch are rejected as malformed.
std::vector<Alert> read_alert_batch(const std::string& path,
                                    std::vector<std::pair<std::size_t, std::string>>* errors = nullptr);
void write_alert_batch(const std::string& path, const std::vector<Alert>& alerts);

} // namespace ctirag
