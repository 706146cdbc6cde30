#include "ctirag/alert.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/util.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace ctirag {

using nlohmann::json;

const char* alert_source_name(AlertSource source) {
    switch (source) {
    case AlertSource::real_siem: return "real_siem";
    case AlertSource::simulated: return "simulated";
    }
    return "real_siem";
}

bool alert_source_from_name(std::string_view name, AlertSource& out) {
    if (name == "real_siem") {
        out = AlertSource::real_siem;
        return true;
    }
    if (name == "simulated") {
        out = AlertSource::simulated;
        return true;
    }
    return false;
}

void Alert::validate() const {
    if (id.empty()) raise(ErrorCode::invalid_params, "alert id must be nonempty");
    if (raw_text.empty()) raise(ErrorCode::invalid_params, "alert raw_text must be nonempty");
}

std::string alert_to_json(const Alert& alert) {
    json j;
    j["id"] = alert.id;
    j["raw_text"] = alert.raw_text;
    j["source"] = alert_source_name(alert.source);
    j["timestamp"] = format_utc(alert.timestamp);
    if (!alert.labels.empty()) j["labels"] = alert.labels;
    return j.dump();
}

Alert alert_from_json(const std::string& json_text) {
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        raise(ErrorCode::invalid_params, "alert record is not a JSON object");

    Alert alert;
    if (!j.contains("id") || !j["id"].is_string())
        raise(ErrorCode::invalid_params, "alert field 'id' missing or not a string");
    alert.id = j["id"].get<std::string>();

    if (!j.contains("raw_text") || !j["raw_text"].is_string())
        raise(ErrorCode::invalid_params, "alert field 'raw_text' missing or not a string");
    alert.raw_text = j["raw_text"].get<std::string>();

    if (!j.contains("source") || !j["source"].is_string() ||
        !alert_source_from_name(j["source"].get<std::string>(), alert.source))
        raise(ErrorCode::invalid_params, "alert field 'source' must be real_siem or simulated");

    if (!j.contains("timestamp") || !j["timestamp"].is_string() ||
        !parse_utc(j["timestamp"].get<std::string>(), alert.timestamp))
        raise(ErrorCode::invalid_params, "alert field 'timestamp' must be ISO-8601 UTC");

    if (j.contains("labels")) {
        if (!j["labels"].is_object())
            raise(ErrorCode::invalid_params, "alert field 'labels' must be an object");
        for (auto& [k, v] : j["labels"].items()) {
            if (!v.is_string())
                raise(ErrorCode::invalid_params, "alert label '" + k + "' must be a string");
            alert.labels[k] = v.get<std::string>();
        }
    }
    alert.validate();
    return alert;
}

std::vector<Alert> read_alert_batch(const std::string& path,
                                    std::vector<std::pair<std::size_t, std::string>>* errors) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::store_io, "cannot open alert batch: " + path);

    std::vector<Alert> alerts;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            Alert alert = alert_from_json(line);
            if (!seen_ids.insert(alert.id).second)
                raise(ErrorCode::invalid_params, "duplicate alert id in batch: " + alert.id);
            alerts.push_back(std::move(alert));
        } catch (const Error& e) {
            if (errors) errors->emplace_back(lineno, e.what());
        }
    }
    return alerts;
}

void write_alert_batch(const std::string& path, const std::vector<Alert>& alerts) {
    std::ostringstream out;
    for (const Alert& alert : alerts) out << alert_to_json(alert) << '\n';
    write_file(path, out.str());
}

} // namespace ctirag
