#include "ctirag/config.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/util.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <sstream>

extern char** environ;

namespace ctirag {

using nlohmann::json;

namespace {

const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"intel.backend", "fixture"}, // fixture | live | down
        {"intel.fixture_path", "assets/intel_fixtures.json"},
        {"intel.base_url", ""},
        {"intel.api_key", ""},
        {"intel.key_header", "x-apikey"},
        {"intel.path.ipv4", "/api/v3/ip_addresses/{value}"},
        {"intel.path.ipv6", "/api/v3/ip_addresses/{value}"},
        {"intel.path.domain", "/api/v3/domains/{value}"},
        {"intel.path.url", "/api/v3/urls/{value}"},
        {"intel.path.md5", "/api/v3/files/{value}"},
        {"intel.path.sha1", "/api/v3/files/{value}"},
        {"intel.path.sha256", "/api/v3/files/{value}"},
        {"intel.rate_per_min", "4"},
        {"intel.cache_ttl_s", "86400"},
        {"intel.retry_max", "2"},
        {"intel.backoff_ms", "200"},
        {"kb.max_chunk_chars", "1600"},
        {"kb.overlap_chars", "200"},
        {"kb.dim", "256"},
        {"kb.embedder", "mock"}, // mock | remote
        {"kb.store_path", "kb.store"},
        {"gateway.backend", "mock"}, // mock | remote
        {"gateway.base_url", ""},
        {"gateway.api_key", ""},
        {"gateway.model", "gpt-4o"},
        {"gateway.embed_model", "text-embedding"},
        {"gateway.max_prompt_tokens", "8000"},
        {"gateway.retry_max", "2"},
        {"gateway.backoff_ms", "250"},
        {"gateway.inflight_limit", "4"},
        {"gateway.mock_script", "assets/mock_responses.json"},
        {"gateway.seed", "0"},
        {"pipeline.k", "4"},
        {"pipeline.query_raw_alert", "false"},
        {"pipeline.max_output_tokens", "1024"},
        {"judge.variance_convention", "population"}, // population | sample
        {"judge.max_output_tokens", "512"},
        {"templates.dir", "assets/templates"},
        {"run.deterministic", "auto"}, // auto | on | off
        {"run.jobs", "1"},
        {"run.log_level", "warn"},
        {"serve.bind", "127.0.0.1:8080"},
        {"serve.max_concurrency", "8"},
        {"serve.auth_token", ""},
    };
    return defaults;
}

void flatten(const json& j, const std::string& prefix,
             std::map<std::string, std::string>& out) {
    for (auto& [key, value] : j.items()) {
        std::string full = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            flatten(value, full, out);
        } else if (value.is_string()) {
            out[full] = value.get<std::string>();
        } else if (value.is_boolean()) {
            out[full] = value.get<bool>() ? "true" : "false";
        } else if (value.is_number_integer()) {
            out[full] = std::to_string(value.get<long long>());
        } else if (value.is_number()) {
            std::ostringstream ss;
            ss << value.get<double>();
            out[full] = ss.str();
        } else {
            raise(ErrorCode::invalid_params, "config value for '" + full + "' must be scalar");
        }
    }
}

} // namespace

RunConfig RunConfig::defaults() {
    RunConfig config;
    config.values_ = default_values();
    return config;
}

void RunConfig::load_file(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object())
        raise(ErrorCode::invalid_params, "config file must be a JSON object: " + path);
    std::map<std::string, std::string> flat;
    flatten(j, "", flat);
    for (auto& [k, v] : flat) values_[k] = v;
}

void RunConfig::load_env() {
    const std::string prefix = "CTIRAG_";
    for (char** env = environ; *env; ++env) {
        std::string entry(*env);
        std::size_t eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string name = entry.substr(0, eq);
        if (!starts_with(name, prefix)) continue;
        std::string key = to_lower(name.substr(prefix.size()));
        for (char& c : key)
            if (c == '_') c = '.';
        // path-like keys keep underscores inside the final segment; match
        // against known keys by collapsing both forms
        std::string value = entry.substr(eq + 1);
        // try exact dotted form first, then the best-known key whose
        // normalized form matches
        if (values_.count(key)) {
            values_[key] = value;
            continue;
        }
        bool matched = false;
        for (const auto& [known, _] : default_values()) {
            std::string normalized = known;
            for (char& c : normalized)
                if (c == '_') c = '.';
            if (normalized == key) {
                values_[known] = value;
                matched = true;
                break;
            }
        }
        if (!matched) values_[key] = value;
    }
}

void RunConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

void RunConfig::set_kv(const std::string& key_equals_value) {
    std::size_t eq = key_equals_value.find('=');
    if (eq == std::string::npos || eq == 0)
        raise(ErrorCode::invalid_params, "--set expects key=value, got: " + key_equals_value);
    set(key_equals_value.substr(0, eq), key_equals_value.substr(eq + 1));
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string RunConfig::get_str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) raise(ErrorCode::invalid_params, "unknown config key: " + key);
    return it->second;
}

std::string RunConfig::get_str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

long long RunConfig::get_int(const std::string& key) const {
    const std::string value = get_str(key);
    try {
        std::size_t consumed = 0;
        long long parsed = std::stoll(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        raise(ErrorCode::invalid_params, "config key '" + key + "' is not an integer: " + value);
    }
}

double RunConfig::get_double(const std::string& key) const {
    const std::string value = get_str(key);
    try {
        std::size_t consumed = 0;
        double parsed = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        raise(ErrorCode::invalid_params, "config key '" + key + "' is not a number: " + value);
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    std::string value = to_lower(get_str(key));
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    raise(ErrorCode::invalid_params, "config key '" + key + "' is not a boolean: " + value);
}

bool RunConfig::is_secret_key(const std::string& key) {
    return contains(key, "api_key") || contains(key, "auth_token") || contains(key, "secret");
}

std::string RunConfig::dump_redacted() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) {
        out << key << " = ";
        if (is_secret_key(key) && !value.empty()) out << "***";
        else out << value;
        out << '\n';
    }
    return out.str();
}

std::vector<std::string> RunConfig::unknown_keys() const {
    std::vector<std::string> unknown;
    for (const auto& [key, _] : values_) {
        if (default_values().count(key)) continue;
        if (starts_with(key, "gateway.profile.")) continue;
        unknown.push_back(key);
    }
    return unknown;
}

bool deterministic_mode(const RunConfig& config) {
    std::string mode = config.get_str("run.deterministic", "auto");
    if (mode == "on") return true;
    if (mode == "off") return false;
    return config.get_str("intel.backend", "fixture") != "live" &&
           config.get_str("gateway.backend", "mock") == "mock" &&
           config.get_str("kb.embedder", "mock") == "mock";
}

} // namespace ctirag
