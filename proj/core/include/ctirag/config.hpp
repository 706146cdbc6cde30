#pragma once

#include <map>
#include <string>
#include <vector>

namespace ctirag {

// Layered key/value configuration: defaults < config file < environment <
// explicit sets (CLI flags). Keys are dotted ("intel.backend"); environment
// variables use the CTIRAG_ prefix with dots as underscores
// (CTIRAG_INTEL_API_KEY). Secrets are masked in dumps.
class RunConfig {
public:
    static RunConfig defaults();

    // JSON object file; nested objects flatten into dotted keys.
    void load_file(const std::string& path); // throws Error(invalid_params/store_io)
    void load_env();
    void set(const std::string& key, const std::string& value);
    // "key=value" form used by --set
    void set_kv(const std::string& key_equals_value);

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key) const; // throws on unknown key
    std::string get_str(const std::string& key, const std::string& fallback) const;
    long long get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    // every key, secrets replaced by "***"
    std::string dump_redacted() const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    static bool is_secret_key(const std::string& key);
    // keys outside the known set (and not gateway.profile.*) are accepted
    // but reported here so typos surface
    std::vector<std::string> unknown_keys() const;

private:
    std::map<std::string, std::string> values_;
};

// True when every configured backend is local/deterministic (or forced via
// run.deterministic=on). Deterministic runs use a fixed clock and a single
// worker so batch outputs are byte-stable.
bool deterministic_mode(const RunConfig& config);

} // namespace ctirag
