#pragma once

#include "ctirag/alert.hpp"
#include "ctirag/ioc.hpp"
#include "ctirag/util.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ctirag {

// One platform answer for one IOC. `tags` carries platform-reported tags
// only (empty when not found); client-side markers such as "private-range"
// or "error:NetworkError" live in `annotations` so the not-found invariant
// stays intact.
struct EnrichmentRecord {
    Ioc ioc;
    bool found = false;
    std::int64_t detection_count = 0;
    std::int64_t engine_total = 1;
    std::vector<std::string> tags;
    std::int64_t reputation = 0;
    std::string summary;
    std::int64_t fetched_at = 0; // unix seconds
    std::vector<std::string> annotations;

    void validate() const;
};

struct EnrichmentContext {
    std::vector<EnrichmentRecord> records;
    std::string rendered; // deterministic function of records
    double coverage = 0.0;
};

// Fixed line used whenever the platform contributed nothing: no IOCs, or
// every lookup failed.
inline constexpr const char* kNoPlatformContext = "NO PLATFORM CONTEXT AVAILABLE";
// First line of a non-sentinel rendered block; ablation tests key on it.
inline constexpr const char* kEnrichmentHeader = "PLATFORM ENRICHMENT";

// What a platform returns before the client fills in ioc/fetched_at.
struct PlatformResponse {
    bool found = false;
    std::int64_t detection_count = 0;
    std::int64_t engine_total = 1;
    std::vector<std::string> tags;
    std::optional<std::int64_t> reputation;
    std::string summary;
};

class IntelBackend {
public:
    virtual ~IntelBackend() = default;
    virtual PlatformResponse fetch(const Ioc& ioc) = 0;
    virtual const char* kind() const = 0;
};

// Local file keyed "<kind>:<value>" mapping to PlatformResponse fields.
class FixtureIntelBackend final : public IntelBackend {
public:
    explicit FixtureIntelBackend(const std::string& path);
    PlatformResponse fetch(const Ioc& ioc) override;
    const char* kind() const override { return "fixture"; }

private:
    std::map<std::string, PlatformResponse> entries_;
};

// Always raises NetworkError; used to exercise degraded-mode behavior.
class DownIntelBackend final : public IntelBackend {
public:
    PlatformResponse fetch(const Ioc& ioc) override;
    const char* kind() const override { return "down"; }
};

struct LiveIntelOptions {
    std::string base_url;
    std::string api_key;
    std::string key_header = "x-apikey";
    // endpoint path template per kind; "{value}" is replaced with the IOC
    std::map<IocKind, std::string> path_templates;
    int timeout_s = 30;
};

// HTTP GET per IOC. The endpoint is expected to answer with a JSON object
// carrying the PlatformResponse fields; 404 maps to found=false.
class LiveIntelBackend final : public IntelBackend {
public:
    explicit LiveIntelBackend(LiveIntelOptions options);
    PlatformResponse fetch(const Ioc& ioc) override;
    const char* kind() const override { return "live"; }

private:
    LiveIntelOptions options_;
};

// Process-wide count of HTTP requests issued by LiveIntelBackend. Hermetic
// tests assert this stays 0 under the fixture backend.
long intel_live_call_count();
void reset_intel_live_call_count();

// Blocking token bucket: capacity = rate_per_min, refilled continuously.
class RateLimiter {
public:
    explicit RateLimiter(int rate_per_min);
    void acquire();

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

struct IntelClientOptions {
    std::int64_t cache_ttl_s = 86400; // 24 h
    int rate_per_min = 4;             // live backend only
    int retry_max = 2;
    int backoff_ms = 200;
    ClockPtr clock;                   // defaults to the system clock
    // fetched_at stamped on fixture answers, keeping rendered output and
    // cached records byte-stable
    std::int64_t fixture_fetched_at = 0;
};

struct LookupTrace {
    Ioc ioc;
    bool cache_hit = false;
    bool error = false;
    std::string detail;
};
using LookupObserver = std::function<void(const LookupTrace&)>;

// The standard-search client. Lookups are cached by (kind, value) for the
// configured TTL; errors are never cached. Private-range addresses are not
// sent to a live backend.
class IntelClient {
public:
    IntelClient(std::shared_ptr<IntelBackend> backend, IntelClientOptions options);

    // Throws NetworkError / RateLimited / MalformedResponse after retries.
    EnrichmentRecord lookup(const Ioc& ioc);

    // One record per IOC in input order. Lookup failures degrade to
    // found=false records annotated "error:<code>"; the pipeline never
    // aborts on partial enrichment.
    EnrichmentContext enrich(const Alert& alert, const std::vector<Ioc>& iocs,
                             const LookupObserver& observer = {});

    const char* backend_kind() const { return backend_->kind(); }

    static std::string render_context(const std::vector<EnrichmentRecord>& records);

private:
    EnrichmentRecord fetch_fresh(const Ioc& ioc);

    std::shared_ptr<IntelBackend> backend_;
    IntelClientOptions options_;
    std::unique_ptr<RateLimiter> limiter_;
    struct CacheImpl;
    std::shared_ptr<CacheImpl> cache_;
};

} // namespace ctirag
