#include "ctirag/intel.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/log.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <thread>

namespace ctirag {

using nlohmann::json;

void EnrichmentRecord::validate() const {
    if (engine_total <= 0) raise(ErrorCode::invalid_params, "engine_total must be positive");
    if (detection_count < 0) raise(ErrorCode::invalid_params, "detection_count must be >= 0");
    if (found && detection_count > engine_total)
        raise(ErrorCode::invalid_params, "detection_count exceeds engine_total");
    if (!found && (detection_count != 0 || !tags.empty()))
        raise(ErrorCode::invalid_params, "not-found record must have no detections or tags");
}

namespace {

std::atomic<long> g_live_calls{0};

PlatformResponse response_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) raise(ErrorCode::malformed_response, where + ": not a JSON object");
    PlatformResponse r;
    try {
        if (j.contains("found")) r.found = j["found"].get<bool>();
        if (j.contains("detection_count")) r.detection_count = j["detection_count"].get<std::int64_t>();
        if (j.contains("engine_total")) r.engine_total = j["engine_total"].get<std::int64_t>();
        if (j.contains("tags"))
            for (const json& t : j["tags"]) r.tags.push_back(t.get<std::string>());
        if (j.contains("reputation")) r.reputation = j["reputation"].get<std::int64_t>();
        if (j.contains("summary")) r.summary = j["summary"].get<std::string>();
    } catch (const json::exception& e) {
        raise(ErrorCode::malformed_response, where + ": " + e.what());
    }
    if (r.engine_total <= 0 || r.detection_count < 0 ||
        (r.found && r.detection_count > r.engine_total))
        raise(ErrorCode::malformed_response, where + ": counts out of range");
    return r;
}

} // namespace

FixtureIntelBackend::FixtureIntelBackend(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object())
        raise(ErrorCode::invalid_params, "fixture file must be a JSON object: " + path);
    for (auto& [key, value] : j.items())
        entries_.emplace(key, response_from_json(value, path + " entry " + key));
}

PlatformResponse FixtureIntelBackend::fetch(const Ioc& ioc) {
    auto it = entries_.find(ioc.key());
    if (it == entries_.end()) return PlatformResponse{}; // not found
    return it->second;
}

PlatformResponse DownIntelBackend::fetch(const Ioc&) {
    raise(ErrorCode::network_error, "intel backend is forced down");
}

LiveIntelBackend::LiveIntelBackend(LiveIntelOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty())
        raise(ErrorCode::invalid_params, "live intel backend requires intel.base_url");
}

PlatformResponse LiveIntelBackend::fetch(const Ioc& ioc) {
    auto it = options_.path_templates.find(ioc.kind);
    if (it == options_.path_templates.end())
        raise(ErrorCode::invalid_params,
              std::string("no endpoint path configured for kind ") + ioc_kind_name(ioc.kind));
    std::string path = it->second;
    std::size_t pos = path.find("{value}");
    if (pos == std::string::npos)
        raise(ErrorCode::invalid_params, "path template must contain {value}: " + path);
    path.replace(pos, 7, ioc.value);

    g_live_calls.fetch_add(1, std::memory_order_relaxed);
    httplib::Client client(options_.base_url);
    client.set_connection_timeout(options_.timeout_s);
    client.set_read_timeout(options_.timeout_s);
    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace(options_.key_header, options_.api_key);
    auto res = client.Get(path, headers);
    if (!res) raise(ErrorCode::network_error, "connection failed: " + options_.base_url + path);
    if (res->status == 404) return PlatformResponse{};
    if (res->status == 429) raise(ErrorCode::rate_limited, "platform rate limit");
    if (res->status >= 500) raise(ErrorCode::network_error, "http " + std::to_string(res->status));
    if (res->status != 200)
        raise(ErrorCode::malformed_response, "http " + std::to_string(res->status));
    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded()) raise(ErrorCode::malformed_response, "response body is not JSON");
    return response_from_json(j, options_.base_url + path);
}

long intel_live_call_count() { return g_live_calls.load(std::memory_order_relaxed); }
void reset_intel_live_call_count() { g_live_calls.store(0, std::memory_order_relaxed); }

struct RateLimiter::Impl {
    std::mutex mutex;
    std::condition_variable cv;
    double tokens;
    double rate_per_sec;
    double capacity;
    std::chrono::steady_clock::time_point last;
};

RateLimiter::RateLimiter(int rate_per_min) : impl_(std::make_shared<Impl>()) {
    if (rate_per_min < 1) rate_per_min = 1;
    impl_->capacity = rate_per_min;
    impl_->tokens = rate_per_min;
    impl_->rate_per_sec = rate_per_min / 60.0;
    impl_->last = std::chrono::steady_clock::now();
}

void RateLimiter::acquire() {
    std::unique_lock lock(impl_->mutex);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        double elapsed = std::chrono::duration<double>(now - impl_->last).count();
        impl_->last = now;
        impl_->tokens = std::min(impl_->capacity, impl_->tokens + elapsed * impl_->rate_per_sec);
        if (impl_->tokens >= 1.0) {
            impl_->tokens -= 1.0;
            return;
        }
        double wait_s = (1.0 - impl_->tokens) / impl_->rate_per_sec;
        impl_->cv.wait_for(lock, std::chrono::duration<double>(wait_s));
    }
}

// cache: concurrent reads, serialized writes
struct IntelClient::CacheImpl {
    std::shared_mutex mutex;
    std::map<std::string, std::pair<EnrichmentRecord, std::int64_t>> entries; // key -> (rec, expiry)
};

IntelClient::IntelClient(std::shared_ptr<IntelBackend> backend, IntelClientOptions options)
    : backend_(std::move(backend)), options_(std::move(options)),
      cache_(std::make_shared<CacheImpl>()) {
    if (!backend_) raise(ErrorCode::invalid_params, "intel client requires a backend");
    if (!options_.clock) options_.clock = system_clock();
    if (std::string(backend_->kind()) == "live")
        limiter_ = std::make_unique<RateLimiter>(options_.rate_per_min);
}

EnrichmentRecord IntelClient::fetch_fresh(const Ioc& ioc) {
    const bool live = std::string(backend_->kind()) == "live";

    EnrichmentRecord record;
    record.ioc = ioc;

    // never ship private/reserved addresses to an external platform
    if (live && is_private_or_reserved(ioc)) {
        record.fetched_at = options_.clock->now_unix_seconds();
        record.annotations.push_back("private-range");
        return record;
    }

    int attempts = options_.retry_max + 1;
    int backoff = options_.backoff_ms;
    PlatformResponse response;
    for (int attempt = 0;; ++attempt) {
        try {
            if (limiter_) limiter_->acquire();
            response = backend_->fetch(ioc);
            break;
        } catch (const Error& e) {
            bool transient = e.code() == ErrorCode::network_error ||
                             e.code() == ErrorCode::rate_limited;
            if (!transient || attempt + 1 >= attempts) throw;
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
    }

    record.found = response.found;
    record.detection_count = response.found ? response.detection_count : 0;
    record.engine_total = response.engine_total;
    record.tags = response.found ? response.tags : std::vector<std::string>{};
    record.summary = response.summary;
    if (response.reputation) {
        record.reputation = *response.reputation;
    } else if (response.found) {
        record.reputation = 0;
        record.tags.push_back("no-reputation");
    }
    record.fetched_at = std::string(backend_->kind()) == "fixture"
                            ? options_.fixture_fetched_at
                            : options_.clock->now_unix_seconds();
    record.validate();
    return record;
}

EnrichmentRecord IntelClient::lookup(const Ioc& ioc) {
    const std::string key = ioc.key();
    const std::int64_t now = options_.clock->now_unix_seconds();
    {
        std::shared_lock lock(cache_->mutex);
        auto it = cache_->entries.find(key);
        if (it != cache_->entries.end() && it->second.second > now) return it->second.first;
    }
    EnrichmentRecord record = fetch_fresh(ioc);
    {
        std::unique_lock lock(cache_->mutex);
        cache_->entries[key] = {record, now + options_.cache_ttl_s};
    }
    return record;
}

EnrichmentContext IntelClient::enrich(const Alert& alert, const std::vector<Ioc>& iocs,
                                      const LookupObserver& observer) {
    (void)alert; // present for contract symmetry; enrichment is IOC-driven
    EnrichmentContext ctx;
    ctx.records.reserve(iocs.size());
    for (const Ioc& ioc : iocs) {
        LookupTrace trace;
        trace.ioc = ioc;
        {
            std::shared_lock lock(cache_->mutex);
            auto it = cache_->entries.find(ioc.key());
            trace.cache_hit =
                it != cache_->entries.end() && it->second.second > options_.clock->now_unix_seconds();
        }
        try {
            ctx.records.push_back(lookup(ioc));
        } catch (const Error& e) {
            EnrichmentRecord record;
            record.ioc = ioc;
            record.fetched_at = options_.clock->now_unix_seconds();
            record.annotations.push_back(std::string("error:") + error_code_name(e.code()));
            ctx.records.push_back(std::move(record));
            trace.error = true;
            trace.detail = e.what();
            log_warn("intel lookup failed for " + ioc.key() + ": " + e.what());
        }
        if (observer) observer(trace);
    }

    std::size_t found = 0;
    for (const EnrichmentRecord& r : ctx.records)
        if (r.found) ++found;
    ctx.coverage = ctx.records.empty() ? 0.0 : static_cast<double>(found) / ctx.records.size();
    ctx.rendered = render_context(ctx.records);
    return ctx;
}

std::string IntelClient::render_context(const std::vector<EnrichmentRecord>& records) {
    bool all_errored = !records.empty();
    for (const EnrichmentRecord& r : records) {
        bool errored = false;
        for (const std::string& a : r.annotations)
            if (starts_with(a, "error:")) errored = true;
        if (!errored) all_errored = false;
    }
    if (records.empty() || all_errored) return kNoPlatformContext;

    std::ostringstream out;
    out << kEnrichmentHeader << "\n";
    std::size_t found = 0;
    for (const EnrichmentRecord& r : records) {
        out << "- ioc: " << r.ioc.value << " [" << ioc_kind_name(r.ioc.kind) << "]\n";
        out << "  found: " << (r.found ? "yes" : "no") << "\n";
        if (r.found) {
            ++found;
            out << "  detections: " << r.detection_count << "/" << r.engine_total << "\n";
            out << "  reputation: " << r.reputation << "\n";
            out << "  tags: ";
            for (std::size_t i = 0; i < r.tags.size(); ++i)
                out << (i ? ", " : "") << r.tags[i];
            out << "\n";
            out << "  summary: " << r.summary << "\n";
        }
        for (const std::string& a : r.annotations) out << "  note: " << a << "\n";
    }
    out << "coverage: " << found << "/" << records.size() << " found";
    return out.str();
}

} // namespace ctirag
