#include "ctirag/gateway.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/log.hpp"
#include "ctirag/util.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cctype>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace ctirag {

using nlohmann::json;

namespace {

std::string substitute_tokens(const std::string& text, std::uint64_t digest, std::uint64_t seed) {
    std::string out = text;
    auto replace_all = [&out](std::string_view from, const std::string& to) {
        std::size_t pos = 0;
        while ((pos = out.find(from, pos)) != std::string::npos) {
            out.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    std::string hex16(buf);
    replace_all("{hash16}", hex16);
    replace_all("{hash8}", hex16.substr(0, 8));
    replace_all("{rating}", std::to_string(1 + ((digest ^ seed) % 5)));
    replace_all("{rating_high}", std::to_string(4 + (((digest ^ seed) >> 8) % 2)));
    return out;
}

} // namespace

MockBackend::MockBackend(MockBackendOptions options) : options_(std::move(options)) {
    if (options_.dim == 0) raise(ErrorCode::invalid_params, "mock embedder dim must be positive");
}

std::string MockBackend::complete(const GenerationRequest& request) {
    std::uint64_t digest = fnv1a64(request.prompt);
    std::uint64_t seed = request.seed.value_or(options_.seed);
    for (const MockRule& rule : options_.rules) {
        bool matched = false;
        switch (rule.match) {
        case MockRule::Match::contains: matched = contains(request.prompt, rule.pattern); break;
        case MockRule::Match::prefix: matched = starts_with(request.prompt, rule.pattern); break;
        case MockRule::Match::hash: matched = fnv1a64_hex(request.prompt) == rule.pattern; break;
        }
        if (!matched) continue;
        if (!rule.fail.empty())
            raise(ErrorCode::backend_unavailable, "mock scripted failure: " + rule.fail);
        return substitute_tokens(rule.response, digest, seed);
    }
    return "MOCK-COMPLETION " + fnv1a64_hex(request.prompt);
}

EmbeddingVector MockBackend::embed(const std::string& text) {
    if (text.empty()) raise(ErrorCode::invalid_params, "cannot embed empty text");

    EmbeddingVector v;
    v.values.assign(options_.dim, 0.0);

    // token unigrams + bigrams, hashed into buckets
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));

    auto add_gram = [&](const std::string& gram, double weight) {
        std::uint64_t h = fnv1a64(gram);
        std::size_t bucket = static_cast<std::size_t>(h % options_.dim);
        double sign = ((h >> 63) & 1) ? -1.0 : 1.0;
        double magnitude = 1.0 + static_cast<double>((h >> 32) % 997) / 997.0;
        v.values[bucket] += sign * magnitude * weight;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add_gram(tokens[i], 1.0);
        if (i + 1 < tokens.size()) add_gram(tokens[i] + " " + tokens[i + 1], 0.5);
    }

    // whole-text fingerprint keeps distinct inputs off the zero vector and
    // separates texts whose n-gram multisets coincide
    std::uint64_t fp = fnv1a64(text) ^ (options_.seed * 0x9e3779b97f4a7c15ULL);
    v.values[fp % options_.dim] += 0.25 + static_cast<double>(fp % 4093) / 4093.0;
    v.values[(fp >> 17) % options_.dim] -= 0.25 + static_cast<double>((fp >> 13) % 4093) / 4093.0;

    return v;
}

std::vector<MockRule> MockBackend::load_rules(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("rules") || !j["rules"].is_array())
        raise(ErrorCode::invalid_params, "mock script must be {\"rules\": [...]}: " + path);

    std::vector<MockRule> rules;
    for (const json& entry : j["rules"]) {
        MockRule rule;
        if (entry.contains("contains")) {
            rule.match = MockRule::Match::contains;
            rule.pattern = entry["contains"].get<std::string>();
        } else if (entry.contains("prefix")) {
            rule.match = MockRule::Match::prefix;
            rule.pattern = entry["prefix"].get<std::string>();
        } else if (entry.contains("hash")) {
            rule.match = MockRule::Match::hash;
            rule.pattern = entry["hash"].get<std::string>();
        } else {
            raise(ErrorCode::invalid_params, "mock rule needs contains/prefix/hash: " + path);
        }
        if (entry.contains("response")) rule.response = entry["response"].get<std::string>();
        if (entry.contains("fail")) rule.fail = entry["fail"].get<std::string>();
        if (rule.response.empty() && rule.fail.empty())
            raise(ErrorCode::invalid_params, "mock rule needs response or fail: " + path);
        rules.push_back(std::move(rule));
    }
    return rules;
}

RemoteBackend::RemoteBackend(RemoteBackendOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty())
        raise(ErrorCode::invalid_params, "remote backend requires gateway.base_url");
}

std::string RemoteBackend::post_json(const std::string& path, const std::string& body) {
    int attempts = options_.retry_max + 1;
    int backoff = options_.backoff_ms;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        httplib::Client client(options_.base_url);
        client.set_connection_timeout(options_.timeout_s);
        client.set_read_timeout(options_.timeout_s);
        httplib::Headers headers;
        if (!options_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + options_.api_key);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "connection failed";
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        last_error = "http status " + std::to_string(res->status);
        if (res->status < 500 && res->status != 429) break; // non-transient
    }
    raise(ErrorCode::backend_unavailable,
          options_.base_url + path + " after " + std::to_string(attempts) +
              " attempts: " + last_error);
}

std::string RemoteBackend::complete(const GenerationRequest& request) {
    json body;
    body["model"] = options_.model;
    body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output_tokens;
    if (request.seed) body["seed"] = *request.seed;

    std::string reply = post_json(options_.completions_path, body.dump());
    json j = json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
        !j["choices"][0].contains("message") ||
        !j["choices"][0]["message"].contains("content"))
        raise(ErrorCode::backend_unavailable, "completion response has unexpected shape");
    return j["choices"][0]["message"]["content"].get<std::string>();
}

EmbeddingVector RemoteBackend::embed(const std::string& text) {
    if (text.empty()) raise(ErrorCode::invalid_params, "cannot embed empty text");
    json body;
    body["model"] = options_.embed_model;
    body["input"] = json::array({text});

    std::string reply = post_json(options_.embeddings_path, body.dump());
    json j = json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || j["data"].empty() ||
        !j["data"][0].contains("embedding") || !j["data"][0]["embedding"].is_array())
        raise(ErrorCode::backend_unavailable, "embedding response has unexpected shape");

    EmbeddingVector v;
    for (const json& x : j["data"][0]["embedding"]) v.values.push_back(x.get<double>());
    if (v.values.empty()) raise(ErrorCode::backend_unavailable, "embedding response empty");
    return v;
}

// Runtime-sized counting semaphore; std::counting_semaphore wants a
// compile-time ceiling.
struct ModelGateway::Slot {
    std::mutex mutex;
    std::condition_variable cv;
    int available;

    explicit Slot(int n) : available(n) {}
    void acquire() {
        std::unique_lock lock(mutex);
        cv.wait(lock, [this] { return available > 0; });
        --available;
    }
    void release() {
        {
            std::lock_guard lock(mutex);
            ++available;
        }
        cv.notify_one();
    }
};

namespace {
struct SlotGuard {
    ModelGateway::Slot* slot;
    explicit SlotGuard(ModelGateway::Slot* s) : slot(s) {
        if (slot) slot->acquire();
    }
    ~SlotGuard() {
        if (slot) slot->release();
    }
};
} // namespace

ModelGateway::ModelGateway(std::unique_ptr<TextBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options) {
    if (!backend_) raise(ErrorCode::invalid_params, "gateway requires a backend");
    if (options_.inflight_limit > 0)
        limiter_ = std::make_shared<Slot>(options_.inflight_limit);
}

std::string ModelGateway::complete(const GenerationRequest& request) {
    if (request.prompt.empty()) raise(ErrorCode::invalid_params, "prompt must be nonempty");
    if (approx_tokens(request.prompt) > options_.max_prompt_tokens)
        raise(ErrorCode::context_overflow,
              "prompt is ~" + std::to_string(approx_tokens(request.prompt)) +
                  " tokens, budget " + std::to_string(options_.max_prompt_tokens));
    SlotGuard guard(static_cast<Slot*>(limiter_.get()));
    return backend_->complete(request);
}

EmbeddingVector ModelGateway::embed(const std::string& text) {
    if (text.empty()) raise(ErrorCode::invalid_params, "cannot embed empty text");
    SlotGuard guard(static_cast<Slot*>(limiter_.get()));
    return backend_->embed(text);
}

} // namespace ctirag
