#pragma once

#include "ctirag/embedding.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ctirag {

struct GenerationRequest {
    std::string prompt;
    int max_output_tokens = 1024;
    double temperature = 0.0; // determinism preferred
    std::optional<std::uint64_t> seed;
};

// Text-generation + embedding backend. Implementations: deterministic mock
// (offline tests) and remote HTTP (chat-completion / embedding endpoints).
class TextBackend {
public:
    virtual ~TextBackend() = default;
    virtual std::string complete(const GenerationRequest& request) = 0;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual const char* kind() const = 0;
};

// One entry of the mock's scripted response table. Rules are evaluated in
// order; the first match wins. Responses may carry the substitution tokens
//   {hash8} {hash16}   hex digest of the prompt
//   {rating}           1 + (digest ^ seed) % 5
//   {rating_high}      4 + ((digest ^ seed) >> 8) % 2
// so scripted judge replies stay deterministic per prompt.
struct MockRule {
    enum class Match { contains, prefix, hash };
    Match match = Match::contains;
    std::string pattern;
    std::string response;
    std::string fail; // nonempty -> throw this error instead ("unavailable")
};

struct MockBackendOptions {
    std::size_t dim = 256;
    std::uint64_t seed = 0;
    std::vector<MockRule> rules;
};

// Pure and lock-free: completions are a function of (prompt digest, seed,
// scripted table); embeddings hash token n-grams into a fixed-dimension
// vector plus a whole-text fingerprint so distinct texts do not collide.
class MockBackend final : public TextBackend {
public:
    explicit MockBackend(MockBackendOptions options);

    std::string complete(const GenerationRequest& request) override;
    EmbeddingVector embed(const std::string& text) override;
    const char* kind() const override { return "mock"; }

    static std::vector<MockRule> load_rules(const std::string& path);

private:
    MockBackendOptions options_;
};

struct RemoteBackendOptions {
    std::string base_url; // e.g. "http://127.0.0.1:8089"
    std::string api_key;
    std::string model;
    std::string embed_model;
    std::string completions_path = "/v1/chat/completions";
    std::string embeddings_path = "/v1/embeddings";
    int retry_max = 2;       // retries after the first attempt
    int backoff_ms = 250;    // doubled per retry
    int timeout_s = 60;
};

class RemoteBackend final : public TextBackend {
public:
    explicit RemoteBackend(RemoteBackendOptions options);

    std::string complete(const GenerationRequest& request) override;
    EmbeddingVector embed(const std::string& text) override;
    const char* kind() const override { return "remote"; }

private:
    std::string post_json(const std::string& path, const std::string& body);
    RemoteBackendOptions options_;
};

struct GatewayOptions {
    std::size_t max_prompt_tokens = 8000; // approximated as chars/4
    int inflight_limit = 4;
};

// Uniform entry point used by the pipeline and the judge harness. Guards
// the prompt budget before any backend call and bounds concurrent calls.
class ModelGateway {
public:
    ModelGateway(std::unique_ptr<TextBackend> backend, GatewayOptions options);

    std::string complete(const GenerationRequest& request);
    EmbeddingVector embed(const std::string& text);

    std::size_t max_prompt_tokens() const { return options_.max_prompt_tokens; }
    const char* backend_kind() const { return backend_->kind(); }

    struct Slot; // runtime-sized semaphore, defined in the .cpp

private:
    std::unique_ptr<TextBackend> backend_;
    GatewayOptions options_;
    std::shared_ptr<void> limiter_;
};

} // namespace ctirag
