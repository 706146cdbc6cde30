#include "ctirag/gateway.hpp"
#include "ctirag/knowledge_base.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace ctirag;

namespace {

KnowledgeBase seeded_store(std::size_t chunks, std::size_t dim) {
    MockBackendOptions mo;
    mo.dim = dim;
    auto backend = std::make_shared<MockBackend>(mo);
    KbOptions options;
    options.dim = dim;
    options.max_chunk_chars = 4096;
    options.overlap_chars = 0;
    KnowledgeBase kb([backend](const std::string& t) { return backend->embed(t); }, options);
    const char* words[] = {"exfil", "beacon", "dropper", "lateral", "scan", "inject"};
    for (std::size_t i = 0; i < chunks; ++i) {
        CtiDocument d;
        d.doc_id = "d" + std::to_string(i);
        d.body = std::string(words[i % 6]) + " report " + std::to_string(i) + " " + words[(i * 7) % 6];
        kb.ingest(d);
    }
    return kb;
}

} // namespace

static void SearchTopK(benchmark::State& state) {
    auto kb = seeded_store(static_cast<std::size_t>(state.range(0)), 256);
    for (auto _ : state) {
        auto results = kb.search("beacon exfil over c2", 4);
        benchmark::DoNotOptimize(results);
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(SearchTopK)->Arg(100)->Arg(1000)->Arg(5000);

static void MockEmbed(benchmark::State& state) {
    MockBackendOptions mo;
    mo.dim = static_cast<std::size_t>(state.range(0));
    MockBackend backend(mo);
    std::string text = "suspicious process injection into long lived browser process on host";
    for (auto _ : state) {
        auto v = backend.embed(text);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(MockEmbed)->Arg(64)->Arg(256)->Arg(1024);
