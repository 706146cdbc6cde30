#include "ctirag/chunk.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace ctirag;

static void ChunkText(benchmark::State& state) {
    std::mt19937 rng(1);
    std::string body;
    body.reserve(static_cast<std::size_t>(state.range(0)));
    for (int64_t i = 0; i < state.range(0); ++i)
        body.push_back(rng() % 9 == 0 ? ' ' : static_cast<char>('a' + rng() % 26));
    for (auto _ : state) {
        auto chunks = chunk_text("doc", body, 1600, 200);
        benchmark::DoNotOptimize(chunks);
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(ChunkText)->Range(1 << 12, 1 << 20);
