#include "ctirag/corpus.hpp"
#include "ctirag/ioc.hpp"

#include <benchmark/benchmark.h>

using namespace ctirag;

namespace {

std::string sample_text(std::size_t repeats) {
    std::string base;
    for (const AttackScenario& s : load_scenarios())
        base += synthesize_alert(s, 11).raw_text;
    base += "seen hxxp://drop[.]zone[.]cc/x.bin from 203.0.113.9 hash "
            "44d88612fea8a8f36de82e1278abb02f cross-ref evil.com 2001:db8::1\n";
    std::string text;
    for (std::size_t i = 0; i < repeats; ++i) text += base;
    return text;
}

} // namespace

static void ExtractIocs(benchmark::State& state) {
    std::string text = refang(sample_text(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) {
        auto iocs = extract_iocs_from_text(text);
        benchmark::DoNotOptimize(iocs);
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(ExtractIocs)->Arg(1)->Arg(8)->Arg(64);

static void Refang(benchmark::State& state) {
    std::string text = sample_text(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto out = refang(text);
        benchmark::DoNotOptimize(out);
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(Refang)->Arg(1)->Arg(64);
