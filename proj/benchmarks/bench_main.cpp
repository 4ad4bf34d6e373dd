#include <benchmark/benchmark.h>

#include <filesystem>
#include <numeric>
#include <random>

#include "evoae/dct.hpp"
#include "evoae/encoding.hpp"
#include "evoae/image.hpp"
#include "evoae/mlp.hpp"
#include "evoae/moead.hpp"
#include "evoae/scenarios.hpp"

using namespace evoae;

namespace {

const std::filesystem::path kData = EVOAE_DATA_DIR;

std::vector<double> random_values(std::size_t n, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

void BM_DctBlockRoundTrip(benchmark::State& state) {
    const BlockDct dct(8);
    const auto block = random_values(64, -128, 128, 1);
    std::vector<double> coeffs(64), back(64);
    for (auto _ : state) {
        dct.forward(block, coeffs);
        dct.inverse(coeffs, back);
        benchmark::DoNotOptimize(back.data());
    }
}
BENCHMARK(BM_DctBlockRoundTrip);

void BM_FixtureClassify(benchmark::State& state) {
    auto oracle = load_builtin(kData / "fixture" / "fixture.aemlp", false);
    const Image img = read_image(kData / "fixture" / "frog.ppm");
    for (auto _ : state) benchmark::DoNotOptimize(oracle->classify(img));
}
BENCHMARK(BM_FixtureClassify);

void BM_DirectDecode(benchmark::State& state) {
    const DirectLayout layout(224, 224, 3, static_cast<int>(state.range(0)));
    const auto genes = random_values(layout.genotype_length(), -30, 30, 2);
    for (auto _ : state) benchmark::DoNotOptimize(layout.decode(genes));
}
BENCHMARK(BM_DirectDecode)->Arg(1)->Arg(3);

void BM_DctDecode(benchmark::State& state) {
    const DctLayout layout(224, 224, 3, static_cast<int>(state.range(0)));
    Image img(224, 224, 3, 120.0);
    auto genes = random_values(layout.genotype_length(), 0, 1, 3);
    for (std::size_t s = 0; s < layout.selector_count(); ++s) genes[s] *= layout.patterns() + 1;
    for (auto _ : state) benchmark::DoNotOptimize(layout.decode(genes, img));
}
BENCHMARK(BM_DctDecode)->Arg(1)->Arg(10);

void BM_Tchebycheff(benchmark::State& state) {
    const std::vector<double> f = {0.3, 12.0, 0.1}, z = {0.0, 1.0, 0.0};
    const WeightVector w{{0.2, 0.3, 0.5}};
    for (auto _ : state) benchmark::DoNotOptimize(tchebycheff(f, w, z));
}
BENCHMARK(BM_Tchebycheff);

class Mean final : public Problem {
public:
    std::size_t objective_count() const override { return 2; }
    const Bounds& bounds() const override { return b_; }
    Evaluation evaluate(std::span<const double> x) const override {
        const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        return {{m, 1.0 - m}, 0.0};
    }

private:
    Bounds b_ = Bounds::uniform(768, -1.0, 1.0);
};

void BM_GenerationStep(benchmark::State& state) {
    Mean problem;
    RunConfig cfg;
    cfg.population_size = static_cast<std::size_t>(state.range(0));
    cfg.generations = 1u << 30;
    Moead engine(problem, cfg);
    engine.initialize();
    for (auto _ : state) engine.step();
}
BENCHMARK(BM_GenerationStep)->Arg(100)->Arg(500);

} // namespace
BENCHMARK_MAIN();
