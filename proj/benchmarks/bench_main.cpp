#include <benchmark/benchmark.h>

#include "rctm/chain.hpp"
#include "rctm/distrib.hpp"
#include "rctm/gibbs.hpp"
#include "rctm/proportions.hpp"
#include "rctm/synthgen.hpp"

namespace {

void BM_Gamma(benchmark::State& state) {
  rctm::RngStream rng(1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rctm::gamma(2.0, 1.0, rng));
}
BENCHMARK(BM_Gamma);

void BM_Crt(benchmark::State& state) {
  rctm::RngStream rng(1, 2);
  const std::uint64_t m = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rctm::crt(m, 1.0, rng));
}
BENCHMARK(BM_Crt)->Arg(10)->Arg(100)->Arg(1000);

void BM_Dirichlet(benchmark::State& state) {
  rctm::RngStream rng(1, 3);
  std::vector<double> conc(static_cast<std::size_t>(state.range(0)), 0.5);
  std::vector<double> out(conc.size());
  for (auto _ : state) {
    rctm::dirichlet_into(conc, rng, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Dirichlet)->Arg(100)->Arg(1000);

rctm::SynthResult desk_corpus() {
  rctm::SynthConfig cfg;
  cfg.docs_per_slice = 50;
  cfg.vocab = 100;
  cfg.topics = 5;
  cfg.slices = 3;
  cfg.doc_length = 50;
  cfg.seed = 9;
  return rctm::generate(cfg);
}

void BM_GibbsIteration(benchmark::State& state) {
  const auto synth = desk_corpus();
  rctm::HyperParams hyper;
  hyper.k_init = 10;
  rctm::ModelState model = rctm::init_model(synth.corpus, hyper, 3);
  for (auto _ : state) {
    for (std::uint32_t t = 0; t < model.T; ++t) rctm::sweep_slice(model, t, false);
    const auto cache = rctm::backward_filter(model);
    rctm::forward_sample(model, cache);
    benchmark::DoNotOptimize(model.c0);
  }
}
BENCHMARK(BM_GibbsIteration);

void BM_BackwardFilter(benchmark::State& state) {
  const auto synth = desk_corpus();
  rctm::HyperParams hyper;
  hyper.k_init = 10;
  rctm::ModelState model = rctm::init_model(synth.corpus, hyper, 3);
  for (std::uint32_t t = 0; t < model.T; ++t) rctm::sweep_slice(model, t, false);
  for (auto _ : state) {
    auto cache = rctm::backward_filter(model);
    benchmark::DoNotOptimize(cache.z.data());
  }
}
BENCHMARK(BM_BackwardFilter);

}  // namespace

BENCHMARK_MAIN();
