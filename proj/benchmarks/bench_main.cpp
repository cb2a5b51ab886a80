#include <benchmark/benchmark.h>

#include "rishp/dataio.hpp"
#include "rishp/dlmdc.hpp"
#include "rishp/optim.hpp"

namespace {

using namespace rishp;

struct Fixture {
  SystemConfig cfg;
  ChannelMatrix ch;
  FeederGains g;

  explicit Fixture(std::size_t n) : cfg(SystemConfig::for_users(n, 2)) {
    cfg.rng_seed = 3;
    ch = generate_sv_channel(cfg, SVChannelConfig{});
    Rng rng(4);
    g = feeder_gains(cfg, FeederMode::kAllOnes, rng);
  }
};

void BM_RateEvaluator(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  RateEvaluator eval(f.ch, f.g, f.cfg);
  Rng rng(5);
  const AnalogBeamformer phi = random_phi(rng, f.cfg.N);
  for (auto _ : state) benchmark::DoNotOptimize(eval(phi));
}
BENCHMARK(BM_RateEvaluator)->Arg(16)->Arg(64)->Arg(128);

void BM_ZfSumRate(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  Rng rng(5);
  const AnalogBeamformer phi = random_phi(rng, f.cfg.N);
  for (auto _ : state) benchmark::DoNotOptimize(zf_sum_rate(f.ch, phi, f.g, f.cfg));
}
BENCHMARK(BM_ZfSumRate)->Arg(16)->Arg(64);

void BM_Ceo(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  const CeoParams params;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Rng rng(seed++);
    benchmark::DoNotOptimize(ceo_optimize(f.ch, f.g, f.cfg, params, rng).rate);
  }
}
BENCHMARK(BM_Ceo)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Exhaustive(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(exhaustive_search(f.ch, f.g, f.cfg).rate);
}
BENCHMARK(BM_Exhaustive)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_BankInference(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  Rng rng(6);
  ClassifierBank bank;
  std::vector<std::size_t> sizes{f.cfg.K * f.cfg.N};
  sizes.insert(sizes.end(), arch::kDesk.begin(), arch::kDesk.end());
  sizes.push_back(1);
  for (std::size_t n = 0; n < f.cfg.N; ++n) bank.classifiers.push_back(MlpClassifier::truncated_normal(sizes, rng));
  for (auto _ : state) benchmark::DoNotOptimize(predict_phi(bank, f.ch));
}
BENCHMARK(BM_BankInference)->Arg(16)->Arg(64);

void BM_Backward(benchmark::State& state) {
  Rng rng(7);
  const MlpClassifier clf = MlpClassifier::truncated_normal({32, 64, 32, 1}, rng);
  std::vector<double> x(32);
  for (double& v : x) v = rng.uniform(-3.0, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(backward(clf, x, 1.0));
}
BENCHMARK(BM_Backward);

void BM_GenerateSvChannel(benchmark::State& state) {
  SystemConfig cfg = SystemConfig::for_users(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    ++cfg.rng_seed;
    benchmark::DoNotOptimize(generate_sv_channel(cfg, SVChannelConfig{}));
  }
}
BENCHMARK(BM_GenerateSvChannel)->Arg(16)->Arg(128);

void BM_GenerateGppChannel(benchmark::State& state) {
  SystemConfig cfg = SystemConfig::for_users(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    ++cfg.rng_seed;
    benchmark::DoNotOptimize(generate_gpp_channel(cfg, GppChannelConfig{}));
  }
}
BENCHMARK(BM_GenerateGppChannel)->Arg(16)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
