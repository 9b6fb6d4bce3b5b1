#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tfgsmooth/dataset.hpp"
#include "tfgsmooth/experiment.hpp"
#include "tfgsmooth/imu_dynamics.hpp"
#include "tfgsmooth/smoother.hpp"
#include "tfgsmooth/tfg_group.hpp"

using namespace tfgsmooth;

namespace {

Tangent random_tangent(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Tangent xi;
  for (auto& v : xi) v = n(rng);
  return xi;
}

std::vector<ImuSample> segment(std::size_t n) {
  std::vector<ImuSample> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    s[k].t = 0.01 * static_cast<double>(k);
    s[k].omega = Vec3(0.01, -0.02, 0.1);
    s[k].accel = Vec3(0.3, 0.1, 9.81);
  }
  return s;
}

void BM_TfgExp(benchmark::State& st) {
  std::mt19937_64 rng(1);
  const Tangent xi = random_tangent(rng);
  for (auto _ : st) benchmark::DoNotOptimize(tfg::exp(xi));
}
BENCHMARK(BM_TfgExp);

void BM_TfgLog(benchmark::State& st) {
  std::mt19937_64 rng(2);
  const TfgElement x = tfg::exp(random_tangent(rng));
  for (auto _ : st) benchmark::DoNotOptimize(tfg::log(x));
}
BENCHMARK(BM_TfgLog);

void BM_LeftJacobian(benchmark::State& st) {
  std::mt19937_64 rng(3);
  const Tangent xi = random_tangent(rng);
  for (auto _ : st) benchmark::DoNotOptimize(tfg::left_jacobian(xi));
}
BENCHMARK(BM_LeftJacobian);

void BM_Compound(benchmark::State& st) {
  const auto kind = static_cast<Parametrization>(st.range(0));
  const auto samples = segment(100);
  const ProcessNoise noise;
  const TfgElement x0 = TfgElement{};
  for (auto _ : st) {
    benchmark::DoNotOptimize(compound(kind, x0, samples, 1.0, kDefaultGravity, noise));
  }
  st.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_Compound)->DenseRange(0, 2);

// One full 60 s Monte Carlo run at window 5, the unit of the consistency
// experiment.
void BM_MonteCarloRun(benchmark::State& st) {
  ExperimentConfig cfg;
  const auto kind = static_cast<Parametrization>(st.range(0));
  const Dataset data = load_source(cfg, 7);
  for (auto _ : st) benchmark::DoNotOptimize(run_cell(cfg, data, kind, 5, 7));
  st.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_MonteCarloRun)->DenseRange(0, 2)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
