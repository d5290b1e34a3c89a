// OpenMP kernels against their serial references. Thread count follows
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "spvc/covariance.hpp"
#include "spvc/nngp.hpp"
#include "spvc/predict.hpp"

namespace {

spvc::Coords points(std::size_t n) {
  std::mt19937_64 eng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  spvc::Coords out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({u(eng), u(eng)});
  return out;
}

const spvc::MaternParams kTheta{2.0, 0.3, 1.2};  // general nu: Bessel path

void BM_cov_matrix(benchmark::State& st) {
  const auto s = points(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(spvc::cov_matrix(s, kTheta));
}
void BM_cov_matrix_serial(benchmark::State& st) {
  const auto s = points(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(spvc::reference::cov_matrix(s, kTheta));
}

void BM_neighbors(benchmark::State& st) {
  const auto s = points(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(spvc::build_neighbors(s, 10));
}
void BM_neighbors_serial(benchmark::State& st) {
  const auto s = points(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(spvc::reference::build_neighbors(s, 10));
}

void BM_nngp_factors(benchmark::State& st) {
  const auto s = points(static_cast<std::size_t>(st.range(0)));
  const spvc::NNGPGeometry geo(std::make_shared<const spvc::NeighborGraph>(spvc::make_neighbor_graph(s, 10)), s);
  for (auto _ : st) benchmark::DoNotOptimize(geo.factors(kTheta));
}
void BM_nngp_factors_serial(benchmark::State& st) {
  const auto s = points(static_cast<std::size_t>(st.range(0)));
  const spvc::NNGPGeometry geo(std::make_shared<const spvc::NeighborGraph>(spvc::make_neighbor_graph(s, 10)), s);
  for (auto _ : st) benchmark::DoNotOptimize(spvc::reference::nngp_factors(geo, kTheta));
}

void BM_smooth(benchmark::State& st) {
  const auto s = points(static_cast<std::size_t>(st.range(0)));
  const std::vector<double> p(s.size(), 0.3);
  for (auto _ : st) benchmark::DoNotOptimize(spvc::smooth_probs(p, s, 0.08));
}
void BM_smooth_serial(benchmark::State& st) {
  const auto s = points(static_cast<std::size_t>(st.range(0)));
  const std::vector<double> p(s.size(), 0.3);
  for (auto _ : st) benchmark::DoNotOptimize(spvc::reference::smooth_probs(p, s, 0.08));
}

}  // namespace

BENCHMARK(BM_cov_matrix)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cov_matrix_serial)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_neighbors)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_neighbors_serial)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_nngp_factors)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_nngp_factors_serial)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_smooth)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_smooth_serial)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
