// Serial reference vs OpenMP kernel for each parallel hot loop.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "doebench/designgen.hpp"
#include "doebench/forest.hpp"
#include "doebench/funcs.hpp"
#include "doebench/permrank.hpp"
#include "doebench/rng.hpp"
#include "doebench/sampling.hpp"

using namespace doebench;

namespace {

void BM_Standardization_Serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial::estimate_standardization(FunctionId::Borehole, 4, 20000, 1));
}
void BM_Standardization_Kernel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(estimate_standardization(FunctionId::Borehole, 4, 20000, 1));
}

struct FedorovInputs {
  Eigen::MatrixXd f, a;
  Eigen::VectorXd var, a_old;
  double var_old;
};
const FedorovInputs& fedorov_inputs() {
  static const FedorovInputs in = [] {
    FedorovInputs r;
    r.f = model_matrix(six_level_full_factorial());
    const Eigen::MatrixXd design = model_matrix(generate(DesignId::D_opt, 1).points);
    r.a = (design.transpose() * design).inverse();
    r.var = serial::prediction_variance(r.f, r.a);
    r.a_old = r.a * design.row(0).transpose();
    r.var_old = design.row(0).dot(r.a_old);
    return r;
  }();
  return in;
}
void BM_PredictionVariance_Serial(benchmark::State& st) {
  const auto& in = fedorov_inputs();
  for (auto _ : st) benchmark::DoNotOptimize(serial::prediction_variance(in.f, in.a));
}
void BM_PredictionVariance_Kernel(benchmark::State& st) {
  const auto& in = fedorov_inputs();
  for (auto _ : st) benchmark::DoNotOptimize(kernels::prediction_variance(in.f, in.a));
}
void BM_BestSwap_Serial(benchmark::State& st) {
  const auto& in = fedorov_inputs();
  for (auto _ : st) benchmark::DoNotOptimize(serial::best_swap(in.f, in.var, in.a_old, in.var_old));
}
void BM_BestSwap_Kernel(benchmark::State& st) {
  const auto& in = fedorov_inputs();
  for (auto _ : st) benchmark::DoNotOptimize(kernels::best_swap(in.f, in.var, in.a_old, in.var_old));
}

struct ForestInputs {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};
const ForestInputs& forest_inputs() {
  static const ForestInputs in = [] {
    Rng rng(3);
    ForestInputs r{random_lhd(52, 6, rng), {}};
    r.y = evaluate_rows(FunctionId::Borehole, r.x);
    return r;
  }();
  return in;
}
void BM_GrowForest_Serial(benchmark::State& st) {
  const auto& in = forest_inputs();
  const ForestParams p{500, 2, 5};
  for (auto _ : st) benchmark::DoNotOptimize(serial::grow_forest(in.x, in.y, p, 7));
}
void BM_GrowForest_Kernel(benchmark::State& st) {
  const auto& in = forest_inputs();
  const ForestParams p{500, 2, 5};
  for (auto _ : st) benchmark::DoNotOptimize(kernels::grow_forest(in.x, in.y, p, 7));
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> perm_inputs() {
  Rng rng(5);
  Eigen::MatrixXd a(10, 12), b(10, 12);
  for (double& v : a.reshaped()) v = standard_normal(rng);
  for (double& v : b.reshaped()) v = standard_normal(rng);
  return {a, b};
}
void BM_PermStats_Serial(benchmark::State& st) {
  const auto [a, b] = perm_inputs();
  const auto scheme = static_cast<PermScheme>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(serial::permutation_statistics(a, b, scheme, kPermutations, 9));
}
void BM_PermStats_Kernel(benchmark::State& st) {
  const auto [a, b] = perm_inputs();
  const auto scheme = static_cast<PermScheme>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::permutation_statistics(a, b, scheme, kPermutations, 9));
}

}  // namespace

BENCHMARK(BM_Standardization_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Standardization_Kernel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictionVariance_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictionVariance_Kernel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BestSwap_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BestSwap_Kernel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GrowForest_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GrowForest_Kernel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PermStats_Serial)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PermStats_Kernel)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
