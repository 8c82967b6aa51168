#include <benchmark/benchmark.h>

#include <vector>

#include "cllac/kernels.hpp"
#include "cllac/model.hpp"
#include "cllac/risks.hpp"
#include "cllac/rng.hpp"

using namespace cllac;

namespace {

Matrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  CounterRng rng(seed, "bench");
  Matrix x(n, d);
  for (auto& v : x.data()) v = rng.uniform(-1.0, 1.0);
  return x;
}

model::OvrModel bench_model(std::size_t d) {
  return model::init_model(model::Arch::mlp({128}), 3, d, 11);
}

kernels::ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(1) ? kernels::ExecPolicy::omp() : kernels::ExecPolicy::serial();
}

void BM_WeightedSum(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_rows(n, 1, 1);
  const auto w = random_rows(n, 1, 2);
  const auto policy = policy_of(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::weighted_sum(x.data(), w.data(), policy));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreRows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = bench_model(64);
  const auto x = random_rows(n, 64, 3);
  Matrix out(n, m.outputs());
  const auto policy = policy_of(state);
  for (auto _ : state) {
    kernels::score_rows(m, x, out, policy);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BackpropRows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = bench_model(64);
  const auto x = random_rows(n, 64, 4);
  const auto up = random_rows(n, m.outputs(), 5);
  std::vector<double> grad(m.params().size());
  const auto policy = policy_of(state);
  for (auto _ : state) {
    kernels::backprop_rows(m, x, up, 1.0 / static_cast<double>(n), grad, policy);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EmpRiskAndGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = bench_model(64);
  dists::ComplementaryDataset cl{random_rows(n, 64, 6), std::vector<int>(n), 3};
  for (std::size_t i = 0; i < n; ++i) cl.ybar[i] = static_cast<int>(i % 3);
  dists::UnlabeledDataset u{random_rows(n, 64, 7)};
  risks::RiskData data;
  data.cl = &cl;
  data.u = &u;
  const risks::RiskContext ctx{3, 0.75, {losses::LossKind::square, 1.0}};
  std::vector<double> grad(m.params().size());
  const auto policy = policy_of(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        risks::emp_risk_and_grad(risks::RiskForm::cllac_compact, m, data, ctx, grad, policy));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}

// Second argument: 0 serial reference, 1 OpenMP.
#define CLLAC_BENCH(fn, lo, hi) \
  BENCHMARK(fn)->ArgsProduct({benchmark::CreateRange(lo, hi, 8), {0, 1}})->UseRealTime()

CLLAC_BENCH(BM_WeightedSum, 1 << 10, 1 << 20);
CLLAC_BENCH(BM_ScoreRows, 64, 4096);
CLLAC_BENCH(BM_BackpropRows, 64, 4096);
CLLAC_BENCH(BM_EmpRiskAndGrad, 64, 4096);

}  // namespace

BENCHMARK_MAIN();
