#include <benchmark/benchmark.h>

#include "gcwp/pgm.hpp"
#include "gcwp/transfer.hpp"

namespace {

using namespace gcwp;

TransferModel circle_model(int m) {
  auto alpha = make_circle_alphabet(m);
  auto a = TransitionFn::ones(m);
  check_mixing(a);
  auto psi = make_xy_potential(alpha, a);
  return TransferModel(std::move(alpha), std::move(a), std::move(psi), 1);
}

TransferModel spin_model() {
  auto alpha = make_finite_alphabet({"+", "-"}, {0.5, 0.5});
  auto a = TransitionFn::ones(2);
  check_mixing(a);
  auto psi = make_plus_minus_potential(alpha, a);
  return TransferModel(std::move(alpha), std::move(a), std::move(psi), 1);
}

void BM_spectral_solve(benchmark::State& state) {
  int m = static_cast<int>(state.range(0));
  TransferModel model = circle_model(m);
  Eigen::VectorXd t(2);
  t << 1.5, -0.5;
  SolveOptions opts;
  for (auto _ : state) {
    auto op = assemble_operator(model, t);
    auto sd = spectral_solve(op, opts);
    benchmark::DoNotOptimize(sd.logr);
  }
  state.SetComplexityN(m);
}
BENCHMARK(BM_spectral_solve)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_exact_pgm(benchmark::State& state) {
  long n = state.range(0);
  TransferModel model = spin_model();
  auto f = make_indicator_observable({0});
  for (auto _ : state) {
    auto est = exact_pgm(model, n, 1.5, f);
    benchmark::DoNotOptimize(est.value);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_exact_pgm)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_mc_pgm(benchmark::State& state) {
  TransferModel model = spin_model();
  auto f = make_indicator_observable({0});
  McOptions mo;
  mo.samples = state.range(0);
  mo.seed = 7;
  for (auto _ : state) {
    auto est = mc_pgm(model, 64, 0.4, f, mo);
    benchmark::DoNotOptimize(est.value);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_mc_pgm)->RangeMultiplier(4)->Range(1024, 65536)->Complexity();

}  // namespace

BENCHMARK_MAIN();
