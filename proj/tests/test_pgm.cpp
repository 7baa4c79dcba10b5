#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gcwp/pgm.hpp"
#include "oracles.hpp"

using namespace gcwp;

namespace {

TransferModel plus_minus_model(int state_depth = 1) {
  auto alpha = make_finite_alphabet({"+", "-"}, {0.5, 0.5});
  auto a = TransitionFn::ones(2);
  check_mixing(a);
  auto psi = make_plus_minus_potential(alpha, a);
  return TransferModel(std::move(alpha), std::move(a), std::move(psi), state_depth);
}

TransferModel golden_mean_model(int state_depth = 1) {
  auto alpha = make_finite_alphabet({"0", "1"}, {0.5, 0.5});
  auto a = TransitionFn::from_rows({{0, 1}, {1, 1}});
  check_mixing(a);
  auto psi = make_indicator_potential(alpha, a);
  return TransferModel(std::move(alpha), std::move(a), std::move(psi), state_depth);
}

TransferModel table_model(int m, int q, const std::vector<double>& weights,
                          const Eigen::MatrixXd& values, int state_depth = 1) {
  std::vector<std::string> labels;
  for (int i = 0; i < m; ++i) labels.push_back(std::to_string(i));
  auto alpha = make_finite_alphabet(labels, weights);
  auto a = TransitionFn::ones(m);
  check_mixing(a);
  auto psi = make_table_potential(alpha, a, 1, values);
  return TransferModel(std::move(alpha), std::move(a), std::move(psi), state_depth);
}

}  // namespace

TEST_CASE("hamiltonian of a short spin word") {
  auto model = plus_minus_model();
  std::vector<int> word = {0, 0, 1, 0};  // +, +, -, +  => S = 2
  CHECK(pgm_hamiltonian(model, word, 4) == doctest::Approx(-0.5).epsilon(1e-15));
  std::vector<int> balanced = {0, 1, 0, 1};
  CHECK(pgm_hamiltonian(model, balanced, 4) == doctest::Approx(0.0));
}

TEST_CASE("hamiltonian wraps depth-2 potentials periodically") {
  // psi(ab) = 1 iff ab == (0,1); on the cyclic word 011 the pairs are
  // 01, 11, 10 -> S = 1.
  Eigen::MatrixXd vals = Eigen::MatrixXd::Zero(4, 1);
  vals(0 + 2 * 1, 0) = 1.0;  // word (0,1)
  auto alpha = make_finite_alphabet({"0", "1"}, {0.5, 0.5});
  auto a = TransitionFn::ones(2);
  check_mixing(a);
  auto psi = make_table_potential(alpha, a, 2, vals);
  TransferModel model(alpha, a, psi, 2);
  std::vector<int> word = {0, 1, 1};
  CHECK(pgm_hamiltonian(model, word, 3) == doctest::Approx(-(1.0 / 6.0)).epsilon(1e-15));
}

TEST_CASE("exact finite-n expectation matches brute force on the full shift") {
  auto model = plus_minus_model(2);
  auto f = make_indicator_observable({0, 0});

  oracle::BruteForcePgm bf;
  bf.m = 2;
  bf.q = 1;
  bf.weights = {0.5, 0.5};
  bf.psi = {1.0, -1.0};
  bf.beta = 1.0;
  bf.n = 4;
  auto [bval, blogz] = bf.run([](const std::vector<int>& w) {
    return w[0] == 0 && w[1] == 0 ? 1.0 : 0.0;
  });

  auto est = exact_pgm(model, 4, 1.0, f);
  CHECK(est.value == doctest::Approx(bval).epsilon(1e-14));
  CHECK(est.logz == doctest::Approx(blogz).epsilon(1e-14));
  CHECK(est.method == "exact");

  // the five-term binomial reduction of the same partition function
  double z5 = 0;
  for (int k = 0; k <= 4; ++k) {
    double c = std::tgamma(5.0) / (std::tgamma(k + 1.0) * std::tgamma(5.0 - k));
    z5 += c / 16.0 * std::exp((2.0 * k - 4) * (2.0 * k - 4) / 8.0);
  }
  CHECK(est.logz == doctest::Approx(std::log(z5)).epsilon(1e-14));
}

TEST_CASE("exact expectation by symmetry: balanced observables at any beta") {
  auto model = plus_minus_model();
  auto f = make_indicator_observable({0});
  auto est = exact_pgm(model, 64, 2.0, f);
  CHECK(est.value == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("exact method handles constrained transitions by dynamic programming") {
  auto model = golden_mean_model(2);
  auto f = make_indicator_observable({1, 0});

  oracle::BruteForcePgm bf;
  bf.m = 2;
  bf.q = 2;
  bf.weights = {0.5, 0.5};
  bf.psi = {1, 0, 0, 1};  // indicators
  bf.allow = {0, 1, 1, 1};
  bf.beta = 0.8;
  bf.n = 12;
  auto [bval, blogz] = bf.run([](const std::vector<int>& w) {
    return w[0] == 1 && w[1] == 0 ? 1.0 : 0.0;
  });

  auto est = exact_pgm(model, 12, 0.8, f);
  CHECK(est.value == doctest::Approx(bval).epsilon(1e-12));
  CHECK(est.logz == doctest::Approx(blogz).epsilon(1e-12));
}

TEST_CASE("free measure recovered at beta = 0") {
  auto model = plus_minus_model();
  auto f = make_indicator_observable({0});
  auto est = exact_pgm(model, 32, 0.0, f);
  CHECK(est.value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(est.logz == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("partition function is at least one and increases with beta") {
  auto model = plus_minus_model();
  auto f = make_indicator_observable({0});
  double prev = -1e-15;
  for (double beta : {0.0, 0.5, 1.0, 2.0}) {
    auto est = exact_pgm(model, 32, beta, f);
    CHECK(est.logz >= -1e-14);
    CHECK(est.logz >= prev);
    prev = est.logz;
  }
}

TEST_CASE("exact method guards: potential depth and DP caps") {
  Eigen::MatrixXd vals = Eigen::MatrixXd::Zero(4, 1);
  vals(3, 0) = 1.0;
  auto alpha = make_finite_alphabet({"0", "1"}, {0.5, 0.5});
  auto a = TransitionFn::ones(2);
  check_mixing(a);
  auto psi = make_table_potential(alpha, a, 2, vals);
  TransferModel deep(alpha, a, psi, 2);
  auto f = make_indicator_observable({0});
  CHECK_THROWS_AS(exact_pgm(deep, 8, 1.0, f), DepthUnsupportedError);

  auto gm = golden_mean_model();
  CHECK_THROWS_AS(exact_pgm(gm, 4000, 1.0, f, /*cap=*/1000), CapExceededError);
}

TEST_CASE("importance sampling agrees with the exact method on random models") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uw(0.2, 1.0), uv(-1.0, 1.0), ub(0.1, 1.0);
  std::uniform_int_distribution<int> um(2, 3), uq(1, 2), un(8, 60);
  int outside = 0;
  for (int trial = 0; trial < 20; ++trial) {
    int m = um(rng), q = uq(rng);
    long n = un(rng);
    double beta = ub(rng);
    std::vector<double> w(m);
    for (auto& x : w) x = uw(rng);
    Eigen::MatrixXd vals(m, q);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < q; ++j) vals(i, j) = uv(rng);
    auto model = table_model(m, q, w, vals);
    auto f = make_indicator_observable({0});
    auto ex = exact_pgm(model, n, beta, f);
    McOptions mo;
    mo.samples = 20000;
    mo.seed = 777 + trial;
    auto mc = mc_pgm(model, n, beta, f, mo);
    CHECK(mc.ess >= 100);
    if (std::abs(mc.value - ex.value) > 3 * mc.stderr_) ++outside;
  }
  // 3-sigma misses should be rare; none with this seeding
  CHECK(outside == 0);
}

TEST_CASE("importance sampling is deterministic given the seed and thread count") {
  auto model = plus_minus_model();
  auto f = make_indicator_observable({0});
  McOptions mo;
  mo.samples = 30000;
  mo.seed = 99;
  mo.threads = 1;
  auto a = mc_pgm(model, 24, 0.7, f, mo);
  auto b = mc_pgm(model, 24, 0.7, f, mo);
  CHECK(a.value == b.value);
  CHECK(a.stderr_ == b.stderr_);
  mo.threads = 4;
  auto c = mc_pgm(model, 24, 0.7, f, mo);
  CHECK(a.value == c.value);
  CHECK(a.ess == c.ess);
}

TEST_CASE("importance sampling refuses collapsed weights and constrained shifts") {
  auto model = plus_minus_model();
  auto f = make_indicator_observable({0});
  McOptions mo;
  mo.samples = 2000;
  mo.seed = 5;
  CHECK_THROWS_AS(mc_pgm(model, 400, 6.0, f, mo), LowEssError);

  auto gm = golden_mean_model();
  CHECK_THROWS_AS(mc_pgm(gm, 16, 0.5, f, mo), UnsupportedError);
}

TEST_CASE("Gauss-quadrature check of the Gaussian linearization identity") {
  Eigen::VectorXd xi1(1);
  xi1 << 0.5;
  CHECK(gaussian_identity_check(xi1, 64) < 1e-10);

  Eigen::VectorXd xi2(2);
  xi2 << 1.2, -1.4;
  CHECK(gaussian_identity_check(xi2, 64) < 1e-10);

  Eigen::VectorXd xi3(3);
  xi3 << 0.5, 0.5, -0.5;
  CHECK(gaussian_identity_check(xi3, 48) < 1e-8);

  // more nodes cannot hurt until machine precision
  double e8 = gaussian_identity_check(xi2, 8);
  double e64 = gaussian_identity_check(xi2, 64);
  CHECK(e64 < e8);

  Eigen::VectorXd xi4(4);
  xi4.setConstant(0.1);
  CHECK_THROWS_AS(gaussian_identity_check(xi4, 16), ConfigError);
  CHECK_THROWS_AS(gaussian_identity_check(xi2, 200), ConfigError);
  Eigen::VectorXd far(1);
  far << 9.0;
  CHECK_THROWS_AS(gaussian_identity_check(far, 64), ConfigError);
}

TEST_CASE("limit mixture of the symmetric two-phase model is half/half") {
  auto model = plus_minus_model(2);
  PressureMap p(model);
  QuadraticPressure q(p);
  auto ms = q.find_maxima(2.0);
  auto mix = limit_mixture(q, 2.0, ms);
  REQUIRE(mix.components.size() == 2);
  CHECK(mix.components[0].weight == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(mix.components[1].weight == doctest::Approx(0.5).epsilon(1e-10));
  double wsum = mix.components[0].weight + mix.components[1].weight;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));

  // mixture expectation of 1{++} is the half sum of squared marginals
  double m = oracle::tanh_fixed_point(2.0);
  double pp = std::exp(2 * m) / (2 * std::cosh(2 * m));
  double pm = 1 - pp;
  auto f = make_indicator_observable({0, 0});
  double pred = mixture_expectation(mix, model, f);
  CHECK(pred == doctest::Approx(0.5 * (pp * pp + pm * pm)).epsilon(1e-9));
}

TEST_CASE("limit mixture rejects degenerate maxima in dimension above one") {
  auto alpha = make_circle_alphabet(32);
  auto a = TransitionFn::ones(32);
  check_mixing(a);
  auto psi = make_xy_potential(alpha, a);
  TransferModel model(alpha, a, psi, 1);
  PressureMap p(model);
  QuadraticPressure q(p);
  FindMaximaOptions opts;
  opts.grid_step = 0.25;
  auto ms = q.find_maxima(4.0, opts);
  REQUIRE(!ms.maxima.empty());
  bool any_degenerate = false;
  for (const auto& mx : ms.maxima) any_degenerate = any_degenerate || mx.degenerate;
  CHECK(any_degenerate);
  CHECK_THROWS_AS(limit_mixture(q, 4.0, ms), DegenerateMaximumError);
}

TEST_CASE("finite-n expectations converge to the mixture prediction") {
  auto model = plus_minus_model(2);
  PressureMap p(model);
  QuadraticPressure q(p);
  auto f = make_indicator_observable({0, 0});
  auto rep = convergence_test(q, model, 2.0, f, {100, 400, 1600}, PgmMethod::exact);
  CHECK(rep.pass);
  CHECK(rep.final_gap < 0.02);
  double m = oracle::tanh_fixed_point(2.0);
  double pp = std::exp(2 * m) / (2 * std::cosh(2 * m));
  double pm = 1 - pp;
  CHECK(rep.prediction == doctest::Approx(0.5 * (pp * pp + pm * pm)).epsilon(1e-8));
  for (size_t i = 0; i + 1 < rep.gaps.size(); ++i) CHECK(rep.gaps[i + 1] <= rep.gaps[i] + 1e-12);
}

TEST_CASE("convergence holds at a flat (critical) maximum too") {
  auto model = plus_minus_model(2);
  PressureMap p(model);
  QuadraticPressure q(p);
  auto f = make_indicator_observable({0, 0});
  auto ms = q.find_maxima(1.0);
  auto mix = limit_mixture(q, 1.0, ms);
  REQUIRE(mix.components.size() == 1);
  CHECK(mix.components[0].flatness_order == 4);
  double pred = mixture_expectation(mix, model, f);
  CHECK(pred == doctest::Approx(0.25).epsilon(1e-9));
  auto est = exact_pgm(model, 3000, 1.0, f);
  CHECK(std::abs(est.value - pred) < 0.05);  // slow n^{-1/2} regime at criticality
}

TEST_CASE("three-symbol mean-field model: depth-2 convergence above the transition") {
  std::vector<std::string> labels = {"1", "2", "3"};
  auto alpha = make_finite_alphabet(labels, {1, 1, 1});
  auto a = TransitionFn::ones(3);
  check_mixing(a);
  auto psi = make_indicator_potential(alpha, a);
  TransferModel model(alpha, a, psi, 2);
  PressureMap p(model);
  QuadraticPressure q(p);

  auto f = make_indicator_observable({0, 0});
  auto rep = convergence_test(q, model, 3.2, f, {100, 400, 1600}, PgmMethod::exact);
  CHECK(rep.pass);
  CHECK(rep.final_gap < 0.02);

  // depth-1 marginal of symbol 1 is exactly 1/3 by permutation symmetry
  auto f1 = make_indicator_observable({0});
  auto est = exact_pgm(model, 500, 3.2, f1);
  CHECK(est.value == doctest::Approx(1.0 / 3).epsilon(1e-12));
  auto ms = q.find_maxima(3.2);
  CHECK(ms.maxima.size() == 3);
  auto mix = limit_mixture(q, 3.2, ms);
  CHECK(mixture_expectation(mix, model, f1) == doctest::Approx(1.0 / 3).epsilon(1e-9));
}
