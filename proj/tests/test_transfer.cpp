#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "gcwp/transfer.hpp"
#include "oracles.hpp"

using namespace gcwp;

namespace {

TransferModel uniform_potts(int q, int state_depth = 1) {
  std::vector<std::string> labels;
  std::vector<double> w;
  for (int i = 0; i < q; ++i) {
    labels.push_back(std::to_string(i + 1));
    w.push_back(1.0);
  }
  auto alpha = make_finite_alphabet(labels, w);
  auto a = TransitionFn::ones(q);
  check_mixing(a);
  auto psi = make_indicator_potential(alpha, a);
  return TransferModel(std::move(alpha), std::move(a), std::move(psi), state_depth);
}

TransferModel golden_mean_model(int state_depth = 1) {
  auto alpha = make_finite_alphabet({"0", "1"}, {0.5, 0.5});
  auto a = TransitionFn::from_rows({{0, 1}, {1, 1}});
  check_mixing(a);
  auto psi = make_indicator_potential(alpha, a);
  return TransferModel(std::move(alpha), std::move(a), std::move(psi), state_depth);
}

TransferModel xy_model(int m, int state_depth = 1) {
  auto alpha = make_circle_alphabet(m);
  auto a = TransitionFn::ones(m);
  check_mixing(a);
  auto psi = make_xy_potential(alpha, a);
  return TransferModel(std::move(alpha), std::move(a), std::move(psi), state_depth);
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<long>(v.size()));
  long i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

}  // namespace

TEST_CASE("potential factories report sup norms and Lipschitz bounds") {
  auto model = uniform_potts(3);
  CHECK(model.psi().q == 3);
  CHECK(model.psi().sup_norm == doctest::Approx(1.0).epsilon(1e-15));
  // indicator vectors at distinct symbols differ by sqrt(2) across a
  // coordinate-0 gap of 1/2 in the word metric
  CHECK(model.psi().lip_bound >= 2 * std::sqrt(2.0) - 1e-12);

  auto xy = xy_model(32);
  CHECK(xy.psi().q == 2);
  CHECK(xy.psi().sup_norm == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(xy.psi().lip_bound == doctest::Approx(2.0).epsilon(1e-9));

  auto gm = golden_mean_model();
  auto pm_alpha = make_finite_alphabet({"+", "-"}, {0.5, 0.5});
  auto pm_a = TransitionFn::ones(2);
  check_mixing(pm_a);
  auto pm = make_plus_minus_potential(pm_alpha, pm_a);
  CHECK(pm.q == 1);
  int w0[] = {0};
  int w1[] = {1};
  CHECK(pm.eval(std::span<const int>(w0, 1))[0] == doctest::Approx(1.0));
  CHECK(pm.eval(std::span<const int>(w1, 1))[0] == doctest::Approx(-1.0));
}

TEST_CASE("kernel at t = 0 is stochastic over preimages") {
  auto model = uniform_potts(3);
  auto op = assemble_operator(model, vec({0, 0, 0}));
  CHECK(op.size() == 3);
  for (int s = 0; s < 3; ++s) {
    CHECK(op.kernel.row(s).sum() == doctest::Approx(1.0).epsilon(1e-15));
  }
  auto sd = spectral_solve(op);
  CHECK(sd.r == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sd.logr == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("kernel zero pattern matches the transition structure") {
  auto model = golden_mean_model(2);
  auto op = assemble_operator(model, vec({0.3, -0.2}));
  const auto& states = model.states();
  CHECK(states.size() == 3);  // 01, 10, 11
  for (size_t i = 0; i < states.size(); ++i) {
    for (size_t j = 0; j < states.size(); ++j) {
      // state j glues onto state i iff tail(j) == head(i)
      bool glue = states[j][1] == states[i][0];
      if (!glue) CHECK(op.kernel(static_cast<long>(i), static_cast<long>(j)) == 0.0);
      else CHECK(op.kernel(static_cast<long>(i), static_cast<long>(j)) > 0.0);
    }
  }
}

TEST_CASE("closed-form leading eigenvalue for the full-shift Potts kernel") {
  auto model = uniform_potts(3);
  auto op = assemble_operator(model, vec({1, 2, 3}));
  auto sd = spectral_solve(op);
  double expect = (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) / 3.0;
  CHECK(sd.r == doctest::Approx(expect).epsilon(1e-14));
  // rank-1 kernel: exact spectral gap of 1
  CHECK(sd.gap == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sd.gap_exact);
}

TEST_CASE("circle kernel reproduces the Bessel eigenvalue to 1e-12") {
  auto model = xy_model(256);
  for (double x : {0.5, 2.0, 5.0, 8.0}) {
    auto op = assemble_operator(model, vec({x, 0.0}));
    auto sd = spectral_solve(op);
    double ref = oracle::i0_series(x);
    CHECK(std::abs(sd.r - ref) / ref < 1e-12);
  }
  // direction invariance: |t| fixed, rotated
  auto op = assemble_operator(model, vec({3.0 / std::sqrt(2.0), 3.0 / std::sqrt(2.0)}));
  auto sd = spectral_solve(op);
  CHECK(std::abs(sd.r - oracle::i0_series(3.0)) / sd.r < 1e-12);
}

TEST_CASE("spectral invariants: eigenpair residuals and normalizations") {
  auto model = golden_mean_model(2);
  auto op = assemble_operator(model, vec({0.7, -0.4}));
  auto sd = spectral_solve(op);

  double scale = std::exp(op.log_shift);
  Eigen::VectorXd kg = scale * (op.kernel * sd.G);
  CHECK((kg - sd.r * sd.G).lpNorm<Eigen::Infinity>() / (sd.r * sd.G.lpNorm<Eigen::Infinity>()) <
        1e-12);
  Eigen::VectorXd kn = scale * (op.kernel.transpose() * sd.nu);
  CHECK((kn - sd.r * sd.nu).lpNorm<Eigen::Infinity>() / sd.r < 1e-12);

  CHECK(sd.nu.minCoeff() >= 0.0);
  CHECK(sd.nu.sum() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(sd.G.minCoeff() > 0.0);
  CHECK(sd.G.dot(sd.nu) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("power iteration path agrees with the dense path") {
  auto model = golden_mean_model(4);  // 8 admissible 4-words
  auto t = vec({0.35, -0.15});
  auto dense_sd = spectral_solve(assemble_operator(model, t));
  SolveOptions small;
  small.dense_threshold = 4;  // force the iterative path
  auto iter_sd = spectral_solve(assemble_operator(model, t), small);
  CHECK(iter_sd.r == doctest::Approx(dense_sd.r).epsilon(1e-12));
  CHECK((iter_sd.G - dense_sd.G).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((iter_sd.nu - dense_sd.nu).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(iter_sd.gap == doctest::Approx(dense_sd.gap).epsilon(1e-6));
  CHECK_FALSE(iter_sd.gap_exact);
}

TEST_CASE("near-reducible kernel triggers the simple-leading guard") {
  // A huge tilt on the constrained symbol pushes the two leading eigenvalues
  // together: lambda = (b +- sqrt(b^2 + 4ab))/2 with a/b = e^80.
  auto model = golden_mean_model();
  auto op = assemble_operator(model, vec({80.0, 0.0}));
  CHECK_THROWS_AS(spectral_solve(op), NonSimpleLeadingError);
}

TEST_CASE("golden-mean counting eigenvalue is the golden ratio") {
  // Uniform weights scale the counting kernel by 1/m, so adding log m back
  // recovers the topological value.
  auto model = golden_mean_model();
  auto op = assemble_operator(model, vec({0, 0}));
  auto sd = spectral_solve(op);
  double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  CHECK(sd.logr + std::log(2.0) == doctest::Approx(std::log(golden)).epsilon(1e-13));
  CHECK(std::log(golden) == doctest::Approx(0.4812118250596).epsilon(1e-10));
}

TEST_CASE("iterative log-radius estimate converges with a monotone error trend") {
  auto model = golden_mean_model();
  auto op = assemble_operator(model, vec({0.8, -0.3}));
  auto sd = spectral_solve(op);
  double prev = 1e9;
  for (int n : {50, 100, 200, 400}) {
    double est = log_radius_by_iteration(op, n);
    double err = std::abs(est - sd.logr);
    CHECK(err < 5e-2);
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
  // probe independence up to the uniform distortion bound: the two probes
  // differ by O(1/n)
  double a = log_radius_by_iteration(op, 200, 0);
  double b = log_radius_by_iteration(op, 200, 1);
  CHECK(std::abs(a - b) < 2e-2);
}

TEST_CASE("invariant measure is stationary for the normalized kernel") {
  auto model = golden_mean_model(2);
  auto op = assemble_operator(model, vec({0.9, 0.2}));
  auto sd = spectral_solve(op);
  int n = op.size();
  // Q(s, s') = K(s, s') G(s') / (r G(s)); mu = G .* nu satisfies Q^T mu = mu
  Eigen::VectorXd mu = sd.G.cwiseProduct(sd.nu);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  double scale = std::exp(op.log_shift);
  for (int s = 0; s < n; ++s)
    for (int sp = 0; sp < n; ++sp)
      out[sp] += mu[s] * scale * op.kernel(s, sp) * sd.G[sp] / (sd.r * sd.G[s]);
  CHECK((out - mu).lpNorm<1>() < 1e-12);
  CHECK(mu.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log r is convex along random directions") {
  auto model = uniform_potts(3);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd t0(3), t1(3);
    for (int i = 0; i < 3; ++i) {
      t0[i] = u(rng);
      t1[i] = u(rng);
    }
    auto lr = [&](const Eigen::VectorXd& t) {
      return spectral_solve(assemble_operator(model, t)).logr;
    };
    double mid = lr(0.5 * (t0 + t1));
    CHECK(mid <= 0.5 * lr(t0) + 0.5 * lr(t1) + 1e-10);
  }
}

TEST_CASE("correlation decay: golden-mean indicator correlations") {
  auto model = golden_mean_model();
  auto op = assemble_operator(model, vec({0, 0}));
  auto sd = spectral_solve(op);
  Eigen::VectorXd f(2);
  f << 1, 0;  // indicator of symbol 0 at the origin
  auto c = correlation_decay(op, sd, f, f, 12);
  REQUIRE(c.size() == 13);

  // stationary mass of symbol 0 is (5 - sqrt(5))/10
  double mu0 = (5.0 - std::sqrt(5.0)) / 10.0;
  CHECK(c[0] == doctest::Approx(mu0 * (1 - mu0)).epsilon(1e-12));
  // the word 00 is forbidden, so the lag-1 product term vanishes
  CHECK(c[1] == doctest::Approx(mu0 * mu0).epsilon(1e-12));
  // exactly geometric decay at ratio |lambda_2| / r = ((sqrt(5)-1)/2)^2
  double ratio = std::pow((std::sqrt(5.0) - 1.0) / 2.0, 2.0);
  for (int k = 1; k <= 12; ++k) {
    CHECK(c[k] == doctest::Approx(c[0] * std::pow(ratio, k)).epsilon(1e-9));
  }
}

TEST_CASE("correlation decay vanishes identically for a rank-1 kernel") {
  auto model = xy_model(32);
  auto op = assemble_operator(model, vec({0, 0}));
  auto sd = spectral_solve(op);
  Eigen::VectorXd f(32);
  for (int k = 0; k < 32; ++k) f[k] = std::cos(model.alphabet().angles[k]);
  auto c = correlation_decay(op, sd, f, f, 4);
  CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-12));  // variance of cos under uniform
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(c[k]) < 1e-14);
}

TEST_CASE("spectral data serializes to JSON and back") {
  auto model = golden_mean_model();
  auto op = assemble_operator(model, vec({0.4, 0.1}));
  auto sd = spectral_solve(op);
  auto j = spectral_to_json(sd);
  auto back = spectral_from_json(j);
  CHECK(back.r == sd.r);
  CHECK(back.logr == sd.logr);
  CHECK(back.gap == sd.gap);
  CHECK((back.G - sd.G).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back.nu - sd.nu).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("assemble_operator requires a verified mixing time") {
  auto alpha = make_finite_alphabet({"0", "1"}, {0.5, 0.5});
  auto a = TransitionFn::from_rows({{0, 1}, {1, 1}});  // mixing_time not set
  auto psi = make_indicator_potential(alpha, a);
  TransferModel model(alpha, a, psi, 1);
  CHECK_THROWS_AS(assemble_operator(model, vec({0, 0})), ConfigError);
}
