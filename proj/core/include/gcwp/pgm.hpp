#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gcwp/quadratic.hpp"

namespace gcwp {

// A bounded observable reading the first `depth` coordinates of a word.
struct CylinderObservable {
  int depth = 1;
  std::string id;
  std::function<double(const int*)> on_nodes;
  std::function<double(const double*)> on_angles;   // circle models only
  // Optional: E[f] when the first `depth` coordinates are iid samples of the
  // exponentially tilted single-site law with parameter kappa (circle: von
  // Mises with concentration kappa).  Used for variance reduction by
  // mean-field samplers; null when no closed form is known.
  std::function<double(double kappa)> tilted_mean;
};

// 1{word starts with the given symbols}.
CylinderObservable make_indicator_observable(std::vector<int> prefix);
// Explicit table over depth-words, same flattening as make_table_potential.
CylinderObservable make_table_observable(const AlphabetSpec& alpha, int depth,
                                         const Eigen::VectorXd& values);
// cos(theta_0) and cos(theta_0 - theta_1) on circle words (angle-evaluated,
// so they apply to any circle discretization).
CylinderObservable make_cos0_observable();
CylinderObservable make_cos_diff_observable();

// f as a vector over the model's state words; requires f.depth <= state_depth.
Eigen::VectorXd compile_observable(const TransferModel& model, const CylinderObservable& f);

// H_n(word) = -(1/2n) |S_n(psi)(word)|^2 with the periodic extension of the word.
double pgm_hamiltonian(const TransferModel& model, std::span<const int> word, long n);

struct PgmEstimate {
  double value = 0;
  double stderr_ = 0;   // 0 for the exact method
  double ess = 0;       // effective sample size (mc only)
  double logz = 0;      // log of the normalizing constant Z_{n,beta}
  long n = 0;
  double beta = 0;
  std::string method;
};

// Exact finite-n Gibbs expectation by dynamic programming over
// (symbol-count vector, last symbol); depth-1 potentials only, observables
// handled by conditioning on their prefix.  cap bounds the DP state count.
PgmEstimate exact_pgm(const TransferModel& model, long n, double beta,
                      const CylinderObservable& f, std::size_t cap = 20u << 20);

struct McOptions {
  long samples = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  double min_ess = 100;
  long batch = 65536;   // deterministic per-batch substreams
};

// Self-normalized importance sampling from the product reference measure
// with weights e^{-beta H_n}; requires a full transition structure.
PgmEstimate mc_pgm(const TransferModel& model, long n, double beta,
                   const CylinderObservable& f, const McOptions& opts = {});

// Relative error of the Gauss-quadrature evaluation of the Gaussian identity
//   e^{|xi|^2} = (2 pi)^(-q/2) int exp(-|t|^2/2 + sqrt(2) t.xi) dt
// with a tensor rule, q = xi.size() <= 3, nodes_per_dim <= 128.
double gaussian_identity_check(const Eigen::VectorXd& xi, int nodes_per_dim);

struct MixtureComponent {
  Eigen::VectorXd z;
  double weight = 0;
  int flatness_order = 2;
  SpectralData spectral;   // at t = beta z, states of the attached model
};

struct LimitMixture {
  double beta = 0;
  std::vector<MixtureComponent> components;  // weights sum to 1
};

// Limit law of the finite-n Gibbs measures: conformal measures at the
// quadratic-pressure maximizers weighted by (int G dP) / sqrt(det -Hess).
// q = 1 allows flat maxima via the flatness-order rule; q > 1 requires all
// maxima non-degenerate.  Requires a full transition structure (int G dP
// is a plain product-weight average only when every word is admissible).
LimitMixture limit_mixture(QuadraticPressure& q, double beta, const MaximaSet& maxima);

// sum_j w_j int f d nu_j over the mixture components.
double mixture_expectation(const LimitMixture& mix, const TransferModel& model,
                           const CylinderObservable& f);

enum class PgmMethod { exact, mc };

struct ConvergenceReport {
  std::vector<long> ns;
  std::vector<double> values;
  std::vector<double> stderrs;
  double prediction = 0;
  std::vector<double> gaps;
  double final_gap = 0;
  bool pass = false;
  std::string method;
};

// Finite-n expectations against the predicted limit for growing n; PASS iff
// the gap is non-increasing over the last three n and the final gap < tol.
ConvergenceReport convergence_test(QuadraticPressure& q, const TransferModel& model,
                                   double beta, const CylinderObservable& f,
                                   const std::vector<long>& ns, PgmMethod method,
                                   const McOptions& mc = {}, double tol = 0.02);

}  // namespace gcwp
