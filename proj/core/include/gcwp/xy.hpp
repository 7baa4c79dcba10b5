#pragma once

#include <cstdint>
#include <vector>

#include "gcwp/pgm.hpp"

namespace gcwp {

// Modified Bessel function of the first kind, order 0, on 0 <= x <= 700:
// power series for x <= 15, scaled asymptotic expansion above.
double bessel_i0(double x);
double bessel_i1(double x);
// e^{-x} I0(x) and e^{-x} I1(x); stable for any x >= 0.
double bessel_i0_scaled(double x);
double bessel_i1_scaled(double x);
double log_bessel_i0(double x);
// I1(x)/I0(x), increasing from 0 to 1.
double bessel_ratio(double x);

// The radial free-energy profile of the circle model with identity spin map:
//   phi_beta(x) = -(beta/2) x^2 + log I0(beta x)
struct XyPhi {
  double value = 0;
  double d1 = 0;
  double d2 = 0;
};
XyPhi xy_phi(double beta, double x);

enum class XyRegime { subcritical, critical, supercritical };

struct XyCriticalData {
  double beta = 0;
  XyRegime regime = XyRegime::subcritical;
  double r_star = 0;       // maximizing radius of phi_beta
  double phi_max = 0;
  double second_deriv = 0; // phi'' at r_star
  double lower_bound = 0;  // sqrt((beta-2)/beta) when beta > 2
};

// beta < 2: unique maximum at 0.  beta > 2: the unique positive root of
// phi' in (sqrt((beta-2)/beta), 1], bisected to 1e-13.  beta = 2: reports
// the positive root if one is found above tolerance, otherwise 0.
XyCriticalData xy_critical_point(double beta);

// int f d eta_x where eta_x is the product of von Mises marginals with
// concentration x along a fixed direction (one representative of the rotation
// orbit of limit laws); f has depth <= 2 and is evaluated on angles.  Plain
// tensor trapezoid rule with `nodes` angles per coordinate (<= 4096).
double eta_expectation(double x, const CylinderObservable& f, int nodes = 256);

// Exact finite-n Gibbs expectation of a depth <= 2 circle observable via the
// radial representation E_n[f] = int r e^{n phi(r)} F(beta r) dr / normalizer,
// F(x) = int f d eta_x.  Exact for rotation-invariant f (checked; throws
// UnsupportedError otherwise).  Deterministic quadrature companion to the
// samplers.
double xy_pgm_expectation(double beta, long n, const CylinderObservable& f,
                          int nodes = 512);

struct LaplaceTail {
  double integral = 0;    // adaptive quadrature of int_0^b x^g e^{-n x^a} dx
  double asymptotic = 0;  // Gamma((g+1)/a) / (a n^((g+1)/a))
  double ratio = 0;
};

// Requires n * b^a >= 10 so the truncated tail is negligible.
LaplaceTail laplace_tail(double alpha, double gamma_exp, double n, double b);

enum class XySampler {
  importance,  // iid words from the product measure, weights e^{-beta H_n}
  mean_field,  // Gaussian-identity auxiliary variable: sample the tilt radius
               // from its exact density r e^{n phi(r)}, then tilted marginals
  automatic,   // importance when beta <= 2, mean_field above
};

struct XyLimitReport {
  double beta = 0;
  double prediction = 0;   // int f d eta_{beta r*} (uniform product when r* = 0)
  std::vector<long> ns;
  std::vector<double> values;
  std::vector<double> stderrs;
  std::vector<double> gaps;
  std::vector<double> ess;  // importance sampler only; 0 otherwise
  double final_gap = 0;
  bool pass = false;
  std::string method;
};

// Monte Carlo check that the finite-n Gibbs expectations approach the
// rotation-averaged limit law.  PASS as in convergence_test.
XyLimitReport xy_limit_check(double beta, const CylinderObservable& f,
                             const std::vector<long>& ns, long samples,
                             std::uint64_t seed, int threads = 1,
                             XySampler sampler = XySampler::automatic,
                             double tol = 0.02);

}  // namespace gcwp
