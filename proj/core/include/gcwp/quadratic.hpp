#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gcwp/pressure.hpp"

namespace gcwp {

struct QuadraticMaximum {
  Eigen::VectorXd z;
  double value = 0;
  Eigen::MatrixXd hessian;       // of phi_beta at z
  bool degenerate = false;       // min |eig(hessian)| below the guard
  double self_consistency = 0;   // |z - grad P(beta z)|_inf
  int flatness_order = 2;        // 1D: leading even order of decay at z
  double flatness_coeff = 0;     // 1D: phi ~ value - coeff * (x - z)^order
};

struct MaximaSet {
  double beta = 0;
  std::vector<QuadraticMaximum> maxima;
  double p2 = 0;                 // max of phi_beta
  double k_box = 0;              // search box half-width actually used
  bool radial = false;           // searched in the radial variable (orbit of maxima)
};

struct FindMaximaOptions {
  double k_box = 0;              // 0: use 4*sup_norm + 1
  double grid_step = 0.1;
  int multistarts = 8;
  bool radial = false;           // restrict to t = x e_1, x >= 0 (user-declared symmetry)
  double cluster_radius = 1e-6;
  double value_tol = 1e-9;       // keep maxima within this of the best value
  double degenerate_tol = 1e-7;
  double fd_step = 1e-4;         // Hessian finite-difference step
};

// Quadratic-pressure layer over a PressureMap:
//   phi(t)    = -(beta/2)|t|^2 + P(beta t)
//   phibar(z) = H(z) + (beta/2)|z|^2
class QuadraticPressure {
 public:
  explicit QuadraticPressure(PressureMap& p) : p_(p) {}

  PressureMap& pressure() { return p_; }

  double phi(double beta, const Eigen::VectorXd& t);
  Eigen::VectorXd phi_grad(double beta, const Eigen::VectorXd& t);
  // -inf when H(z) = -inf; boundary status propagates as the achieved value.
  double phibar(double beta, const Eigen::VectorXd& z, const EntropyOptions& opts = {});

  MaximaSet find_maxima(double beta, const FindMaximaOptions& opts = {});

  struct P2Result {
    double p2 = 0;
    double phibar_at_max = 0;  // max of phibar over the discovered maximizers
    double mismatch = 0;       // |p2 - phibar_at_max|
    MaximaSet maxima;
  };
  P2Result quadratic_pressure(double beta, const FindMaximaOptions& opts = {});

  struct EquilibriumState {
    Eigen::VectorXd z;
    SpectralData spectral;      // at t = beta * z
    Eigen::VectorXd psi_mean;   // int psi dmu, equals z up to the residual
  };
  std::vector<EquilibriumState> equilibrium_states(double beta, const MaximaSet& maxima);

 private:
  PressureMap& p_;
};

}  // namespace gcwp
