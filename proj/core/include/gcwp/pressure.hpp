#pragma once

#include <Eigen/Dense>
#include <map>
#include <mutex>
#include <vector>

#include "gcwp/transfer.hpp"

namespace gcwp {

struct PressurePoint {
  Eigen::VectorXd t;
  double value = 0;         // log r at t.psi
  Eigen::VectorXd grad;     // int psi dmu_{t.psi}, exact for the discretized kernel
};

enum class EntropyStatus { finite, minus_infinity, boundary };

struct EntropyValue {
  Eigen::VectorXd z;
  double value = 0;         // -inf encoded as -HUGE_VAL when status says so
  EntropyStatus status = EntropyStatus::finite;
  Eigen::VectorXd argmin;   // minimizing t when finite
};

struct EntropyOptions {
  double k_search = 0;      // 0: use 4*sup_norm + 1
  int coarse_per_dim = 9;   // coarse grid nodes per dimension
  double grad_tol = 1e-9;   // descent stopping criterion on |grad|_inf
  int max_iter = 400;
  double slope_tol = 1e-6;  // decrease threshold for the radial slope test
};

struct DualityReport {
  double max_violation = 0;       // max over grids of H(z) + t.z - P(t), should be <= 0
  double max_reconstruction = 0;  // max over t of |P(t) - max_z (H(z) + t.z)|
};

// Memoizing view of t -> P(t) = log r_{t.psi} for a fixed model.  Thread-safe:
// concurrent calls share the solve cache.
class PressureMap {
 public:
  explicit PressureMap(TransferModel model, SolveOptions opts = {});

  const TransferModel& model() const { return model_; }
  const SolveOptions& options() const { return opts_; }

  const SpectralData& solve(const Eigen::VectorXd& t);
  double value(const Eigen::VectorXd& t);
  double value(const std::vector<double>& t);
  PressurePoint at(const Eigen::VectorXd& t);
  PressurePoint at(const std::vector<double>& t);
  double h_top();

  // Central finite differences of the analytic gradient; h in [1e-6, 1e-2].
  // Returned matrix is symmetrized; the raw asymmetry must stay below 1e-8.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& t, double h = 1e-4);

  // H(z) = inf_t [P(t) - t.z] by coarse grid + descent over [-K, K]^q with
  // a radial slope test at 2K, 4K, 8K deciding minus_infinity/boundary.
  EntropyValue entropy(const Eigen::VectorXd& z, const EntropyOptions& opts = {});

  DualityReport duality_check(const std::vector<Eigen::VectorXd>& t_grid,
                              const std::vector<Eigen::VectorXd>& z_grid,
                              const EntropyOptions& opts = {});

 private:
  TransferModel model_;
  SolveOptions opts_;
  std::map<std::vector<double>, SpectralData> memo_;
  std::mutex mu_;
};

}  // namespace gcwp
