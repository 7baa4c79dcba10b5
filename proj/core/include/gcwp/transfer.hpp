#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string>
#include <vector>

#include "gcwp/alphabet.hpp"

namespace gcwp {

// A vector potential psi: Omega -> R^q that only reads the first `depth`
// coordinates of a word.  Words are given as node indices into the alphabet;
// circle-based potentials additionally evaluate on raw angles so that
// samplers can work with the continuous model.
struct PotentialVec {
  int q = 1;
  int depth = 1;
  std::string id;
  std::function<void(const int* word, double* out)> on_nodes;
  std::function<void(const double* angles, double* out)> on_angles;  // circle kinds only
  double sup_norm = 0;   // max over admissible depth-words of |psi|_2
  double lip_bound = 0;  // Lipschitz estimate w.r.t. the standard word metric

  Eigen::VectorXd eval(std::span<const int> word) const;
};

// psi_i = 1{word starts with symbol i}, q = alphabet size.
PotentialVec make_indicator_potential(const AlphabetSpec& alpha, const TransitionFn& a);
// Two-symbol alphabet, psi = +1 on words starting with symbol 0, -1 otherwise.
PotentialVec make_plus_minus_potential(const AlphabetSpec& alpha, const TransitionFn& a);
// Circle alphabet, psi(omega) = (cos theta_0, sin theta_0).
PotentialVec make_xy_potential(const AlphabetSpec& alpha, const TransitionFn& a);
// Explicit table: row = flattened depth-word (node indices, first coordinate
// fastest), columns = the q components.
PotentialVec make_table_potential(const AlphabetSpec& alpha, const TransitionFn& a,
                                  int depth, const Eigen::MatrixXd& values);

// Alphabet + transition structure + potential, with the cylinder depth the
// discretized operator acts on.  state_depth >= max(psi.depth, 1); deeper
// states let cylinder observables of matching depth be integrated exactly.
class TransferModel {
 public:
  TransferModel(AlphabetSpec alpha, TransitionFn a, PotentialVec psi, int state_depth = 0);

  const AlphabetSpec& alphabet() const { return alpha_; }
  const TransitionFn& transition() const { return a_; }
  const PotentialVec& psi() const { return psi_; }
  int state_depth() const { return state_depth_; }
  const std::vector<Word>& states() const { return states_; }
  int q() const { return psi_.q; }

  // P-measure of the cylinder [s] ignoring the transition structure,
  // i.e. the product of reference weights along the state word.
  double product_weight(const Word& s) const;

 private:
  AlphabetSpec alpha_;
  TransitionFn a_;
  PotentialVec psi_;
  int state_depth_;
  std::vector<Word> states_;
};

// The transfer operator L_{t.psi} restricted to depth-d cylinder functions,
// as a dense matrix on the model's state words:
//
//   (K f)[s] = sum over preimage states s' of  w(head s') e^{t.psi(s')} f[s']
//
// where s' runs over admissible words gluing onto s.  Entries store
// e^{t.psi - log_shift} to keep the matrix in a safe floating range; the
// reported eigenvalue restores the shift.
struct DiscretizedTransfer {
  Eigen::MatrixXd kernel;
  const TransferModel* model = nullptr;
  Eigen::VectorXd t;
  std::string potential_id;
  double log_shift = 0;

  int size() const { return static_cast<int>(kernel.rows()); }
};

// Requires a verified mixing time on the transition structure.
DiscretizedTransfer assemble_operator(const TransferModel& model, const Eigen::VectorXd& t);

struct SolveOptions {
  double tol = 1e-12;            // relative residual on the leading pair
  double non_simple_tol = 1e-10; // relative separation guard
  int dense_threshold = 512;     // full eigendecomposition up to this size
  int max_iter = 20000;          // power iteration budget
};

struct SpectralData {
  double r = 0;       // leading eigenvalue (weights included)
  double logr = 0;
  double gap = 0;     // 1 - |lambda_2| / r
  bool gap_exact = false;
  Eigen::VectorXd G;  // right eigenvector, positive, normalized so sum(G*nu) = 1
  Eigen::VectorXd nu; // left eigenvector, nonnegative, sums to 1
  double residual = 0;
  int iterations = 0;
};

SpectralData spectral_solve(const DiscretizedTransfer& op, const SolveOptions& opts = {});

nlohmann::json spectral_to_json(const SpectralData& sd);
SpectralData spectral_from_json(const nlohmann::json& j);

// (1/n) log L^n(1)(probe state), the iterative estimate of log r.
double log_radius_by_iteration(const DiscretizedTransfer& op, int n, int probe_state = 0);

// Correlations c_k = |int f (g o shift^k) dmu - int f dmu int g dmu| for
// k = 0..n_max under the invariant Gibbs measure mu = G * nu of the
// discretized chain; f and g are vectors over the model's state words.
std::vector<double> correlation_decay(const DiscretizedTransfer& op, const SpectralData& sd,
                                      const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                                      int n_max);

}  // namespace gcwp
