#include "gcwp/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

namespace gcwp {

Eigen::VectorXd PotentialVec::eval(std::span<const int> word) const {
  if (static_cast<int>(word.size()) < depth)
    throw ConfigError("word shorter than potential depth");
  if (!on_nodes) throw ConfigError("potential has no node evaluation");
  Eigen::VectorXd out(q);
  on_nodes(word.data(), out.data());
  return out;
}

namespace {

// Lipschitz constant w.r.t. the word metric d(w, w') = sum_j 2^{-j-1} d(w_j, w'_j):
// changing coordinate j alone moves the argument by 2^{-j-1} d(a, b), so the
// per-coordinate slopes enter with weight 2^{j+1}.
double depth_one_lipschitz(const AlphabetSpec& alpha, const PotentialVec& psi) {
  const int m = alpha.size();
  double lip = 0;
  Eigen::VectorXd pa(psi.q), pb(psi.q);
  for (int a = 0; a < m; ++a) {
    psi.on_nodes(&a, pa.data());
    for (int b = a + 1; b < m; ++b) {
      psi.on_nodes(&b, pb.data());
      double d = alpha.distance(a, b);
      if (d > 0) lip = std::max(lip, 2.0 * (pa - pb).norm() / d);
    }
  }
  return lip;
}

}  // namespace

PotentialVec make_indicator_potential(const AlphabetSpec& alpha, const TransitionFn& a) {
  if (alpha.size() != a.m) throw ConfigError("alphabet and transition sizes differ");
  PotentialVec psi;
  psi.q = alpha.size();
  psi.depth = 1;
  psi.id = "indicator";
  int q = psi.q;
  psi.on_nodes = [q](const int* word, double* out) {
    for (int i = 0; i < q; ++i) out[i] = word[0] == i ? 1.0 : 0.0;
  };
  psi.sup_norm = 1.0;
  psi.lip_bound = depth_one_lipschitz(alpha, psi);
  return psi;
}

PotentialVec make_plus_minus_potential(const AlphabetSpec& alpha, const TransitionFn& a) {
  if (alpha.size() != 2 || a.m != 2)
    throw ConfigError("plus/minus potential needs a two-symbol alphabet");
  PotentialVec psi;
  psi.q = 1;
  psi.depth = 1;
  psi.id = "plus_minus";
  psi.on_nodes = [](const int* word, double* out) { out[0] = word[0] == 0 ? 1.0 : -1.0; };
  psi.sup_norm = 1.0;
  psi.lip_bound = depth_one_lipschitz(alpha, psi);
  return psi;
}

PotentialVec make_xy_potential(const AlphabetSpec& alpha, const TransitionFn& a) {
  if (alpha.kind != AlphabetKind::circle)
    throw ConfigError("xy potential needs a circle alphabet");
  if (alpha.size() != a.m) throw ConfigError("alphabet and transition sizes differ");
  PotentialVec psi;
  psi.q = 2;
  psi.depth = 1;
  psi.id = "xy";
  std::vector<double> angles = alpha.angles;
  psi.on_nodes = [angles](const int* word, double* out) {
    out[0] = std::cos(angles[word[0]]);
    out[1] = std::sin(angles[word[0]]);
  };
  psi.on_angles = [](const double* ang, double* out) {
    out[0] = std::cos(ang[0]);
    out[1] = std::sin(ang[0]);
  };
  psi.sup_norm = 1.0;
  psi.lip_bound = depth_one_lipschitz(alpha, psi);
  return psi;
}

PotentialVec make_table_potential(const AlphabetSpec& alpha, const TransitionFn& a,
                                  int depth, const Eigen::MatrixXd& values) {
  if (alpha.size() != a.m) throw ConfigError("alphabet and transition sizes differ");
  if (depth < 1) throw ConfigError("table depth must be positive");
  const int m = alpha.size();
  std::size_t rows = 1;
  for (int j = 0; j < depth; ++j) {
    rows *= static_cast<std::size_t>(m);
    if (rows > (1u << 24)) throw CapExceededError("potential table too large");
  }
  if (static_cast<std::size_t>(values.rows()) != rows || values.cols() < 1)
    throw ConfigError("table shape does not match alphabet and depth");

  PotentialVec psi;
  psi.q = static_cast<int>(values.cols());
  psi.depth = depth;
  psi.id = "table";
  Eigen::MatrixXd table = values;
  psi.on_nodes = [table, m, depth](const int* word, double* out) {
    std::size_t idx = 0, stride = 1;
    for (int j = 0; j < depth; ++j) {
      idx += static_cast<std::size_t>(word[j]) * stride;
      stride *= static_cast<std::size_t>(m);
    }
    Eigen::Map<Eigen::VectorXd>(out, table.cols()) = table.row(idx);
  };

  // sup over admissible depth-words only
  std::vector<Word> words = enumerate_words(a, depth);
  double sup = 0;
  for (const Word& w : words) {
    std::size_t idx = 0, stride = 1;
    for (int j = 0; j < depth; ++j) {
      idx += static_cast<std::size_t>(w[j]) * stride;
      stride *= static_cast<std::size_t>(m);
    }
    sup = std::max(sup, table.row(idx).norm());
  }
  psi.sup_norm = sup;

  double lip = 0;
  for (int j = 0; j < depth; ++j) {
    double slope = 0;
    for (const Word& w : words) {
      std::size_t idx = 0, stride = 1;
      for (int k = 0; k < depth; ++k) {
        idx += static_cast<std::size_t>(w[k]) * stride;
        stride *= static_cast<std::size_t>(m);
      }
      std::size_t stride_j = 1;
      for (int k = 0; k < j; ++k) stride_j *= static_cast<std::size_t>(m);
      for (int b = 0; b < m; ++b) {
        if (b == w[j]) continue;
        double d = alpha.distance(w[j], b);
        if (d <= 0) continue;
        std::size_t idx2 = idx + (static_cast<std::size_t>(b) - w[j]) * stride_j;
        slope = std::max(slope, (table.row(idx) - table.row(idx2)).norm() / d);
      }
    }
    lip += std::ldexp(slope, j + 1);
  }
  psi.lip_bound = lip;
  return psi;
}

TransferModel::TransferModel(AlphabetSpec alpha, TransitionFn a, PotentialVec psi,
                             int state_depth)
    : alpha_(std::move(alpha)), a_(std::move(a)), psi_(std::move(psi)) {
  if (alpha_.size() != a_.m) throw ConfigError("alphabet and transition sizes differ");
  if (psi_.q < 1 || psi_.depth < 1) throw ConfigError("potential shape invalid");
  state_depth_ = std::max({state_depth, psi_.depth, 1});
  states_ = enumerate_words(a_, state_depth_);
}

double TransferModel::product_weight(const Word& s) const {
  double w = 1;
  for (int sym : s) w *= alpha_.weights[sym];
  return w;
}

DiscretizedTransfer assemble_operator(const TransferModel& model, const Eigen::VectorXd& t) {
  if (!model.transition().mixing_time)
    throw ConfigError("transition structure lacks a verified mixing time");
  if (t.size() != model.q()) throw ConfigError("direction dimension does not match potential");

  const std::vector<Word>& states = model.states();
  const int S = static_cast<int>(states.size());
  const int d = model.state_depth();

  Eigen::VectorXd tpsi(S);
  for (int j = 0; j < S; ++j)
    tpsi[j] = t.dot(model.psi().eval(std::span<const int>(states[j].data(), states[j].size())));
  double shift = tpsi.maxCoeff();

  DiscretizedTransfer op;
  op.model = &model;
  op.t = t;
  op.potential_id = model.psi().id;
  op.log_shift = shift;
  op.kernel = Eigen::MatrixXd::Zero(S, S);
  for (int i = 0; i < S; ++i) {
    for (int j = 0; j < S; ++j) {
      bool glue;
      if (d == 1) {
        glue = model.transition().allows(states[j][0], states[i][0]);
      } else {
        glue = std::equal(states[j].begin() + 1, states[j].end(), states[i].begin());
      }
      if (glue)
        op.kernel(i, j) = model.alphabet().weights[states[j][0]] * std::exp(tpsi[j] - shift);
    }
  }
  return op;
}

namespace {

// one sided relative eigen-residual in the sup norm
double rel_residual(const Eigen::MatrixXd& M, const Eigen::VectorXd& v, double lam,
                    bool left) {
  Eigen::VectorXd r = left ? Eigen::VectorXd(M.transpose() * v - lam * v)
                           : Eigen::VectorXd(M * v - lam * v);
  return r.lpNorm<Eigen::Infinity>() / (std::abs(lam) * v.lpNorm<Eigen::Infinity>());
}

void fix_sign_positive(Eigen::VectorXd& v, const char* what) {
  if (v.sum() < 0) v = -v;
  double top = v.maxCoeff();
  if (!(top > 0)) throw NoConvergenceError(std::string(what) + " eigenvector degenerate");
  if (v.minCoeff() < -1e-10 * top)
    throw NoConvergenceError(std::string(what) + " eigenvector not one-signed");
}

}  // namespace

SpectralData spectral_solve(const DiscretizedTransfer& op, const SolveOptions& opts) {
  const Eigen::MatrixXd& M = op.kernel;
  const int S = op.size();
  if (S < 1) throw ConfigError("empty state space");

  SpectralData sd;
  double rho = 0;       // leading eigenvalue of the shifted kernel
  double lam2_abs = 0;  // second modulus

  if (S <= opts.dense_threshold) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw NoConvergenceError("eigendecomposition failed");
    const auto& ev = es.eigenvalues();
    int lead = 0;
    for (int i = 1; i < S; ++i)
      if (std::abs(ev[i]) > std::abs(ev[lead])) lead = i;
    rho = ev[lead].real();
    double lead_abs = std::abs(ev[lead]);
    for (int i = 0; i < S; ++i)
      if (i != lead) lam2_abs = std::max(lam2_abs, std::abs(ev[i]));
    if ((lead_abs - lam2_abs) / lead_abs < opts.non_simple_tol ||
        std::abs(ev[lead].imag()) > 1e-9 * lead_abs)
      throw NonSimpleLeadingError("leading eigenvalue is not simple within tolerance");

    // both eigenvectors by inverse iteration with a barely offset shift;
    // separation from the rest of the spectrum was certified just above, and
    // this is far more accurate than the Schur-based vectors when the kernel
    // has a cluster of (near-)defective eigenvalues close to zero
    double sigma = rho * (1.0 + 1e-10);
    Eigen::MatrixXd shifted = M - sigma * Eigen::MatrixXd::Identity(S, S);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_right(shifted);
    Eigen::VectorXd g = Eigen::VectorXd::Ones(S);
    for (int k = 0; k < 3; ++k) {
      g = lu_right.solve(g);
      g /= g.lpNorm<Eigen::Infinity>();
    }
    fix_sign_positive(g, "right");
    sd.G = g;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu_left(shifted.transpose());
    Eigen::VectorXd nu = Eigen::VectorXd::Ones(S);
    for (int k = 0; k < 3; ++k) {
      nu = lu_left.solve(nu);
      nu /= nu.lpNorm<Eigen::Infinity>();
    }
    fix_sign_positive(nu, "left");
    sd.nu = nu;
    sd.gap_exact = true;
    sd.iterations = 0;
  } else {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(S);
    int used = 0;
    bool ok = false;
    for (; used < opts.max_iter; ++used) {
      Eigen::VectorXd w = M * v;
      double lo = 1e300, hi = 0;
      for (int i = 0; i < S; ++i) {
        double ratio = w[i] / v[i];
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
      v = w / w.maxCoeff();
      if (hi - lo < opts.tol * hi) {
        rho = 0.5 * (hi + lo);
        ok = true;
        break;
      }
    }
    if (!ok) throw NoConvergenceError("power iteration did not converge");
    sd.G = v;

    Eigen::VectorXd nu = Eigen::VectorXd::Ones(S);
    for (int k = 0; k < opts.max_iter; ++k) {
      Eigen::VectorXd w = M.transpose() * nu;
      double lo = 1e300, hi = 0;
      for (int i = 0; i < S; ++i) {
        double ratio = w[i] / nu[i];
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
      nu = w / w.maxCoeff();
      ++used;
      if (hi - lo < opts.tol * hi) break;
      if (k + 1 == opts.max_iter) throw NoConvergenceError("left power iteration did not converge");
    }
    sd.nu = nu;

    // Rayleigh polish of the eigenvalue with the converged pair
    rho = sd.nu.dot(M * sd.G) / sd.nu.dot(sd.G);

    // second modulus by power iteration on the deflated operator; norm ratios
    // over two steps so that negative or complex pairs still converge
    Eigen::VectorXd u(S);
    for (int i = 0; i < S; ++i) u[i] = (i % 2 == 0) ? 1.0 : -0.7;
    double gdotnu = sd.nu.dot(sd.G);
    auto deflate = [&](Eigen::VectorXd& x) { x -= sd.G * (sd.nu.dot(x) / gdotnu); };
    deflate(u);
    double base = u.norm();
    double est = 0, prev_est = -1;
    for (int k = 0; k < opts.max_iter; ++k) {
      Eigen::VectorXd u1 = M * u;
      deflate(u1);
      Eigen::VectorXd u2 = M * u1;
      deflate(u2);
      double n0 = u.norm(), n2 = u2.norm();
      used += 2;
      if (n2 < 1e-280 * base || n0 == 0) {
        est = 0;
        break;
      }
      est = std::sqrt(n2 / n0);
      u = u2 / n2;
      if (prev_est >= 0 && std::abs(est - prev_est) < 1e-9 * rho) break;
      prev_est = est;
      if (k + 1 == opts.max_iter) throw NoConvergenceError("deflated iteration did not converge");
    }
    lam2_abs = est;
    if ((rho - lam2_abs) / rho < opts.non_simple_tol)
      throw NonSimpleLeadingError("leading eigenvalue is not simple within tolerance");
    sd.gap_exact = false;
    sd.iterations = used;
  }

  // strictly positive output while keeping the residual intact
  for (int i = 0; i < S; ++i) sd.G[i] = std::max(sd.G[i], 1e-300);
  for (int i = 0; i < S; ++i) sd.nu[i] = std::max(sd.nu[i], 0.0);

  sd.nu /= sd.nu.sum();
  sd.G /= sd.G.dot(sd.nu);

  sd.gap = 1.0 - lam2_abs / rho;
  sd.logr = op.log_shift + std::log(rho);
  sd.r = std::exp(sd.logr);
  sd.residual = std::max(rel_residual(M, sd.G, rho, false), rel_residual(M, sd.nu, rho, true));
  if (sd.residual > 1e4 * opts.tol)
    throw NoConvergenceError("leading pair residual above tolerance");
  return sd;
}

nlohmann::json spectral_to_json(const SpectralData& sd) {
  nlohmann::json j;
  j["r"] = sd.r;
  j["logr"] = sd.logr;
  j["gap"] = sd.gap;
  j["gap_exact"] = sd.gap_exact;
  j["residual"] = sd.residual;
  j["iterations"] = sd.iterations;
  j["G"] = std::vector<double>(sd.G.data(), sd.G.data() + sd.G.size());
  j["nu"] = std::vector<double>(sd.nu.data(), sd.nu.data() + sd.nu.size());
  return j;
}

SpectralData spectral_from_json(const nlohmann::json& j) {
  SpectralData sd;
  sd.r = j.at("r").get<double>();
  sd.logr = j.at("logr").get<double>();
  sd.gap = j.at("gap").get<double>();
  sd.gap_exact = j.at("gap_exact").get<bool>();
  sd.residual = j.at("residual").get<double>();
  sd.iterations = j.at("iterations").get<int>();
  auto g = j.at("G").get<std::vector<double>>();
  auto nu = j.at("nu").get<std::vector<double>>();
  sd.G = Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  sd.nu = Eigen::Map<Eigen::VectorXd>(nu.data(), static_cast<Eigen::Index>(nu.size()));
  return sd;
}

double log_radius_by_iteration(const DiscretizedTransfer& op, int n, int probe_state) {
  if (n < 1) throw ConfigError("iteration count must be positive");
  if (probe_state < 0 || probe_state >= op.size()) throw ConfigError("probe state out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Ones(op.size());
  double acc = 0;
  for (int k = 0; k < n; ++k) {
    v = op.kernel * v;
    double s = v.maxCoeff();
    if (!(s > 0)) throw NoConvergenceError("iterate collapsed to zero");
    v /= s;
    acc += std::log(s);
  }
  return op.log_shift + (acc + std::log(v[probe_state])) / n;
}

std::vector<double> correlation_decay(const DiscretizedTransfer& op, const SpectralData& sd,
                                      const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                                      int n_max) {
  const int S = op.size();
  if (f.size() != S || g.size() != S) throw ConfigError("observable size does not match states");
  if (n_max < 0) throw ConfigError("lag count must be nonnegative");
  double rho = std::exp(sd.logr - op.log_shift);
  Eigen::VectorXd mu = sd.G.cwiseProduct(sd.nu);
  double mf = mu.dot(f), mg = mu.dot(g);

  // normalized chain Q(s, s') = K(s, s') G(s') / (r G(s)); mu is stationary
  Eigen::MatrixXd Q = op.kernel;
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) Q(i, j) *= sd.G[j] / (rho * sd.G[i]);

  std::vector<double> c;
  c.reserve(n_max + 1);
  Eigen::VectorXd u = g;
  c.push_back(std::abs(mu.dot(f.cwiseProduct(u)) - mf * mg));
  for (int k = 1; k <= n_max; ++k) {
    u = Q * u;
    c.push_back(std::abs(mu.dot(f.cwiseProduct(u)) - mf * mg));
  }
  return c;
}

}  // namespace gcwp
