#include "gcwp/pressure.hpp"

#include <algorithm>
#include <cmath>

namespace gcwp {

namespace {

std::vector<double> key_of(const Eigen::VectorXd& t) {
  return std::vector<double>(t.data(), t.data() + t.size());
}

Eigen::VectorXd to_vec(const std::vector<double>& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
}

}  // namespace

PressureMap::PressureMap(TransferModel model, SolveOptions opts)
    : model_(std::move(model)), opts_(opts) {}

const SpectralData& PressureMap::solve(const Eigen::VectorXd& t) {
  std::vector<double> key = key_of(t);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;
  DiscretizedTransfer op = assemble_operator(model_, t);
  SpectralData sd = spectral_solve(op, opts_);
  return memo_.emplace(std::move(key), std::move(sd)).first->second;
}

double PressureMap::value(const Eigen::VectorXd& t) { return solve(t).logr; }

double PressureMap::value(const std::vector<double>& t) { return value(to_vec(t)); }

PressurePoint PressureMap::at(const Eigen::VectorXd& t) {
  const SpectralData& sd = solve(t);
  const std::vector<Word>& states = model_.states();
  Eigen::VectorXd mu = sd.G.cwiseProduct(sd.nu);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model_.q());
  for (std::size_t s = 0; s < states.size(); ++s)
    grad += mu[static_cast<Eigen::Index>(s)] *
            model_.psi().eval(std::span<const int>(states[s].data(), states[s].size()));
  PressurePoint p;
  p.t = t;
  p.value = sd.logr;
  p.grad = std::move(grad);
  return p;
}

PressurePoint PressureMap::at(const std::vector<double>& t) { return at(to_vec(t)); }

double PressureMap::h_top() { return value(Eigen::VectorXd::Zero(model_.q())); }

Eigen::MatrixXd PressureMap::hessian(const Eigen::VectorXd& t, double h) {
  if (!(h >= 1e-6 && h <= 1e-2)) throw ConfigError("hessian step outside [1e-6, 1e-2]");
  const int q = model_.q();
  Eigen::MatrixXd H(q, q);
  for (int j = 0; j < q; ++j) {
    Eigen::VectorXd tp = t, tm = t;
    tp[j] += h;
    tm[j] -= h;
    H.col(j) = (at(tp).grad - at(tm).grad) / (2 * h);
  }
  double asym = (H - H.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) throw NoConvergenceError("pressure hessian asymmetry above tolerance");
  return 0.5 * (H + H.transpose());
}

EntropyValue PressureMap::entropy(const Eigen::VectorXd& z, const EntropyOptions& opts) {
  const int q = model_.q();
  if (z.size() != q) throw ConfigError("mean dimension does not match potential");
  double K = opts.k_search > 0 ? opts.k_search : 4.0 * model_.psi().sup_norm + 1.0;
  const double box = 2.0 * K;
  auto g = [&](const Eigen::VectorXd& t) { return value(t) - t.dot(z); };

  // coarse sweep of [-K, K]^q
  Eigen::VectorXd best = Eigen::VectorXd::Zero(q);
  double best_val = g(best);
  std::vector<int> digit(q, 0);
  const int n = std::max(2, opts.coarse_per_dim);
  while (true) {
    Eigen::VectorXd t(q);
    for (int i = 0; i < q; ++i) t[i] = -K + 2.0 * K * digit[i] / (n - 1);
    double v = g(t);
    if (v < best_val) {
      best_val = v;
      best = t;
    }
    int i = 0;
    for (; i < q; ++i) {
      if (++digit[i] < n) break;
      digit[i] = 0;
    }
    if (i == q) break;
  }

  // projected gradient descent with backtracking inside [-box, box]^q
  Eigen::VectorXd t = best;
  double gv = best_val;
  Eigen::VectorXd grad = at(t).grad - z;
  double step = 1.0;
  for (int it = 0; it < opts.max_iter && grad.lpNorm<Eigen::Infinity>() >= opts.grad_tol; ++it) {
    double g2 = grad.squaredNorm();
    bool moved = false;
    for (int halve = 0; halve < 60; ++halve) {
      Eigen::VectorXd cand = t - step * grad;
      for (int i = 0; i < q; ++i) cand[i] = std::clamp(cand[i], -box, box);
      double cv = g(cand);
      if (cv <= gv - 1e-4 * step * g2 || (cand - t).lpNorm<Eigen::Infinity>() == 0) {
        if ((cand - t).lpNorm<Eigen::Infinity>() == 0) break;
        t = cand;
        gv = cv;
        grad = at(t).grad - z;
        step *= 2;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }

  EntropyValue out;
  out.z = z;
  bool interior = true;
  for (int i = 0; i < q; ++i)
    if (std::abs(t[i]) >= box - 1e-7) interior = false;
  if (interior && grad.lpNorm<Eigen::Infinity>() < 10 * opts.grad_tol) {
    out.status = EntropyStatus::finite;
    out.value = gv;
    out.argmin = t;
    return out;
  }

  // Radial certificate along the escape ray.  Convexity makes the chord
  // slopes nondecreasing in the radius, so a strictly negative far slope
  // proves g is unbounded below, and a vanishing one an asymptote.
  Eigen::VectorXd u = t;
  if (u.lpNorm<Eigen::Infinity>() == 0) u = -z;
  u /= u.norm();
  double g2K = g(2 * K * u), g4K = g(4 * K * u), g8K = g(8 * K * u);
  double s2 = (g8K - g4K) / (4 * K);
  if (s2 < -opts.slope_tol) {
    out.status = EntropyStatus::minus_infinity;
    out.value = -HUGE_VAL;
    return out;
  }
  if (s2 <= opts.slope_tol) {
    out.status = EntropyStatus::boundary;
    out.value = std::min({gv, g2K, g4K, g8K});
    out.argmin = t;
    return out;
  }
  if (interior) {
    // descent stalled at an interior point with the ray sloping upward,
    // so the infimum is attained; report the best value found
    out.status = EntropyStatus::finite;
    out.value = gv;
    out.argmin = t;
    return out;
  }
  throw AmbiguousBoundaryError("slope test inconclusive along the escape ray");
}

DualityReport PressureMap::duality_check(const std::vector<Eigen::VectorXd>& t_grid,
                                         const std::vector<Eigen::VectorXd>& z_grid,
                                         const EntropyOptions& opts) {
  DualityReport rep;
  std::vector<EntropyValue> hs;
  hs.reserve(z_grid.size());
  for (const auto& z : z_grid) hs.push_back(entropy(z, opts));

  for (const auto& t : t_grid) {
    double p = value(t);
    double recon = -HUGE_VAL;
    for (const auto& h : hs) {
      if (h.status == EntropyStatus::minus_infinity) continue;
      double cand = h.value + t.dot(h.z);
      recon = std::max(recon, cand);
      rep.max_violation = std::max(rep.max_violation, cand - p);
    }
    rep.max_reconstruction = std::max(rep.max_reconstruction, std::abs(p - recon));
  }
  return rep;
}

}  // namespace gcwp
