#include "gcwp/quadratic.hpp"

#include <algorithm>
#include <cmath>

namespace gcwp {

double QuadraticPressure::phi(double beta, const Eigen::VectorXd& t) {
  return -0.5 * beta * t.squaredNorm() + p_.value((beta * t).eval());
}

Eigen::VectorXd QuadraticPressure::phi_grad(double beta, const Eigen::VectorXd& t) {
  return beta * (p_.at((beta * t).eval()).grad - t);
}

double QuadraticPressure::phibar(double beta, const Eigen::VectorXd& z,
                                 const EntropyOptions& opts) {
  EntropyValue h = p_.entropy(z, opts);
  if (h.status == EntropyStatus::minus_infinity) return -HUGE_VAL;
  return h.value + 0.5 * beta * z.squaredNorm();
}

namespace {

double bisect_root(const std::function<double(double)>& f, double a, double b, double fa) {
  for (int k = 0; k < 120 && b - a > 1e-14; ++k) {
    double mid = 0.5 * (a + b);
    double fm = f(mid);
    if (fm == 0) return mid;
    if ((fa > 0) == (fm > 0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

MaximaSet QuadraticPressure::find_maxima(double beta, const FindMaximaOptions& opts) {
  const int q = p_.model().q();
  const double K = opts.k_box > 0 ? opts.k_box : 4.0 * p_.model().psi().sup_norm + 1.0;

  MaximaSet ms;
  ms.beta = beta;
  ms.k_box = K;
  ms.radial = opts.radial;

  auto along_e1 = [&](double x) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(q);
    z[0] = x;
    return z;
  };

  std::vector<Eigen::VectorXd> cands;

  if (q == 1 || opts.radial) {
    // one dimensional profile; with the radial flag the caller asserts the
    // maxima form an orbit met along t = x e_1, x >= 0
    const double lo = opts.radial ? 0.0 : -K;
    std::function<double(double)> D = [&](double x) { return phi_grad(beta, along_e1(x))[0]; };
    int n = std::max(3, static_cast<int>(std::lround((K - lo) / opts.grid_step)) + 1);
    std::vector<double> xs(n), ds(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = lo + (K - lo) * i / (n - 1);
      ds[i] = D(xs[i]);
    }
    std::vector<double> roots;
    for (int i = 0; i < n; ++i)
      if (ds[i] == 0) roots.push_back(xs[i]);
    for (int i = 0; i + 1 < n; ++i)
      if ((ds[i] > 0) != (ds[i + 1] > 0) && ds[i] != 0 && ds[i + 1] != 0)
        roots.push_back(bisect_root(D, xs[i], xs[i + 1], ds[i]));
    for (double x : roots) cands.push_back(along_e1(x));
  } else {
    // coarse sweep, then gradient ascent from the best separated grid points
    int n = std::max(3, static_cast<int>(std::lround(2.0 * K / opts.grid_step)) + 1);
    if (q >= 3) n = std::min(n, 21);
    std::vector<Eigen::VectorXd> grid;
    std::vector<double> vals;
    std::vector<int> digit(q, 0);
    while (true) {
      Eigen::VectorXd t(q);
      for (int i = 0; i < q; ++i) t[i] = -K + 2.0 * K * digit[i] / (n - 1);
      grid.push_back(t);
      vals.push_back(phi(beta, t));
      int i = 0;
      for (; i < q; ++i) {
        if (++digit[i] < n) break;
        digit[i] = 0;
      }
      if (i == q) break;
    }
    std::vector<std::size_t> order(grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    double sep = 2.0 * 2.0 * K / (n - 1);
    std::vector<Eigen::VectorXd> starts;
    for (std::size_t idx : order) {
      if (static_cast<int>(starts.size()) >= opts.multistarts) break;
      bool close = false;
      for (const auto& s : starts)
        if ((s - grid[idx]).norm() < sep) close = true;
      if (!close) starts.push_back(grid[idx]);
    }

    double gtol = std::max(1e-12, std::abs(beta) * 1e-10);
    for (Eigen::VectorXd z : starts) {
      double fv = phi(beta, z);
      Eigen::VectorXd g = phi_grad(beta, z);
      double step = 1.0;
      for (int it = 0; it < 500 && g.lpNorm<Eigen::Infinity>() >= gtol; ++it) {
        double g2 = g.squaredNorm();
        bool moved = false;
        for (int h = 0; h < 60; ++h) {
          Eigen::VectorXd cand = z + step * g;
          for (int i = 0; i < q; ++i) cand[i] = std::clamp(cand[i], -K - 1.0, K + 1.0);
          double cv = phi(beta, cand);
          if (cv >= fv + 1e-4 * step * g2 && (cand - z).lpNorm<Eigen::Infinity>() > 0) {
            z = cand;
            fv = cv;
            g = phi_grad(beta, z);
            step *= 2;
            moved = true;
            break;
          }
          step *= 0.5;
        }
        if (!moved) break;
      }

      // Newton polish: ascent alone leaves |z - z*| ~ gtol, which is too
      // coarse for downstream mixture weights; a few damped Newton steps on
      // the gradient reach the solver noise floor instead
      const double h = opts.fd_step;
      for (int it = 0; it < 5; ++it) {
        g = phi_grad(beta, z);
        if (g.lpNorm<Eigen::Infinity>() < 3e-13) break;
        Eigen::MatrixXd H(q, q);
        for (int j = 0; j < q; ++j) {
          Eigen::VectorXd zp = z, zm = z;
          zp[j] += h;
          zm[j] -= h;
          H.col(j) = (phi_grad(beta, zp) - phi_grad(beta, zm)) / (2 * h);
        }
        Eigen::VectorXd dz = H.fullPivLu().solve(g);
        if (!dz.allFinite() || dz.lpNorm<Eigen::Infinity>() > 0.5) break;
        Eigen::VectorXd zn = z - dz;
        for (int i = 0; i < q; ++i) zn[i] = std::clamp(zn[i], -K - 1.0, K + 1.0);
        if (phi(beta, zn) < fv - 1e-12) break;
        z = zn;
        fv = phi(beta, z);
      }
      cands.push_back(z);
    }
  }

  if (cands.empty()) cands.push_back(Eigen::VectorXd::Zero(q));

  // keep the best representative per cluster
  std::vector<double> cvals;
  cvals.reserve(cands.size());
  for (const auto& z : cands) cvals.push_back(phi(beta, z));
  std::vector<std::size_t> order(cands.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cvals[a] > cvals[b]; });
  std::vector<Eigen::VectorXd> kept;
  std::vector<double> kept_vals;
  for (std::size_t idx : order) {
    bool dup = false;
    for (const auto& z : kept)
      if ((z - cands[idx]).norm() < opts.cluster_radius) dup = true;
    if (!dup) {
      kept.push_back(cands[idx]);
      kept_vals.push_back(cvals[idx]);
    }
  }
  double best = kept_vals.front();
  ms.p2 = best;

  std::vector<std::size_t> keep_idx;
  for (std::size_t i = 0; i < kept.size(); ++i)
    if (kept_vals[i] >= best - opts.value_tol) keep_idx.push_back(i);
  std::sort(keep_idx.begin(), keep_idx.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(kept[a].data(), kept[a].data() + q, kept[b].data(),
                                        kept[b].data() + q);
  });

  for (std::size_t i : keep_idx) {
    QuadraticMaximum qm;
    qm.z = kept[i];
    qm.value = kept_vals[i];

    const double h = opts.fd_step;
    if (opts.radial) {
      auto D = [&](double x) { return phi_grad(beta, along_e1(x))[0]; };
      qm.hessian = Eigen::MatrixXd(1, 1);
      qm.hessian(0, 0) = (D(qm.z[0] + h) - D(qm.z[0] - h)) / (2 * h);
    } else {
      Eigen::MatrixXd H(q, q);
      for (int j = 0; j < q; ++j) {
        Eigen::VectorXd zp = qm.z, zm = qm.z;
        zp[j] += h;
        zm[j] -= h;
        H.col(j) = (phi_grad(beta, zp) - phi_grad(beta, zm)) / (2 * h);
      }
      qm.hessian = 0.5 * (H + H.transpose());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(qm.hessian);
    double min_abs = eig.eigenvalues().cwiseAbs().minCoeff();
    qm.degenerate = min_abs < opts.degenerate_tol;

    qm.self_consistency =
        (qm.z - p_.at((beta * qm.z).eval()).grad).lpNorm<Eigen::Infinity>();

    if (q == 1 && qm.degenerate) {
      // leading even order of decay from two symmetric probes
      double d1 = qm.value - 0.5 * (phi(beta, along_e1(qm.z[0] + 0.04)) +
                                    phi(beta, along_e1(qm.z[0] - 0.04)));
      double d2 = qm.value - 0.5 * (phi(beta, along_e1(qm.z[0] + 0.08)) +
                                    phi(beta, along_e1(qm.z[0] - 0.08)));
      if (d1 > 0 && d2 > 0) {
        int half = std::max(2, static_cast<int>(std::lround(std::log2(d2 / d1) / 2.0)));
        qm.flatness_order = 2 * half;
        qm.flatness_coeff = d1 / std::pow(0.04, qm.flatness_order);
      }
    } else {
      qm.flatness_order = 2;
      qm.flatness_coeff = 0.5 * min_abs;
    }
    ms.maxima.push_back(std::move(qm));
  }
  return ms;
}

QuadraticPressure::P2Result QuadraticPressure::quadratic_pressure(double beta,
                                                                  const FindMaximaOptions& opts) {
  P2Result res;
  res.maxima = find_maxima(beta, opts);
  res.p2 = res.maxima.p2;
  res.phibar_at_max = -HUGE_VAL;
  for (const auto& qm : res.maxima.maxima)
    res.phibar_at_max = std::max(res.phibar_at_max, phibar(beta, qm.z));
  res.mismatch = std::abs(res.p2 - res.phibar_at_max);
  return res;
}

std::vector<QuadraticPressure::EquilibriumState> QuadraticPressure::equilibrium_states(
    double beta, const MaximaSet& maxima) {
  std::vector<EquilibriumState> out;
  for (const auto& qm : maxima.maxima) {
    EquilibriumState es;
    es.z = qm.z;
    Eigen::VectorXd t = beta * qm.z;
    es.spectral = p_.solve(t);
    es.psi_mean = p_.at(t).grad;
    out.push_back(std::move(es));
  }
  return out;
}

}  // namespace gcwp
