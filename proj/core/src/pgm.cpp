#include "gcwp/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "gcwp/xy.hpp"
#include "sampling_detail.hpp"

namespace gcwp {

CylinderObservable make_indicator_observable(std::vector<int> prefix) {
  if (prefix.empty()) throw ConfigError("indicator prefix must be nonempty");
  CylinderObservable f;
  f.depth = static_cast<int>(prefix.size());
  f.id = "ind";
  for (int s : prefix) f.id += ":" + std::to_string(s);
  f.on_nodes = [prefix](const int* word) {
    for (std::size_t j = 0; j < prefix.size(); ++j)
      if (word[j] != prefix[j]) return 0.0;
    return 1.0;
  };
  return f;
}

CylinderObservable make_table_observable(const AlphabetSpec& alpha, int depth,
                                         const Eigen::VectorXd& values) {
  if (depth < 1) throw ConfigError("table depth must be positive");
  const int m = alpha.size();
  std::size_t rows = 1;
  for (int j = 0; j < depth; ++j) rows *= static_cast<std::size_t>(m);
  if (static_cast<std::size_t>(values.size()) != rows)
    throw ConfigError("table size does not match alphabet and depth");
  CylinderObservable f;
  f.depth = depth;
  f.id = "table";
  Eigen::VectorXd table = values;
  f.on_nodes = [table, m, depth](const int* word) {
    std::size_t idx = 0, stride = 1;
    for (int j = 0; j < depth; ++j) {
      idx += static_cast<std::size_t>(word[j]) * stride;
      stride *= static_cast<std::size_t>(m);
    }
    return table[static_cast<Eigen::Index>(idx)];
  };
  return f;
}

CylinderObservable make_cos0_observable() {
  CylinderObservable f;
  f.depth = 1;
  f.id = "cos0";
  f.on_angles = [](const double* a) { return std::cos(a[0]); };
  f.tilted_mean = [](double kappa) { return bessel_ratio(kappa); };
  return f;
}

CylinderObservable make_cos_diff_observable() {
  CylinderObservable f;
  f.depth = 2;
  f.id = "cos_diff";
  f.on_angles = [](const double* a) { return std::cos(a[0] - a[1]); };
  f.tilted_mean = [](double kappa) {
    double r = bessel_ratio(kappa);
    return r * r;
  };
  return f;
}

Eigen::VectorXd compile_observable(const TransferModel& model, const CylinderObservable& f) {
  if (f.depth > model.state_depth())
    throw DepthUnsupportedError("observable deeper than the state words");
  const auto& states = model.states();
  const bool circle = model.alphabet().kind == AlphabetKind::circle;
  Eigen::VectorXd out(static_cast<Eigen::Index>(states.size()));
  std::vector<double> angles(f.depth);
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (f.on_nodes) {
      out[static_cast<Eigen::Index>(s)] = f.on_nodes(states[s].data());
    } else if (circle && f.on_angles) {
      for (int j = 0; j < f.depth; ++j) angles[j] = model.alphabet().angles[states[s][j]];
      out[static_cast<Eigen::Index>(s)] = f.on_angles(angles.data());
    } else {
      throw ConfigError("observable lacks a usable evaluation");
    }
  }
  return out;
}

double pgm_hamiltonian(const TransferModel& model, std::span<const int> word, long n) {
  if (static_cast<long>(word.size()) != n || n < 1)
    throw ConfigError("word length must equal n");
  const PotentialVec& psi = model.psi();
  Eigen::VectorXd S = Eigen::VectorXd::Zero(psi.q), v(psi.q);
  std::vector<int> window(psi.depth);
  for (long k = 0; k < n; ++k) {
    for (int j = 0; j < psi.depth; ++j) window[j] = word[(k + j) % n];
    psi.on_nodes(window.data(), v.data());
    S += v;
  }
  return -S.squaredNorm() / (2.0 * n);
}

namespace {

double log_binomial(double a, double b) {
  return std::lgamma(a + 1) - std::lgamma(b + 1) - std::lgamma(a - b + 1);
}

// E[f] over word prefixes given the symbol counts of an exchangeable word:
// joint falling-factorial probabilities.
double prefix_conditional(const std::vector<long>& c, long n, int m, int dep,
                          const std::function<double(const int*)>& f) {
  std::vector<int> p(dep, 0);
  double acc = 0;
  while (true) {
    double prob = 1;
    for (int j = 0; j < dep && prob > 0; ++j) {
      long seen = 0;
      for (int k = 0; k < j; ++k)
        if (p[k] == p[j]) ++seen;
      prob *= static_cast<double>(c[p[j]] - seen) / static_cast<double>(n - j);
      if (prob < 0) prob = 0;
    }
    if (prob > 0) acc += prob * f(p.data());
    int j = 0;
    for (; j < dep; ++j) {
      if (++p[j] < m) break;
      p[j] = 0;
    }
    if (j == dep) break;
  }
  return acc;
}

// log-space DP over (symbol counts, last symbol) for transition-constrained
// words; returns the map from final count vectors to per-last-symbol log
// counts of admissible arrangements.
using CountTable = std::map<std::vector<long>, std::vector<double>>;

double logaddexp(double a, double b) {
  if (a == -HUGE_VAL) return b;
  if (b == -HUGE_VAL) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

CountTable dp_advance(const CountTable& cur, const TransitionFn& a, long steps,
                      std::size_t cap) {
  const int m = a.m;
  CountTable table = cur;
  for (long s = 0; s < steps; ++s) {
    CountTable next;
    for (const auto& [counts, last] : table) {
      for (int x = 0; x < m; ++x) {
        if (last[x] == -HUGE_VAL) continue;
        for (int y = 0; y < m; ++y) {
          if (!a.allows(x, y)) continue;
          std::vector<long> key = counts;
          ++key[y];
          auto it = next.find(key);
          if (it == next.end())
            it = next.emplace(std::move(key), std::vector<double>(m, -HUGE_VAL)).first;
          it->second[y] = logaddexp(it->second[y], last[x]);
        }
      }
    }
    if (next.size() * m > cap) throw CapExceededError("count DP exceeds cap");
    table = std::move(next);
  }
  return table;
}

}  // namespace

PgmEstimate exact_pgm(const TransferModel& model, long n, double beta,
                      const CylinderObservable& f, std::size_t cap) {
  const PotentialVec& psi = model.psi();
  if (psi.depth != 1)
    throw DepthUnsupportedError("exact summation needs a depth-1 potential");
  const int m = model.alphabet().size();
  const int q = psi.q;
  const int dep = f.depth;
  if (n < dep || n < 1) throw ConfigError("word length shorter than the observable");

  // node evaluation of f, through the angle table when needed
  std::function<double(const int*)> feval = f.on_nodes;
  if (!feval) {
    if (model.alphabet().kind != AlphabetKind::circle || !f.on_angles)
      throw ConfigError("observable lacks a usable evaluation");
    std::vector<double> angles = model.alphabet().angles;
    auto fa = f.on_angles;
    int d = dep;
    feval = [fa, angles, d](const int* word) {
      std::vector<double> a(d);
      for (int j = 0; j < d; ++j) a[j] = angles[word[j]];
      return fa(a.data());
    };
  }

  Eigen::MatrixXd Psi(m, q);
  {
    Eigen::VectorXd v(q);
    for (int i = 0; i < m; ++i) {
      psi.on_nodes(&i, v.data());
      Psi.row(i) = v;
    }
  }
  std::vector<double> logw(m);
  for (int i = 0; i < m; ++i) logw[i] = std::log(model.alphabet().weights[i]);

  PgmEstimate est;
  est.n = n;
  est.beta = beta;
  est.method = "exact";

  auto count_energy = [&](const std::vector<long>& c) {
    Eigen::VectorXd S = Eigen::VectorXd::Zero(q);
    double lw = 0;
    for (int i = 0; i < m; ++i) {
      S += static_cast<double>(c[i]) * Psi.row(i).transpose();
      lw += static_cast<double>(c[i]) * logw[i];
    }
    return lw + beta / (2.0 * n) * S.squaredNorm();
  };

  if (model.transition().all_ones()) {
    double n_comp = std::exp(log_binomial(static_cast<double>(n) + m - 1, m - 1.0));
    if (n_comp > static_cast<double>(cap))
      throw CapExceededError("too many count vectors for the cap");

    // extended precision throughout: log Z must come out at zero to ~1e-15
    // when beta = 0, which plain double lgamma cannot deliver at n ~ 30
    std::vector<long double> lfact(static_cast<std::size_t>(n) + 1);
    lfact[0] = 0;
    for (long k = 1; k <= n; ++k)
      lfact[static_cast<std::size_t>(k)] =
          lfact[static_cast<std::size_t>(k) - 1] + std::log(static_cast<long double>(k));
    std::vector<long double> logwl(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
      logwl[static_cast<std::size_t>(i)] =
          std::log(static_cast<long double>(model.alphabet().weights[i]));

    long double M = -HUGE_VALL, s0 = 0, s1 = 0;
    std::vector<long> c(m, 0);
    std::function<void(int, long)> rec = [&](int i, long left) {
      if (i == m - 1) {
        c[i] = left;
        Eigen::VectorXd S = Eigen::VectorXd::Zero(q);
        long double lt = lfact[static_cast<std::size_t>(n)];
        for (int k = 0; k < m; ++k) {
          S += static_cast<double>(c[k]) * Psi.row(k).transpose();
          lt += c[k] * logwl[static_cast<std::size_t>(k)];
          lt -= lfact[static_cast<std::size_t>(c[k])];
        }
        lt += beta / (2.0 * n) * S.squaredNorm();
        double cond = prefix_conditional(c, n, m, dep, feval);
        if (lt > M) {
          long double sc = std::exp(M - lt);
          s0 *= sc;
          s1 *= sc;
          M = lt;
        }
        long double w = std::exp(lt - M);
        s0 += w;
        s1 += w * cond;
        return;
      }
      for (long k = 0; k <= left; ++k) {
        c[i] = k;
        rec(i + 1, left - k);
      }
    };
    rec(0, n);
    est.value = static_cast<double>(s1 / s0);
    est.logz = static_cast<double>(M + std::log(s0));
    return est;
  }

  // constrained transitions: full DP for Z, then one DP per observable prefix
  CountTable start;
  for (int s = 0; s < m; ++s) {
    std::vector<long> key(m, 0);
    ++key[s];
    auto it = start.find(key);
    if (it == start.end())
      it = start.emplace(std::move(key), std::vector<double>(m, -HUGE_VAL)).first;
    it->second[s] = 0.0;
  }
  CountTable full = dp_advance(start, model.transition(), n - 1, cap);
  double logZ_full = -HUGE_VAL;
  for (const auto& [counts, last] : full) {
    double logN = -HUGE_VAL;
    for (double v : last) logN = logaddexp(logN, v);
    logZ_full = logaddexp(logZ_full, logN + count_energy(counts));
  }

  double M = -HUGE_VAL, s0 = 0, s1 = 0;
  for (const Word& p : enumerate_words(model.transition(), dep)) {
    double fp = feval(p.data());
    CountTable pstart;
    std::vector<long> key(m, 0);
    for (int s : p) ++key[s];
    pstart.emplace(key, std::vector<double>(m, -HUGE_VAL)).first->second[p.back()] = 0.0;
    CountTable tab = dp_advance(pstart, model.transition(), n - dep, cap);
    for (const auto& [counts, last] : tab) {
      double logN = -HUGE_VAL;
      for (double v : last) logN = logaddexp(logN, v);
      double lt = logN + count_energy(counts);
      if (lt > M) {
        double sc = std::exp(M - lt);
        s0 *= sc;
        s1 *= sc;
        M = lt;
      }
      double w = std::exp(lt - M);
      s0 += w;
      s1 += w * fp;
    }
  }
  double logZ_parts = M + std::log(s0);
  if (std::abs(logZ_parts - logZ_full) > 1e-9 * std::max(1.0, std::abs(logZ_full)))
    throw NoConvergenceError("count DP consistency check failed");
  est.value = s1 / s0;
  est.logz = logZ_full;
  return est;
}

PgmEstimate mc_pgm(const TransferModel& model, long n, double beta,
                   const CylinderObservable& f, const McOptions& opts) {
  if (!model.transition().all_ones())
    throw UnsupportedError("product-measure sampling needs every word admissible");
  const PotentialVec& psi = model.psi();
  const int dep = f.depth;
  if (n < dep || n < psi.depth || n < 1) throw ConfigError("word length too small");
  if (opts.samples < 1 || opts.batch < 1) throw ConfigError("sample counts must be positive");
  const bool circle = model.alphabet().kind == AlphabetKind::circle;
  if (circle && (!psi.on_angles || !f.on_angles))
    throw ConfigError("circle sampling needs angle evaluation");
  if (!circle && (!psi.on_nodes || !f.on_nodes))
    throw ConfigError("finite sampling needs node evaluation");

  const int m = model.alphabet().size();
  std::vector<double> cum(m);
  double acc = 0;
  for (int i = 0; i < m; ++i) {
    acc += model.alphabet().weights[i];
    cum[i] = acc;
  }

  const long batches = (opts.samples + opts.batch - 1) / opts.batch;
  const int q = psi.q;
  const int pd = psi.depth;

  auto batch_fn = [&](long b) {
    detail::Rng rng(detail::substream(opts.seed, static_cast<std::uint64_t>(b)));
    long count = std::min<long>(opts.batch, opts.samples - b * opts.batch);
    detail::WeightedSums ws;
    std::vector<double> angles(static_cast<std::size_t>(n));
    std::vector<int> syms(static_cast<std::size_t>(n));
    std::vector<double> awin(pd);
    std::vector<int> swin(pd);
    Eigen::VectorXd S(q), v(q);
    for (long s = 0; s < count; ++s) {
      if (circle) {
        for (long k = 0; k < n; ++k)
          angles[static_cast<std::size_t>(k)] =
              -std::numbers::pi + 2 * std::numbers::pi * rng.uniform();
      } else {
        for (long k = 0; k < n; ++k) {
          double u = rng.uniform();
          int sym = 0;
          while (sym + 1 < m && u >= cum[sym]) ++sym;
          syms[static_cast<std::size_t>(k)] = sym;
        }
      }
      S.setZero();
      for (long k = 0; k < n; ++k) {
        if (circle) {
          if (pd == 1) {
            psi.on_angles(&angles[static_cast<std::size_t>(k)], v.data());
          } else {
            for (int j = 0; j < pd; ++j) awin[j] = angles[static_cast<std::size_t>((k + j) % n)];
            psi.on_angles(awin.data(), v.data());
          }
        } else {
          if (pd == 1) {
            psi.on_nodes(&syms[static_cast<std::size_t>(k)], v.data());
          } else {
            for (int j = 0; j < pd; ++j) swin[j] = syms[static_cast<std::size_t>((k + j) % n)];
            psi.on_nodes(swin.data(), v.data());
          }
        }
        S += v;
      }
      double lw = beta / (2.0 * n) * S.squaredNorm();
      double fv = circle ? f.on_angles(angles.data()) : f.on_nodes(syms.data());
      ws.add(lw, fv);
    }
    return ws;
  };

  detail::WeightedSums total = detail::run_batches(batches, opts.threads, batch_fn);

  PgmEstimate est;
  est.n = n;
  est.beta = beta;
  est.method = "mc";
  est.ess = total.s0 * total.s0 / total.s2;
  if (est.ess < opts.min_ess) throw LowEssError("effective sample size below the floor");
  est.value = total.s1 / total.s0;
  double varsum = total.s4 - 2 * est.value * total.s3 + est.value * est.value * total.s2;
  est.stderr_ = std::sqrt(std::max(0.0, varsum)) / total.s0;
  est.logz = total.m + std::log(total.s0) - std::log(static_cast<double>(opts.samples));
  return est;
}

double gaussian_identity_check(const Eigen::VectorXd& xi, int nodes_per_dim) {
  const int q = static_cast<int>(xi.size());
  if (q < 1 || q > 3) throw ConfigError("identity check supports 1 <= q <= 3");
  if (nodes_per_dim < 2 || nodes_per_dim > 128)
    throw ConfigError("nodes_per_dim must lie in [2, 128]");
  if (xi.norm() > 8.0) throw ConfigError("tilt too far for the quadrature to certify");

  // Gauss-Hermite rule via the Jacobi matrix
  const int nq = nodes_per_dim;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nq, nq);
  for (int k = 1; k < nq; ++k) {
    double b = std::sqrt(k / 2.0);
    J(k - 1, k) = b;
    J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Eigen::VectorXd x = es.eigenvalues();
  Eigen::VectorXd w(nq);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < nq; ++i) {
    double v0 = es.eigenvectors()(0, i);
    w[i] = sqrt_pi * v0 * v0;
  }

  // tensor rule for pi^{-q/2} int e^{-|x|^2} e^{2 x.xi} dx = e^{|xi|^2}
  Eigen::MatrixXd expvals(nq, q);
  for (int d = 0; d < q; ++d)
    for (int i = 0; i < nq; ++i) expvals(i, d) = std::exp(2.0 * x[i] * xi[d]);
  double total = 0;
  std::vector<int> idx(q, 0);
  while (true) {
    double term = 1;
    for (int d = 0; d < q; ++d) term *= w[idx[d]] * expvals(idx[d], d);
    total += term;
    int d = 0;
    for (; d < q; ++d) {
      if (++idx[d] < nq) break;
      idx[d] = 0;
    }
    if (d == q) break;
  }
  double quad = total / std::pow(sqrt_pi, q);
  double exact = std::exp(xi.squaredNorm());
  return std::abs(quad - exact) / exact;
}

LimitMixture limit_mixture(QuadraticPressure& q, double beta, const MaximaSet& maxima) {
  const TransferModel& model = q.pressure().model();
  if (!model.transition().all_ones())
    throw UnsupportedError("mixture weights need every word admissible");
  if (maxima.radial)
    throw UnsupportedError("a radial orbit of maxima has no finite mixture");
  const int dim = model.q();

  int ord_max = 2;
  for (const auto& qm : maxima.maxima) {
    if (dim > 1 && qm.degenerate)
      throw DegenerateMaximumError("degenerate maximum above one dimension");
    ord_max = std::max(ord_max, qm.flatness_order);
  }

  LimitMixture mix;
  mix.beta = beta;
  std::vector<double> raw;
  for (const auto& qm : maxima.maxima) {
    if (qm.flatness_order != ord_max) continue;  // slower decay dominates
    MixtureComponent comp;
    comp.z = qm.z;
    comp.flatness_order = qm.flatness_order;
    comp.spectral = q.pressure().solve((beta * qm.z).eval());

    double gint = 0;
    const auto& states = model.states();
    for (std::size_t s = 0; s < states.size(); ++s)
      gint += model.product_weight(states[s]) * comp.spectral.G[static_cast<Eigen::Index>(s)];

    double scale;
    if (dim == 1) {
      double c = qm.flatness_coeff;
      if (!(c > 0)) throw DegenerateMaximumError("flat maximum without a decay coefficient");
      scale = std::pow(c, -1.0 / qm.flatness_order);
    } else {
      double det = (-qm.hessian).determinant();
      if (!(det > 0)) throw DegenerateMaximumError("maximum hessian not negative definite");
      scale = 1.0 / std::sqrt(det);
    }
    raw.push_back(gint * scale);
    mix.components.push_back(std::move(comp));
  }
  double total = 0;
  for (double v : raw) total += v;
  for (std::size_t i = 0; i < raw.size(); ++i) mix.components[i].weight = raw[i] / total;
  return mix;
}

double mixture_expectation(const LimitMixture& mix, const TransferModel& model,
                           const CylinderObservable& f) {
  Eigen::VectorXd fv = compile_observable(model, f);
  double acc = 0;
  for (const auto& comp : mix.components) acc += comp.weight * comp.spectral.nu.dot(fv);
  return acc;
}

ConvergenceReport convergence_test(QuadraticPressure& q, const TransferModel& model,
                                   double beta, const CylinderObservable& f,
                                   const std::vector<long>& ns, PgmMethod method,
                                   const McOptions& mc, double tol) {
  if (ns.empty()) throw ConfigError("need at least one word length");
  MaximaSet ms = q.find_maxima(beta);
  LimitMixture mix = limit_mixture(q, beta, ms);

  ConvergenceReport rep;
  rep.ns = ns;
  rep.prediction = mixture_expectation(mix, model, f);
  rep.method = method == PgmMethod::exact ? "exact" : "mc";
  for (long n : ns) {
    PgmEstimate est = method == PgmMethod::exact ? exact_pgm(model, n, beta, f)
                                                 : mc_pgm(model, n, beta, f, mc);
    rep.values.push_back(est.value);
    rep.stderrs.push_back(est.stderr_);
    rep.gaps.push_back(std::abs(est.value - rep.prediction));
  }
  rep.final_gap = rep.gaps.back();
  bool mono = true;
  std::size_t from = rep.gaps.size() > 3 ? rep.gaps.size() - 3 : 0;
  for (std::size_t i = from; i + 1 < rep.gaps.size(); ++i)
    if (rep.gaps[i + 1] > rep.gaps[i]) mono = false;
  rep.pass = mono && rep.final_gap < tol;
  return rep;
}

}  // namespace gcwp
