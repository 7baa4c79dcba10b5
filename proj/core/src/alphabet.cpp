#include "gcwp/alphabet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>

namespace gcwp {

double AlphabetSpec::distance(int a, int b) const {
  if (kind == AlphabetKind::finite) return a == b ? 0.0 : 1.0;
  return 2.0 * std::abs(std::sin(0.5 * (angles[a] - angles[b])));
}

AlphabetSpec make_finite_alphabet(std::vector<std::string> labels,
                                  std::vector<double> weights) {
  if (labels.empty()) throw ConfigError("alphabet needs at least one symbol");
  if (labels.size() != weights.size())
    throw ConfigError("labels and weights must have the same length");
  std::set<std::string> uniq(labels.begin(), labels.end());
  if (uniq.size() != labels.size()) throw ConfigError("duplicate symbol labels");
  double sum = 0;
  for (double w : weights) {
    if (!(w > 0) || !std::isfinite(w)) throw ConfigError("weights must be positive and finite");
    sum += w;
  }
  AlphabetSpec a;
  a.kind = AlphabetKind::finite;
  a.labels = std::move(labels);
  a.weights = std::move(weights);
  for (double& w : a.weights) w /= sum;
  return a;
}

AlphabetSpec make_circle_alphabet(int m) {
  if (m < 4) throw ConfigError("circle discretization needs at least 4 nodes");
  AlphabetSpec a;
  a.kind = AlphabetKind::circle;
  a.angles.resize(m);
  a.weights.assign(m, 1.0 / m);
  for (int k = 0; k < m; ++k)
    a.angles[k] = -std::numbers::pi + 2.0 * std::numbers::pi * k / m;
  return a;
}

bool TransitionFn::all_ones() const {
  return std::all_of(allow.begin(), allow.end(), [](std::uint8_t v) { return v != 0; });
}

TransitionFn TransitionFn::ones(int m) {
  if (m < 1) throw ConfigError("transition needs at least one symbol");
  TransitionFn a;
  a.m = m;
  a.allow.assign(static_cast<std::size_t>(m) * m, 1);
  return a;
}

TransitionFn TransitionFn::from_rows(const std::vector<std::vector<int>>& rows) {
  int m = static_cast<int>(rows.size());
  if (m < 1) throw ConfigError("transition needs at least one symbol");
  TransitionFn a;
  a.m = m;
  a.allow.assign(static_cast<std::size_t>(m) * m, 0);
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(rows[i].size()) != m) throw ConfigError("transition rows must be square");
    for (int j = 0; j < m; ++j) {
      if (rows[i][j] != 0 && rows[i][j] != 1) throw ConfigError("transition entries must be 0/1");
      a.allow[static_cast<std::size_t>(i) * m + j] = static_cast<std::uint8_t>(rows[i][j]);
    }
  }
  return a;
}

int check_mixing(TransitionFn& a, int n_max) {
  const int m = a.m;
  // A primitive 0/1 matrix has an all-positive power by exponent
  // (m-1)^2 + 1 at the latest, so stopping there decides the question.
  int limit = std::min(n_max, (m - 1) * (m - 1) + 1);
  std::vector<std::uint8_t> p = a.allow;
  for (int n = 1; n <= limit; ++n) {
    if (std::all_of(p.begin(), p.end(), [](std::uint8_t v) { return v != 0; })) {
      a.mixing_time = n;
      return n;
    }
    std::vector<std::uint8_t> next(static_cast<std::size_t>(m) * m, 0);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k)
        if (p[static_cast<std::size_t>(i) * m + k])
          for (int j = 0; j < m; ++j)
            if (a.allow[static_cast<std::size_t>(k) * m + j])
              next[static_cast<std::size_t>(i) * m + j] = 1;
    p.swap(next);
  }
  throw NotMixingError("transition structure has no all-positive power");
}

WordFilter WordFilter::terminal(int b) {
  WordFilter f;
  f.kind = Kind::terminal;
  f.b = b;
  return f;
}

WordFilter WordFilter::endpoints(int a, int b) {
  WordFilter f;
  f.kind = Kind::endpoints;
  f.a = a;
  f.b = b;
  return f;
}

std::vector<Word> enumerate_words(const TransitionFn& a, int n, WordFilter filter,
                                  std::size_t cap) {
  if (n < 1) throw ConfigError("word length must be positive");
  const int m = a.m;
  std::vector<Word> out;
  Word w(n);
  auto first_ok = [&](int s) {
    return filter.kind != WordFilter::Kind::endpoints || a.allows(filter.a, s);
  };
  auto last_ok = [&](int s) {
    return filter.kind == WordFilter::Kind::free_all || a.allows(s, filter.b);
  };
  // depth-first in symbol order yields lexicographic output
  std::function<void(int)> rec = [&](int pos) {
    if (pos == n) {
      if (!last_ok(w.back())) return;
      if (out.size() >= cap) throw CapExceededError("word enumeration exceeds cap");
      out.push_back(w);
      return;
    }
    for (int s = 0; s < m; ++s) {
      if (pos == 0 && !first_ok(s)) continue;
      if (pos > 0 && !a.allows(w[pos - 1], s)) continue;
      w[pos] = s;
      rec(pos + 1);
    }
  };
  rec(0);
  return out;
}

double count_words(const TransitionFn& a, int n, WordFilter filter) {
  if (n < 1) throw ConfigError("word length must be positive");
  const int m = a.m;
  std::vector<double> cnt(m, 0.0);
  for (int s = 0; s < m; ++s)
    cnt[s] = (filter.kind != WordFilter::Kind::endpoints || a.allows(filter.a, s)) ? 1.0 : 0.0;
  for (int pos = 1; pos < n; ++pos) {
    std::vector<double> next(m, 0.0);
    for (int sp = 0; sp < m; ++sp)
      if (cnt[sp] > 0)
        for (int s = 0; s < m; ++s)
          if (a.allows(sp, s)) next[s] += cnt[sp];
    cnt.swap(next);
  }
  double total = 0;
  for (int s = 0; s < m; ++s)
    if (filter.kind == WordFilter::Kind::free_all || a.allows(s, filter.b)) total += cnt[s];
  return total;
}

}  // namespace gcwp
