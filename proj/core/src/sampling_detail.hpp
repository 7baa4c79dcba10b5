#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

namespace gcwp::detail {

// splitmix64: small, fully portable generator so that sampled streams are
// reproducible bit for bit independent of platform and thread count.
struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline std::uint64_t substream(std::uint64_t seed, std::uint64_t index) {
  Rng r(seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  return r.next();
}

// Max-shifted accumulator for self-normalized importance sums: keeps
// sum w, sum w f, sum w^2, sum w^2 f, sum w^2 f^2 relative to e^m.
struct WeightedSums {
  double m = -HUGE_VAL;
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;

  void add(double logw, double fv) {
    if (logw > m) {
      double c = std::exp(m - logw), c2 = c * c;
      s0 *= c;
      s1 *= c;
      s2 *= c2;
      s3 *= c2;
      s4 *= c2;
      m = logw;
    }
    double w = std::exp(logw - m), w2 = w * w;
    s0 += w;
    s1 += w * fv;
    s2 += w2;
    s3 += w2 * fv;
    s4 += w2 * fv * fv;
  }

  void merge(const WeightedSums& o) {
    if (o.s0 == 0) return;
    if (o.m > m) {
      double c = std::exp(m - o.m), c2 = c * c;
      s0 *= c;
      s1 *= c;
      s2 *= c2;
      s3 *= c2;
      s4 *= c2;
      m = o.m;
    }
    double c = std::exp(o.m - m), c2 = c * c;
    s0 += o.s0 * c;
    s1 += o.s1 * c;
    s2 += o.s2 * c2;
    s3 += o.s3 * c2;
    s4 += o.s4 * c2;
  }
};

// Runs `count` batch jobs on up to `threads` workers and merges the partial
// sums in batch order, so the result does not depend on the thread count.
template <typename BatchFn>
WeightedSums run_batches(long count, int threads, BatchFn&& batch_fn) {
  std::vector<WeightedSums> parts(static_cast<std::size_t>(count));
  int t = std::max(1, threads);
  if (t == 1 || count == 1) {
    for (long b = 0; b < count; ++b) parts[b] = batch_fn(b);
  } else {
    std::atomic<long> next{0};
    auto worker = [&] {
      for (long b = next.fetch_add(1); b < count; b = next.fetch_add(1)) parts[b] = batch_fn(b);
    };
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  WeightedSums total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace gcwp::detail
