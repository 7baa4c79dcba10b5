#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcwp/errors.hpp"

namespace gcwp {

enum class AlphabetKind { finite, circle };

// A discretized single-site state space: either a finite symbol set with
// reference weights, or equispaced quadrature nodes on the unit circle
// standing in for normalized arc length.
struct AlphabetSpec {
  AlphabetKind kind = AlphabetKind::finite;
  std::vector<std::string> labels;  // finite only; one label per symbol
  std::vector<double> angles;       // circle only; node angles in [-pi, pi)
  std::vector<double> weights;      // positive, sums to 1 exactly after build

  int size() const { return static_cast<int>(weights.size()); }

  // Discrete metric between symbols, or chord distance between circle nodes.
  double distance(int a, int b) const;
};

// Validates labels/weights, renormalizes the weights so they sum to 1.
AlphabetSpec make_finite_alphabet(std::vector<std::string> labels,
                                  std::vector<double> weights);

// nodes equispaced angles theta_k = -pi + 2*pi*k/m with uniform weights 1/m.
// Requires m >= 4; powers of two give the cleanest trig quadrature.
AlphabetSpec make_circle_alphabet(int m);

// Which symbol may follow which: entry (a, b) == 1 iff b may follow a.
struct TransitionFn {
  int m = 0;
  std::vector<std::uint8_t> allow;     // row-major m*m
  std::optional<int> mixing_time;      // least N with A^N all-positive

  bool allows(int a, int b) const { return allow[static_cast<std::size_t>(a) * m + b] != 0; }
  bool all_ones() const;

  static TransitionFn ones(int m);
  static TransitionFn from_rows(const std::vector<std::vector<int>>& rows);
};

// Returns the least N <= n_max such that A^N has all entries positive and
// stores it in a.mixing_time.  Throws NotMixingError if no such N exists
// (decided exactly: reachability stabilizes within m*m steps).
int check_mixing(TransitionFn& a, int n_max = 64);

using Word = std::vector<int>;

struct WordFilter {
  enum class Kind { free_all, terminal, endpoints } kind = Kind::free_all;
  int a = -1;  // endpoints: required predecessor of the first symbol
  int b = -1;  // terminal/endpoints: required successor of the last symbol

  static WordFilter free_all() { return {}; }
  static WordFilter terminal(int b);
  static WordFilter endpoints(int a, int b);
};

// All A-admissible words of length n in lexicographic order, optionally
// constrained at the ends.  Throws CapExceededError if more than `cap`
// words would be produced.
std::vector<Word> enumerate_words(const TransitionFn& a, int n,
                                  WordFilter filter = WordFilter::free_all(),
                                  std::size_t cap = 1u << 22);

// Number of admissible words without materializing them (same filters).
double count_words(const TransitionFn& a, int n,
                   WordFilter filter = WordFilter::free_all());

}  // namespace gcwp
