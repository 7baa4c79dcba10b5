#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "gcwp/transfer.hpp"

namespace gcwp {

// Everything needed to reproduce a run: alphabet, transition structure,
// potential, solver knobs, seed.  Parses from JSON, fills defaults, and
// re-emits canonically so identical configs hash identically.
struct ModelConfig {
  nlohmann::json alphabet;              // {"kind":"finite"|"circle", ...}
  std::optional<nlohmann::json> transition;  // rows of 0/1; absent = all ones
  nlohmann::json potential;             // {"kind":"indicator"|"plus_minus"|"xy"|"table", ...}
  int state_depth = 0;                  // 0 = potential depth
  double beta = 1.0;
  SolveOptions solver;
  std::uint64_t seed = 1;

  static ModelConfig from_json(const nlohmann::json& j);
  static ModelConfig from_file(const std::string& path);
  nlohmann::json to_json() const;       // canonical: defaults made explicit
  std::string canonical_string() const;
  std::uint64_t hash() const;           // FNV-1a of the canonical string

  AlphabetSpec build_alphabet() const;
  TransitionFn build_transition() const;
  TransferModel build_model(int min_state_depth = 1) const;
};

// FNV-1a 64-bit, used for config hashes in output headers.
std::uint64_t fnv1a(const std::string& s);

// Fixed-width float formatting with 17 significant digits (round-trip safe).
std::string format_double(double v);

}  // namespace gcwp
