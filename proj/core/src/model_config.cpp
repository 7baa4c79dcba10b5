#include "gcwp/model_config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace gcwp {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError("config: " + what); }

}  // namespace

ModelConfig ModelConfig::from_json(const json& j) {
  if (!j.is_object()) bad("top level must be a JSON object");
  ModelConfig c;
  try {
    c.alphabet = j.at("alphabet");
    c.potential = j.at("potential");
    if (j.contains("transition")) c.transition = j.at("transition");
    c.state_depth = j.value("state_depth", 0);
    c.beta = j.value("beta", 1.0);
    c.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      c.solver.tol = s.value("tol", c.solver.tol);
      c.solver.non_simple_tol = s.value("non_simple_tol", c.solver.non_simple_tol);
      c.solver.dense_threshold = s.value("dense_threshold", c.solver.dense_threshold);
      c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
    }
  } catch (const json::exception& e) {
    bad(e.what());
  }
  if (!c.alphabet.is_object()) bad("alphabet must be an object");
  if (!c.potential.is_object()) bad("potential must be an object");
  if (c.state_depth < 0 || c.state_depth > 8) bad("state_depth outside [0, 8]");
  if (!(c.beta == c.beta)) bad("beta must be a number");
  return c;
}

ModelConfig ModelConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) bad("cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    bad(std::string("parse error in ") + path + ": " + e.what());
  }
  return from_json(j);
}

json ModelConfig::to_json() const {
  json j;
  j["alphabet"] = alphabet;
  if (transition) j["transition"] = *transition;
  j["potential"] = potential;
  j["state_depth"] = state_depth;
  j["beta"] = beta;
  j["seed"] = seed;
  j["solver"] = {{"tol", solver.tol},
                 {"non_simple_tol", solver.non_simple_tol},
                 {"dense_threshold", solver.dense_threshold},
                 {"max_iter", solver.max_iter}};
  return j;
}

std::string ModelConfig::canonical_string() const { return to_json().dump(); }

std::uint64_t ModelConfig::hash() const { return fnv1a(canonical_string()); }

AlphabetSpec ModelConfig::build_alphabet() const {
  std::string kind;
  try {
    kind = alphabet.value("kind", "");
    if (kind == "finite") {
      auto labels = alphabet.at("labels").get<std::vector<std::string>>();
      std::vector<double> weights;
      if (alphabet.contains("weights"))
        weights = alphabet.at("weights").get<std::vector<double>>();
      else
        weights.assign(labels.size(), 1.0);
      return make_finite_alphabet(std::move(labels), std::move(weights));
    }
    if (kind == "circle") return make_circle_alphabet(alphabet.value("m", 0));
  } catch (const json::exception& e) {
    bad(e.what());
  }
  bad("unknown alphabet kind '" + kind + "'");
}

TransitionFn ModelConfig::build_transition() const {
  if (!transition) return TransitionFn::ones(build_alphabet().size());
  try {
    auto rows = transition->at("rows").get<std::vector<std::vector<int>>>();
    return TransitionFn::from_rows(rows);
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

TransferModel ModelConfig::build_model(int min_state_depth) const {
  AlphabetSpec alpha = build_alphabet();
  TransitionFn a = build_transition();
  if (a.m != alpha.size()) bad("transition size does not match the alphabet");
  check_mixing(a);

  std::string kind = potential.value("kind", "");
  PotentialVec psi;
  if (kind == "indicator") {
    psi = make_indicator_potential(alpha, a);
  } else if (kind == "plus_minus") {
    psi = make_plus_minus_potential(alpha, a);
  } else if (kind == "xy") {
    psi = make_xy_potential(alpha, a);
  } else if (kind == "table") {
    int depth = 1;
    Eigen::MatrixXd values;
    try {
      depth = potential.value("depth", 1);
      auto rows = potential.at("values").get<std::vector<std::vector<double>>>();
      if (rows.empty()) bad("table potential needs at least one row");
      values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) bad("table rows must have equal length");
        for (std::size_t k = 0; k < rows[i].size(); ++k)
          values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
      }
    } catch (const json::exception& e) {
      bad(e.what());
    }
    psi = make_table_potential(alpha, a, depth, values);
  } else {
    bad("unknown potential kind '" + kind + "'");
  }

  int sd = std::max(state_depth, min_state_depth);
  return TransferModel(std::move(alpha), std::move(a), std::move(psi), sd);
}

}  // namespace gcwp
