// Command line front end: each subcommand builds a model from a JSON config,
// runs one library entry point and writes a deterministic JSON or CSV report.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gcwp/model_config.hpp"
#include "gcwp/pgm.hpp"
#include "gcwp/pressure.hpp"
#include "gcwp/quadratic.hpp"
#include "gcwp/xy.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using nlohmann::json;
using namespace gcwp;

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json run_header(const ModelConfig& cfg) {
  json j;
  j["tool_version"] = kVersion;
  j["config_hash"] = hash_hex(cfg.hash());
  j["seed"] = cfg.seed;
  return j;
}

void write_text(const std::string& out_path, const std::string& body) {
  if (out_path.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out.good()) throw ConfigError("cannot open output file " + out_path);
  out << body;
}

void write_json(const std::string& out_path, const json& j) {
  write_text(out_path, j.dump(2) + "\n");
}

std::string csv_preamble(const ModelConfig& cfg) {
  std::ostringstream ss;
  ss << "# tool_version=" << kVersion << "\n";
  ss << "# config_hash=" << hash_hex(cfg.hash()) << " seed=" << cfg.seed << "\n";
  return ss.str();
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<Eigen::Index>(i)] = v[i];
  return x;
}

json maximum_to_json(const QuadraticMaximum& m) {
  json j;
  j["z"] = std::vector<double>(m.z.data(), m.z.data() + m.z.size());
  j["value"] = m.value;
  j["degenerate"] = m.degenerate;
  j["flatness_order"] = m.flatness_order;
  j["flatness_coeff"] = m.flatness_coeff;
  j["self_consistency"] = m.self_consistency;
  return j;
}

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
  if (needs_config)
    cmd->add_option("--config", args.config_path, "model configuration JSON")->required();
  cmd->add_option("--out", args.out_path, "output file (default: stdout)");
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--threads", args.threads, "worker threads for sampling");
}

ModelConfig load_config(const CommonArgs& args) {
  ModelConfig cfg = ModelConfig::from_file(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  return cfg;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const CapExceededError*>(&e) ||
      dynamic_cast<const DepthUnsupportedError*>(&e) ||
      dynamic_cast<const UnsupportedError*>(&e))
    return 4;
  return 3;  // numerical guards: no convergence, non-simple leading pair,
             // not mixing, ambiguous boundary, degenerate maximum, low ESS
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermodynamic-formalism engine for generalized mean-field chains"};
  app.set_version_flag("--version", std::string("gcwp ") + kVersion);
  app.require_subcommand(1);

  // spectral
  CommonArgs spectral_args;
  std::vector<double> spectral_t;
  auto* cmd_spectral = app.add_subcommand("spectral", "leading eigendata at a tilt t");
  add_common(cmd_spectral, spectral_args, true);
  cmd_spectral->add_option("--t", spectral_t, "tilt vector, one entry per potential component")
      ->required()
      ->delimiter(',');

  // pressure-surface
  CommonArgs surface_args;
  double surface_min = -1, surface_max = 1;
  int surface_steps = 11;
  auto* cmd_surface = app.add_subcommand("pressure-surface", "pressure on a tilt grid (CSV)");
  add_common(cmd_surface, surface_args, true);
  cmd_surface->add_option("--min", surface_min, "grid lower bound per coordinate")->required();
  cmd_surface->add_option("--max", surface_max, "grid upper bound per coordinate")->required();
  cmd_surface->add_option("--steps", surface_steps, "grid points per coordinate")->required();

  // entropy
  CommonArgs entropy_args;
  std::vector<double> entropy_z;
  auto* cmd_entropy = app.add_subcommand("entropy", "Legendre-transform entropy at z");
  add_common(cmd_entropy, entropy_args, true);
  cmd_entropy->add_option("--z", entropy_z, "mean-potential vector")->required()->delimiter(',');

  // maxima
  CommonArgs maxima_args;
  std::optional<double> maxima_beta;
  auto* cmd_maxima = app.add_subcommand("maxima", "maximizers of the quadratic pressure");
  add_common(cmd_maxima, maxima_args, true);
  cmd_maxima->add_option("--beta", maxima_beta, "override the config beta");

  // p2-sweep
  CommonArgs sweep_args;
  std::vector<double> sweep_betas;
  auto* cmd_sweep = app.add_subcommand("p2-sweep", "quadratic pressure over betas (CSV)");
  add_common(cmd_sweep, sweep_args, true);
  cmd_sweep->add_option("--betas", sweep_betas, "beta values")->required()->delimiter(',');

  // pgm-converge
  CommonArgs conv_args;
  std::vector<long> conv_ns;
  std::vector<int> conv_obs;
  std::string conv_method = "exact";
  long conv_samples = 100000;
  std::optional<double> conv_beta;
  auto* cmd_conv =
      app.add_subcommand("pgm-converge", "finite-n Gibbs expectations vs the limit mixture");
  add_common(cmd_conv, conv_args, true);
  cmd_conv->add_option("--ns", conv_ns, "word lengths")->required()->delimiter(',');
  cmd_conv->add_option("--obs", conv_obs, "indicator observable prefix (symbol indices)")
      ->required()
      ->delimiter(',');
  cmd_conv->add_option("--method", conv_method, "exact | mc");
  cmd_conv->add_option("--samples", conv_samples, "Monte Carlo sample count");
  cmd_conv->add_option("--beta", conv_beta, "override the config beta");

  // hs-check
  CommonArgs hs_args;
  std::vector<double> hs_xi;
  int hs_nodes = 64;
  auto* cmd_hs = app.add_subcommand("hs-check", "Gaussian linearization identity error");
  add_common(cmd_hs, hs_args, false);
  cmd_hs->add_option("--xi", hs_xi, "evaluation point, dimension <= 3")->required()->delimiter(
      ',');
  cmd_hs->add_option("--nodes", hs_nodes, "quadrature nodes per dimension");

  // xy-phase
  CommonArgs xy_args;
  double xy_beta = 1.0;
  auto* cmd_xy = app.add_subcommand("xy-phase", "radial phase data of the planar model");
  add_common(cmd_xy, xy_args, false);
  cmd_xy->add_option("--beta", xy_beta, "inverse temperature")->required();

  // laplace-check
  CommonArgs lap_args;
  double lap_alpha = 2, lap_gamma = 0, lap_n = 100, lap_b = 1;
  auto* cmd_lap =
      app.add_subcommand("laplace-check", "truncated Laplace integral vs first-order asymptotics");
  add_common(cmd_lap, lap_args, false);
  cmd_lap->add_option("--alpha", lap_alpha, "decay exponent")->required();
  cmd_lap->add_option("--gamma", lap_gamma, "polynomial weight exponent");
  cmd_lap->add_option("--n", lap_n, "large parameter")->required();
  cmd_lap->add_option("--b", lap_b, "integration cutoff")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*cmd_spectral) {
      ModelConfig cfg = load_config(spectral_args);
      TransferModel model = cfg.build_model();
      auto op = assemble_operator(model, to_eigen(spectral_t));
      SpectralData sd = spectral_solve(op, cfg.solver);
      json j = run_header(cfg);
      j.update(spectral_to_json(sd));
      j["t"] = spectral_t;
      write_json(spectral_args.out_path, j);
    } else if (*cmd_surface) {
      ModelConfig cfg = load_config(surface_args);
      if (surface_steps < 1 || surface_steps > 10000)
        throw ConfigError("steps outside [1, 10000]");
      if (!(surface_min <= surface_max)) throw ConfigError("min must be <= max");
      PressureMap p(cfg.build_model(), cfg.solver);
      int q = p.model().q();
      long total = 1;
      for (int i = 0; i < q; ++i) {
        total *= surface_steps;
        if (total > 200000) throw CapExceededError("pressure grid larger than 200000 points");
      }
      std::ostringstream ss;
      ss << csv_preamble(cfg);
      ss << "t";
      for (int i = 1; i < q; ++i) ss << ",t" << i + 1;
      ss << ",logr\n";
      std::vector<double> t(static_cast<std::size_t>(q), surface_min);
      std::vector<int> idx(static_cast<std::size_t>(q), 0);
      for (long row = 0; row < total; ++row) {
        for (int i = 0; i < q; ++i)
          t[static_cast<std::size_t>(i)] =
              surface_steps == 1 ? surface_min
                                 : surface_min + (surface_max - surface_min) * idx[i] /
                                                     (surface_steps - 1);
        double v = p.value(t);
        for (int i = 0; i < q; ++i) ss << (i ? "," : "") << format_double(t[i]);
        ss << "," << format_double(v) << "\n";
        for (int i = q - 1; i >= 0; --i) {
          if (++idx[i] < surface_steps) break;
          idx[i] = 0;
        }
      }
      write_text(surface_args.out_path, ss.str());
    } else if (*cmd_entropy) {
      ModelConfig cfg = load_config(entropy_args);
      PressureMap p(cfg.build_model(), cfg.solver);
      EntropyValue ev = p.entropy(to_eigen(entropy_z));
      json j = run_header(cfg);
      j["z"] = entropy_z;
      j["status"] = ev.status == EntropyStatus::finite ? "finite"
                    : ev.status == EntropyStatus::minus_infinity ? "minus_infinity"
                                                                 : "boundary";
      j["value"] = ev.value == -HUGE_VAL ? json("-inf") : json(ev.value);
      if (ev.status == EntropyStatus::finite)
        j["argmin"] = std::vector<double>(ev.argmin.data(), ev.argmin.data() + ev.argmin.size());
      write_json(entropy_args.out_path, j);
    } else if (*cmd_maxima) {
      ModelConfig cfg = load_config(maxima_args);
      PressureMap p(cfg.build_model(), cfg.solver);
      QuadraticPressure q(p);
      double beta = maxima_beta.value_or(cfg.beta);
      auto r = q.quadratic_pressure(beta);
      json j = run_header(cfg);
      j["beta"] = beta;
      j["p2"] = r.p2;
      j["phibar_at_max"] = r.phibar_at_max;
      j["mismatch"] = r.mismatch;
      j["k_box"] = r.maxima.k_box;
      j["maxima"] = json::array();
      for (const auto& m : r.maxima.maxima) j["maxima"].push_back(maximum_to_json(m));
      write_json(maxima_args.out_path, j);
    } else if (*cmd_sweep) {
      ModelConfig cfg = load_config(sweep_args);
      PressureMap p(cfg.build_model(), cfg.solver);
      QuadraticPressure q(p);
      std::ostringstream ss;
      ss << csv_preamble(cfg);
      ss << "beta,p2,phibar_at_max,mismatch,n_maxima,z_first\n";
      for (double beta : sweep_betas) {
        if (!(beta > 0)) throw ConfigError("beta values must be positive");
        auto r = q.quadratic_pressure(beta);
        double z_first = r.maxima.maxima.empty() ? 0.0 : r.maxima.maxima.front().z[0];
        ss << format_double(beta) << "," << format_double(r.p2) << ","
           << format_double(r.phibar_at_max) << "," << format_double(r.mismatch) << ","
           << r.maxima.maxima.size() << "," << format_double(z_first) << "\n";
      }
      write_text(sweep_args.out_path, ss.str());
    } else if (*cmd_conv) {
      ModelConfig cfg = load_config(conv_args);
      TransferModel model = cfg.build_model(std::max<int>(1, conv_obs.size()));
      PressureMap p(model, cfg.solver);
      QuadraticPressure q(p);
      auto f = make_indicator_observable(conv_obs);
      PgmMethod method;
      if (conv_method == "exact")
        method = PgmMethod::exact;
      else if (conv_method == "mc")
        method = PgmMethod::mc;
      else
        throw ConfigError("method must be 'exact' or 'mc'");
      McOptions mo;
      mo.samples = conv_samples;
      mo.seed = cfg.seed;
      mo.threads = conv_args.threads.value_or(1);
      double beta = conv_beta.value_or(cfg.beta);
      ConvergenceReport rep = convergence_test(q, model, beta, f, conv_ns, method, mo);
      json j = run_header(cfg);
      j["beta"] = beta;
      j["method"] = rep.method;
      j["ns"] = rep.ns;
      j["values"] = rep.values;
      j["stderrs"] = rep.stderrs;
      j["gaps"] = rep.gaps;
      j["prediction"] = rep.prediction;
      j["final_gap"] = rep.final_gap;
      j["pass"] = rep.pass;
      write_json(conv_args.out_path, j);
    } else if (*cmd_hs) {
      double err = gaussian_identity_check(to_eigen(hs_xi), hs_nodes);
      json j;
      j["tool_version"] = kVersion;
      j["xi"] = hs_xi;
      j["nodes"] = hs_nodes;
      j["rel_err"] = err;
      write_json(hs_args.out_path, j);
    } else if (*cmd_xy) {
      XyCriticalData c = xy_critical_point(xy_beta);
      json j;
      j["tool_version"] = kVersion;
      j["beta"] = c.beta;
      j["regime"] = c.regime == XyRegime::subcritical    ? "subcritical"
                    : c.regime == XyRegime::critical     ? "critical"
                                                         : "supercritical";
      j["r_star"] = c.r_star;
      j["phi_max"] = c.phi_max;
      j["second_deriv"] = c.second_deriv;
      j["lower_bound"] = c.lower_bound;
      write_json(xy_args.out_path, j);
    } else if (*cmd_lap) {
      LaplaceTail t = laplace_tail(lap_alpha, lap_gamma, lap_n, lap_b);
      json j;
      j["tool_version"] = kVersion;
      j["alpha"] = lap_alpha;
      j["gamma"] = lap_gamma;
      j["n"] = lap_n;
      j["b"] = lap_b;
      j["integral"] = t.integral;
      j["asymptotic"] = t.asymptotic;
      j["ratio"] = t.ratio;
      write_json(lap_args.out_path, j);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
