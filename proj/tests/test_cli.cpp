#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
  const char* p = std::getenv("GCWP_CLI");
  REQUIRE_MESSAGE(p != nullptr, "GCWP_CLI must point at the gcwp binary");
  return p;
}

fs::path work_dir() {
  auto d = fs::temp_directory_path() / "gcwp_cli_tests";
  fs::create_directories(d);
  return d;
}

int run(const std::string& args, const fs::path& log) {
  std::string cmd = cli_path() + " " + args + " >" + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

const char* kSpinConfig = R"({
  "alphabet": {"kind": "finite", "labels": ["+", "-"], "weights": [0.5, 0.5]},
  "potential": {"kind": "plus_minus"},
  "state_depth": 2,
  "beta": 2.0,
  "seed": 1
})";

const char* kGoldenMeanConfig = R"({
  "alphabet": {"kind": "finite", "labels": ["0", "1"], "weights": [0.5, 0.5]},
  "transition": {"rows": [[0, 1], [1, 1]]},
  "potential": {"kind": "indicator"},
  "state_depth": 1,
  "beta": 1.0,
  "seed": 1
})";

}  // namespace

TEST_CASE("spectral subcommand: exact value, reruns byte-identical, header fields") {
  auto dir = work_dir();
  put(dir / "gm.json", kGoldenMeanConfig);
  auto out = dir / "spectral.json";
  int rc = run("spectral --config " + (dir / "gm.json").string() + " --t 0,0 --out " +
                   out.string(),
               dir / "spectral.log");
  CHECK(rc == 0);
  auto first = slurp(out);
  auto j = json::parse(first);
  CHECK(j.contains("tool_version"));
  CHECK(j.contains("config_hash"));
  CHECK(j.contains("seed"));
  // uniform-weight golden mean at t = 0: leading eigenvalue is phi/2
  double expected = std::log((1.0 + std::sqrt(5.0)) / 4.0);
  CHECK(j["logr"].get<double>() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(j["gap"].get<double>() > 0.0);

  rc = run("spectral --config " + (dir / "gm.json").string() + " --t 0,0 --out " + out.string(),
           dir / "spectral2.log");
  CHECK(rc == 0);
  CHECK(slurp(out) == first);
}

TEST_CASE("entropy subcommand matches the binary entropy closed form") {
  auto dir = work_dir();
  put(dir / "spin.json", kSpinConfig);
  auto out = dir / "entropy.json";
  int rc = run("entropy --config " + (dir / "spin.json").string() + " --z 0.3 --out " +
                   out.string(),
               dir / "entropy.log");
  CHECK(rc == 0);
  auto j = json::parse(slurp(out));
  double z = 0.3;
  double closed = -((1 + z) / 2) * std::log(1 + z) - ((1 - z) / 2) * std::log(1 - z);
  CHECK(j["status"].get<std::string>() == "finite");
  CHECK(j["value"].get<double>() == doctest::Approx(closed).epsilon(1e-7));
}

TEST_CASE("maxima subcommand reports the symmetric pair above the transition") {
  auto dir = work_dir();
  put(dir / "spin.json", kSpinConfig);
  auto out = dir / "maxima.json";
  int rc = run("maxima --config " + (dir / "spin.json").string() + " --out " + out.string(),
               dir / "maxima.log");
  CHECK(rc == 0);
  auto j = json::parse(slurp(out));
  REQUIRE(j["maxima"].size() == 2);
  double z0 = j["maxima"][0]["z"][0].get<double>();
  double z1 = j["maxima"][1]["z"][0].get<double>();
  CHECK(z0 == doctest::Approx(-z1).epsilon(1e-8));
  CHECK(j["p2"].get<double>() > 0.0);
}

TEST_CASE("p2-sweep emits a deterministic CSV table") {
  auto dir = work_dir();
  put(dir / "spin.json", kSpinConfig);
  auto out = dir / "p2.csv";
  std::string args = "p2-sweep --config " + (dir / "spin.json").string() +
                     " --betas 0.5,1.0,2.0 --out " + out.string();
  int rc = run(args, dir / "p2.log");
  CHECK(rc == 0);
  auto first = slurp(out);
  int rows = 0, comments = 0;
  std::istringstream ss(first);
  std::string line;
  bool saw_header = false;
  while (std::getline(ss, line)) {
    if (line.rfind('#', 0) == 0) {
      ++comments;
      if (line.find("config_hash") != std::string::npos) saw_header = true;
    } else if (line.rfind("beta", 0) == 0) {
      // column names
    } else if (!line.empty()) {
      ++rows;
    }
  }
  CHECK(rows == 3);
  CHECK(comments >= 2);
  CHECK(saw_header);
  rc = run(args, dir / "p2b.log");
  CHECK(rc == 0);
  CHECK(slurp(out) == first);
}

TEST_CASE("pressure-surface grid output has the requested size") {
  auto dir = work_dir();
  put(dir / "spin.json", kSpinConfig);
  auto out = dir / "surface.csv";
  int rc = run("pressure-surface --config " + (dir / "spin.json").string() +
                   " --min -1 --max 1 --steps 5 --out " + out.string(),
               dir / "surface.log");
  CHECK(rc == 0);
  auto body = slurp(out);
  int rows = 0;
  std::istringstream ss(body);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line[0] != '#' && line.rfind("t,", 0) != 0) ++rows;
  }
  CHECK(rows == 5);
}

TEST_CASE("pgm-converge passes for the symmetric spin chain and is thread-stable") {
  auto dir = work_dir();
  put(dir / "spin.json", kSpinConfig);
  auto out = dir / "conv.json";
  std::string base = "pgm-converge --config " + (dir / "spin.json").string() +
                     " --ns 100,400,1600 --obs 0,0 --method exact --out " + out.string();
  int rc = run(base, dir / "conv.log");
  CHECK(rc == 0);
  auto first = slurp(out);
  auto j = json::parse(first);
  CHECK(j["pass"].get<bool>());
  CHECK(j["final_gap"].get<double>() < 0.02);
  CHECK(j["prediction"].get<double>() == doctest::Approx(0.47920349).epsilon(1e-6));

  // beta low enough that the doubled exponent of the squared weights stays
  // subcritical; the iid proposal keeps an O(1) effective-sample fraction then
  std::string mc = "pgm-converge --config " + (dir / "spin.json").string() +
                   " --ns 40,80 --obs 0 --method mc --samples 30000 --beta 0.4 --out " +
                   out.string();
  rc = run(mc + " --threads 1", dir / "mc1.log");
  CHECK(rc == 0);
  auto one = slurp(out);
  rc = run(mc + " --threads 4", dir / "mc4.log");
  CHECK(rc == 0);
  CHECK(slurp(out) == one);
}

TEST_CASE("hs-check, xy-phase and laplace-check subcommands") {
  auto dir = work_dir();
  auto out = dir / "aux.json";
  int rc = run("hs-check --xi 0.5 --nodes 64 --out " + out.string(), dir / "hs.log");
  CHECK(rc == 0);
  auto j = json::parse(slurp(out));
  CHECK(j["rel_err"].get<double>() < 1e-10);

  rc = run("xy-phase --beta 4.0 --out " + out.string(), dir / "xy.log");
  CHECK(rc == 0);
  j = json::parse(slurp(out));
  CHECK(j["regime"].get<std::string>() == "supercritical");
  CHECK(j["r_star"].get<double>() == doctest::Approx(0.83146202475425697).epsilon(1e-9));

  rc = run("laplace-check --alpha 2 --gamma 0 --n 100 --b 1 --out " + out.string(),
           dir / "laplace.log");
  CHECK(rc == 0);
  j = json::parse(slurp(out));
  CHECK(j["ratio"].get<double>() == doctest::Approx(std::erf(10.0)).epsilon(1e-10));
}

TEST_CASE("exit codes distinguish usage, numerical and capacity failures") {
  auto dir = work_dir();
  put(dir / "spin.json", kSpinConfig);
  put(dir / "gm.json", kGoldenMeanConfig);

  // 2: unreadable or invalid configuration
  int rc = run("spectral --config " + (dir / "nope.json").string() + " --t 0,0 --out " +
                   (dir / "o.json").string(),
               dir / "e1.log");
  CHECK(rc == 2);
  put(dir / "bad.json", R"({"alphabet": {"kind": "circle", "m": 3}, "potential": {"kind": "xy"}})");
  rc = run("spectral --config " + (dir / "bad.json").string() + " --t 0,0 --out " +
               (dir / "o.json").string(),
           dir / "e2.log");
  CHECK(rc == 2);

  // 3: numerical guard (near-degenerate leading pair at an extreme tilt)
  rc = run("spectral --config " + (dir / "gm.json").string() + " --t 80,0 --out " +
               (dir / "o.json").string(),
           dir / "e3.log");
  CHECK(rc == 3);

  // 3: importance sampling collapse
  rc = run("pgm-converge --config " + (dir / "spin.json").string() +
               " --beta 6 --ns 400 --obs 0 --method mc --samples 2000 --out " +
               (dir / "o.json").string(),
           dir / "e4.log");
  CHECK(rc == 3);

  // 4: structurally unsupported request (sampling a constrained shift)
  rc = run("pgm-converge --config " + (dir / "gm.json").string() +
               " --ns 40 --obs 0 --method mc --out " + (dir / "o.json").string(),
           dir / "e5.log");
  CHECK(rc == 4);

  // usage errors from the parser itself
  rc = run("spectral --t 0,0", dir / "e6.log");
  CHECK(rc == 2);
  rc = run("no-such-command", dir / "e7.log");
  CHECK(rc == 2);
}

TEST_CASE("version flag") {
  auto dir = work_dir();
  int rc = run("--version", dir / "version.log");
  CHECK(rc == 0);
  auto body = slurp(dir / "version.log");
  CHECK(body.find("0.1.0") != std::string::npos);
}
