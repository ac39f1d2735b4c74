#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "cavity_eit/config.hpp"
#include "cavity_eit/errors.hpp"

using namespace cavity_eit;
namespace fs = std::filesystem;

namespace {

const char* kSpectrum = R"(
experiment = spectrum
[system]
gamma31 = 0.5
gamma32 = 0.5
g = 1.0
omega_c = 1.0
epsilon_sq = 0.1
[spectrum]
n_atoms = 1
window = -2, 2
points = 41
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cavity_eit_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

struct Outcome {
  int code;
  std::string err;
};

Outcome simulate(const std::string& args, const fs::path& dir) {
  const char* exe = std::getenv("SIMULATE");
  REQUIRE_MESSAGE(exe, "SIMULATE must point at the simulate binary");
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(exe) + " " + args + " > " + (dir / "stdout.txt").string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("parse a spectrum config") {
  const RunConfig c = parse_config(kSpectrum);
  CHECK(c.experiment == Experiment::Spectrum);
  CHECK(c.method == Method::QuantumSteady);
  CHECK(c.system.epsilon == doctest::Approx(std::sqrt(0.1)));
  CHECK(c.system.gamma31 == 0.5);
  CHECK(c.solver.fock_dim == 0);
  REQUIRE(c.window);
  CHECK(c.window->first == -2.0);
  CHECK(c.n_atoms == std::vector<int>{1});
}

TEST_CASE("lists and linspace") {
  const RunConfig c = parse_config(replace(replace(kSpectrum, "n_atoms = 1", "n_atoms = 1, 2, 3"),
                                           "points = 41", "points = 41\nomega_c = linspace(0, 1, 5)"));
  CHECK(c.n_atoms == std::vector<int>{1, 2, 3});
  CHECK(c.omega_values == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("config errors name the field") {
  CHECK(config_error(replace(kSpectrum, "epsilon_sq = 0.1", "")).find("epsilon") != std::string::npos);
  CHECK(config_error(replace(kSpectrum, "epsilon_sq = 0.1", "epsilon_sq = 0.1\nepsilon = 0.3")).find("epsilon") !=
        std::string::npos);
  CHECK(config_error(replace(kSpectrum, "g = 1.0", "g = -1.0")).find("system.g") != std::string::npos);
  CHECK(config_error(replace(kSpectrum, "g = 1.0", "g = fast")).find("system.g") != std::string::npos);
  CHECK(config_error(replace(kSpectrum, "g = 1.0", "")).find("system.g") != std::string::npos);
  CHECK(config_error(replace(kSpectrum, "gamma31", "gama31")).find("system.gama31") != std::string::npos);
  CHECK(config_error(replace(kSpectrum, "points = 41", "points = 20")).find("spectrum.points") != std::string::npos);
  CHECK(config_error(replace(kSpectrum, "spectrum\n", "histogram\n")).find("experiment") != std::string::npos);
  CHECK(config_error(std::string(kSpectrum) + "[min-fwhm]\ntolerance = 0.1\n").find("min-fwhm") !=
        std::string::npos);
  CHECK(config_error(replace(kSpectrum, "n_atoms = 1", "n_atoms = 1.5")).find("n_atoms") != std::string::npos);
  CHECK(config_error(std::string(kSpectrum) + "[solver]\nfock_dim = 1\n").find("solver.fock_dim") !=
        std::string::npos);
  CHECK(config_error(std::string(kSpectrum) + "[solver]\nlinear_solver = magic\n").find("linear_solver") !=
        std::string::npos);
  CHECK(config_error("experiment = spectrum\n[system\n").find("syntax") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.conf"), ConfigError);
}

TEST_CASE("bundled configs parse") {
  const char* dir = std::getenv("CONFIG_DIR");
  REQUIRE(dir);
  int count = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".conf") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
    ++count;
  }
  CHECK(count >= 10);
}

TEST_CASE("overrides and run identifiers") {
  RunConfig a = parse_config(kSpectrum);
  RunConfig b = parse_config(kSpectrum);
  CHECK(run_identifier(a) == run_identifier(b));
  CHECK(run_identifier(a).size() == 16);
  Overrides o;
  o.method = Method::Semiclassical;
  o.seed = 99;
  o.threads = 2;
  apply_overrides(b, o);
  CHECK(b.method == Method::Semiclassical);
  CHECK(b.solver.mcwf.base_seed == 99);
  CHECK(b.solver.mcwf.threads == 2);
  CHECK(run_identifier(a) != run_identifier(b));
  o.threads = 0;
  CHECK_THROWS_AS(apply_overrides(b, o), ConfigError);
}

TEST_CASE("number formatting") {
  CHECK(format_number(1.5) == "1.500000000000e+00");
  CHECK(format_number(-2e-7) == "-2.000000000000e-07");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("spectrum run writes the table and manifest") {
  const fs::path dir = scratch("spectrum");
  const RunConfig c = parse_config(kSpectrum);
  const RunReport r = run_config(c, dir.string());
  CHECK(r.files == std::vector<std::string>{"spectrum.csv", "manifest.json"});

  std::ifstream csv(dir / "spectrum.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("delta_p,transmission_paper_norm,transmission_unit_norm,pop11,pop22,pop33,g2,P0,P1,", 0) == 0);
  CHECK(header.size() >= 7);
  CHECK(header.substr(header.size() - 7) == ",run_id");
  int rows = 0;
  std::string line;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(line.substr(line.size() - r.run_id.size()) == r.run_id);
  }
  CHECK(rows == 41);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["run_id"] == r.run_id);
  CHECK(manifest["config"]["system"]["g"] == 1.0);
  CHECK(manifest["fock_dim_used"]["N1_omega1"].get<int>() >= 5);
  CHECK(manifest.contains("timings"));
  CHECK(manifest.contains("warnings"));
  CHECK(manifest["files"].size() == 1);
  CHECK(manifest.contains("seed"));
  CHECK(manifest.contains("versions"));

  // reruns are byte-identical
  const std::string first = slurp(dir / "spectrum.csv");
  run_config(c, dir.string());
  CHECK(slurp(dir / "spectrum.csv") == first);
}

TEST_CASE("multiple combinations get labelled files") {
  const fs::path dir = scratch("multi");
  RunConfig c = parse_config(replace(kSpectrum, "points = 41", "points = 41\nomega_c = 1, 2"));
  c.method = Method::Semiclassical;
  const RunReport r = run_config(c, dir.string());
  CHECK(fs::exists(dir / "spectrum_N1_omega1.csv"));
  CHECK(fs::exists(dir / "spectrum_N1_omega2.csv"));
  CHECK(r.files.size() == 3);
}

TEST_CASE("control sweep with minimum") {
  const fs::path dir = scratch("control");
  const RunConfig c = parse_config(R"(
experiment = control-sweep
method = semiclassical
[system]
gamma31 = 0.5
gamma32 = 0.5
g = 1.0
epsilon = 0.1
[solver]
semiclassical_time_budget = 1e5
[control-sweep]
n_atoms = 2
omega_c = 0.5, 1.5
find_minimum = true
min_range = 0.3, 2.0
)");
  run_config(c, dir.string());
  std::ifstream sweep(dir / "control_sweep_N2.csv");
  std::string header;
  std::getline(sweep, header);
  CHECK(header.rfind("omega_c,fwhm,", 0) == 0);
  std::ifstream mins(dir / "min_fwhm.csv");
  std::getline(mins, header);
  CHECK(header.rfind("n_atoms,omega_star,fwhm_min,", 0) == 0);
}

TEST_CASE("simulate exit codes") {
  const fs::path dir = scratch("exit");
  const fs::path good = write(dir, "good.conf", kSpectrum);

  Outcome ok = simulate(good.string() + " --out " + (dir / "out").string(), dir);
  CHECK(ok.code == 0);
  CHECK(fs::exists(dir / "out" / "manifest.json"));

  const fs::path missing = write(dir, "missing.conf", replace(kSpectrum, "epsilon_sq = 0.1", ""));
  Outcome bad = simulate(missing.string(), dir);
  CHECK(bad.code == 2);
  CHECK(bad.err.find("epsilon") != std::string::npos);

  CHECK(simulate(good.string() + " --method nonsense", dir).code == 2);
  CHECK(simulate(good.string() + " --bogus", dir).code == 2);
  CHECK(simulate("", dir).code == 2);

  const fs::path tight = write(dir, "tight.conf",
                               replace(kSpectrum, "epsilon_sq = 0.1", "epsilon_sq = 1.0") +
                                   "[solver]\nfock_dim = 3\n");
  Outcome trunc = simulate(tight.string() + " --out " + (dir / "t").string(), dir);
  CHECK(trunc.code == 4);
  CHECK(trunc.err.find("delta_p") != std::string::npos);

  const fs::path budget = write(dir, "budget.conf", std::string(kSpectrum) +
                                                        "[solver]\nsemiclassical_time_budget = 1\n");
  Outcome solver = simulate(budget.string() + " --method semiclassical --out " + (dir / "s").string(), dir);
  CHECK(solver.code == 3);
  CHECK(solver.err.find("residual") != std::string::npos);
}

TEST_CASE("MCWF output is independent of the thread count") {
  const fs::path dir = scratch("mcwf");
  const fs::path conf = write(dir, "mcwf.conf",
                              std::string(kSpectrum) + "[solver]\nfock_dim = 9\ntrajectories = 8\nt_final = 5\n");
  REQUIRE(simulate(conf.string() + " --method mcwf --threads 1 --seed 7 --out " + (dir / "a").string(), dir).code == 0);
  REQUIRE(simulate(conf.string() + " --method mcwf --threads 3 --seed 7 --out " + (dir / "b").string(), dir).code == 0);
  CHECK(slurp(dir / "a" / "spectrum.csv") == slurp(dir / "b" / "spectrum.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["seed"] == 7);
}
