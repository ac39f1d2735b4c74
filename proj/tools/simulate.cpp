// simulate <config> [--out DIR] [--method M] [--threads K] [--seed S]
//
// Exit codes: 0 ok, 2 config error, 3 solver failure, 4 truncation, 1 other.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "cavity_eit/config.hpp"
#include "cavity_eit/errors.hpp"

int main(int argc, char** argv) {
  using namespace cavity_eit;

  CLI::App app{"Cavity EIT transmission, linewidth and photon statistics"};
  std::string config_path;
  std::string out_dir = "out";
  std::string method;
  int threads = 0;
  std::uint64_t seed = 0;
  app.add_option("config", config_path, "Experiment config file")->required();
  app.add_option("--out", out_dir, "Output directory");
  auto* method_opt =
      app.add_option("--method", method, "quantum-steady, mcwf or semiclassical");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads for trajectories");
  auto* seed_opt = app.add_option("--seed", seed, "Base seed for trajectories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig config = load_config(config_path);
    Overrides overrides;
    if (*method_opt) overrides.method = parse_method(method);
    if (*threads_opt) overrides.threads = threads;
    if (*seed_opt) overrides.seed = seed;
    apply_overrides(config, overrides);

    const RunReport report = run_config(config, out_dir);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "run " << report.run_id << " finished in " << report.seconds << " s\n";
    for (const auto& f : report.files) std::cout << "  " << out_dir << "/" << f << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const TruncationError& e) {
    std::cerr << "truncation error: " << e.what() << "\n";
    return 4;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
