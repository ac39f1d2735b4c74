#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cavity_eit/model.hpp"
#include "cavity_eit/sweep.hpp"

namespace cavity_eit {

enum class Experiment {
  Spectrum,
  FwhmMap,
  ControlSweep,
  MinFwhm,
  Statistics,
  SemiclassicalCompare
};

std::string experiment_name(Experiment kind);

/// Resolved run configuration. Rates are in units of kappa.
struct RunConfig {
  Experiment experiment = Experiment::Spectrum;
  Method method = Method::QuantumSteady;
  SystemParams system;
  /// g -> g / sqrt(n_atoms) for each atom count.
  bool scale_g_with_atoms = false;
  SolverSettings solver;
  std::vector<int> n_atoms{1};

  // [spectrum]
  std::optional<std::pair<double, double>> window;  ///< default_window when empty
  int points = 41;
  int refine = 0;
  std::vector<double> omega_values;  ///< empty: system.omega_c only

  // [fwhm-map], [control-sweep], [min-fwhm], [statistics]
  std::vector<double> g_values;
  std::vector<double> omega_grid;
  std::optional<double> half_width;  ///< FWHM scan half-width
  double fwhm_tolerance = 1e-3;
  std::optional<double> observe_delta_p;
  bool find_minimum = false;
  std::pair<double, double> omega_range{0.1, 2.0};
  double min_tolerance = 1e-2;
  int coarse_points = 5;
  std::optional<double> statistics_omega;  ///< empty: minimum-FWHM control field
  std::optional<double> statistics_delta;  ///< empty: FWHM / 2

  // [compare]
  std::vector<Method> methods;

  /// Everything above, as written to the manifest.
  nlohmann::json to_json() const;
};

/// Parses the key-value config format. Throws ConfigError naming the
/// offending field path, e.g. "system.epsilon".
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

struct Overrides {
  std::optional<Method> method;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

void apply_overrides(RunConfig& config, const Overrides& overrides);

/// Stable identifier of a resolved configuration (hex FNV-1a of its JSON).
std::string run_identifier(const RunConfig& config);

struct RunReport {
  std::string run_id;
  std::vector<std::string> files;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

/// Runs the experiment and writes CSV tables plus manifest.json into
/// `out_dir`. Library errors propagate (ConfigError, SolverError,
/// TruncationError).
RunReport run_config(const RunConfig& config, const std::string& out_dir);

/// printf("%.12e"), with "nan"/"inf" spelled out.
std::string format_number(double v);

}  // namespace cavity_eit
