#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cavity_eit/mcwf.hpp"
#include "cavity_eit/model.hpp"
#include "cavity_eit/observables.hpp"
#include "cavity_eit/semiclassical.hpp"
#include "cavity_eit/steadystate.hpp"

namespace cavity_eit {

enum class Method { QuantumSteady, Mcwf, Semiclassical };

/// "quantum-steady", "mcwf", "semiclassical"
std::string method_name(Method method);
/// Throws ConfigError for unknown names.
Method parse_method(const std::string& name);

struct SolverSettings {
  /// 0 selects the automatic rule: start at max(4, ceil(8 |eps/kappa|^2 + 4))
  /// and grow by 2 until P_{fock_dim-1} < tail_tolerance.
  int fock_dim = 0;
  /// Lower bound for the automatic rule's starting dimension.
  int fock_min = 0;
  double tail_tolerance = 1e-6;
  int dimension_cap = kDefaultDimensionCap;
  SteadyStateOptions steady;
  EnsembleOptions mcwf;
  SemiclassicalOptions semiclassical;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double gamma3 = 0.0;
};

/// Starting Fock dimension of the automatic rule.
int auto_fock_start(const SystemParams& params);

/// Observables at single probe detunings for fixed physical parameters.
/// Quantum methods check the Fock tail at every point; with an automatic
/// fock_dim the space grows and the point is recomputed, otherwise a
/// TruncationError names the offending detuning.
class PointSolver {
 public:
  PointSolver(const SystemParams& params, int n_atoms, Method method,
              SolverSettings settings = {});
  ~PointSolver();
  PointSolver(PointSolver&&) noexcept;
  PointSolver& operator=(PointSolver&&) noexcept;

  ObservableSet solve(double delta_p);
  double transmission(double delta_p) { return solve(delta_p).transmission; }

  /// Standard error of the last MCWF transmission; 0 for deterministic methods.
  double last_transmission_error() const { return last_error_; }
  /// Current Fock dimension (0 for the semiclassical method).
  int fock_dim() const { return fock_dim_; }
  Method method() const { return method_; }
  const SystemParams& params() const { return params_; }
  int n_atoms() const { return n_atoms_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  void rebuild();
  ObservableSet solve_once(double delta_p);

  SystemParams params_;
  int n_atoms_;
  Method method_;
  SolverSettings settings_;
  bool auto_fock_;
  int fock_dim_ = 0;
  double last_error_ = 0.0;
  std::unique_ptr<SteadyStateSweeper> sweeper_;
  std::vector<std::string> warnings_;
};

struct Spectrum {
  std::vector<double> detunings;
  std::vector<ObservableSet> points;
  Method method = Method::QuantumSteady;
  /// Per-point transmission standard error (MCWF only; zeros otherwise).
  std::vector<double> transmission_errors;
  int fock_dim = 0;
  std::vector<std::string> warnings;

  std::vector<double> transmissions() const;
};

/// (-w, w) with w = 2 sqrt(g^2 + omega_c^2), widened to at least 2 kappa so
/// the empty-cavity line fits.
std::pair<double, double> default_window(const SystemParams& params);

/// n evenly spaced points including both ends.
std::vector<double> linear_grid(double lo, double hi, int n);

/// Scan on an even grid; each refinement pass inserts midpoints on both sides
/// of every interior local maximum of the transmission.
Spectrum spectrum(PointSolver& solver, std::pair<double, double> window, int n_points,
                  int refine_passes = 0);

Spectrum spectrum(const SystemParams& params, int n_atoms, std::pair<double, double> window,
                  int n_points, Method method, const SolverSettings& settings = {},
                  int refine_passes = 0);

/// Interior local maxima of the transmission, ordered by detuning.
std::vector<std::size_t> local_maxima(const Spectrum& spec);

struct FwhmResult {
  double fwhm = 0.0;
  double peak_location = 0.0;
  double peak_height = 0.0;
  double left_cross = 0.0;
  double right_cross = 0.0;
  /// Crossings came from fresh solver evaluations, not grid interpolation.
  bool refined = false;
  /// False when no local maximum exists and the global maximum was measured.
  bool central_peak = true;
  /// The half-height contour encloses more than one local maximum.
  bool merged = false;
  /// Half-width of the remaining crossing uncertainty (bracket or noise).
  double uncertainty = 0.0;
  std::string diagnostic;
};

using TransmissionFn = std::function<double(double)>;

struct FwhmOptions {
  /// Crossings are bracketed to this width (units of kappa).
  double tolerance = 1e-3;
  /// Absolute transmission noise; bisection stops once a fresh value lies
  /// within it of the half height. 0 for deterministic solvers.
  double noise_floor = 0.0;
  /// Fresh samples used to find the first crossing inside a grid interval.
  int subdivisions = 8;
  bool refine_peak = true;
};

/// FWHM of the central peak: the local maximum with the smallest |delta_p|,
/// ties going to delta_p = 0 and then to negative detuning. Half-height
/// crossings are located by bisection with `refine` (or grid interpolation
/// when `refine` is empty). Throws SolverError when the half height is not
/// reached inside the window.
FwhmResult fwhm(const Spectrum& spec, const TransmissionFn& refine,
                const FwhmOptions& options = {});

struct MeasureOptions {
  /// Scan half-width; default_window when empty.
  std::optional<double> half_width;
  int n_points = 41;
  FwhmOptions fwhm;
};

/// Spectrum plus central-peak FWHM for one parameter set.
FwhmResult measure_fwhm(PointSolver& solver, const MeasureOptions& options = {});

struct ControlSweepOptions {
  /// Use g = params.g / sqrt(n_atoms).
  bool scale_g_with_atoms = false;
  MeasureOptions measure;
};

struct ControlPoint {
  double omega_c = 0.0;
  double g = 0.0;
  FwhmResult fwhm;
};

SystemParams control_params(const SystemParams& base, int n_atoms, double omega_c,
                            const ControlSweepOptions& options);

std::vector<ControlPoint> sweep_control(const SystemParams& base, int n_atoms,
                                        const std::vector<double>& omega_grid, Method method,
                                        const SolverSettings& settings = {},
                                        const ControlSweepOptions& options = {});

struct MinFwhmOptions {
  ControlSweepOptions control;
  /// Golden-section stopping width in omega_c.
  double tolerance = 1e-2;
  /// Coarse samples used to bracket the minimum and test unimodality.
  int coarse_points = 5;
  /// Grid used when the coarse samples are not unimodal.
  int fallback_points = 21;
};

struct MinFwhmResult {
  double omega_star = 0.0;
  FwhmResult fwhm;
  bool grid_fallback = false;
  /// Every (omega_c, fwhm) evaluated, in evaluation order.
  std::vector<std::pair<double, double>> evaluations;
  std::vector<std::string> warnings;
};

MinFwhmResult min_fwhm(const SystemParams& base, int n_atoms,
                       std::pair<double, double> omega_range, Method method,
                       const SolverSettings& settings = {}, const MinFwhmOptions& options = {});

}  // namespace cavity_eit
