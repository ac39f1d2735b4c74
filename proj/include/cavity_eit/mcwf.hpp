#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cavity_eit/hilbert.hpp"
#include "cavity_eit/model.hpp"
#include "cavity_eit/ode.hpp"

namespace cavity_eit {

struct TrajectoryResult {
  std::uint64_t seed = 0;
  std::vector<double> time_grid;
  /// records[t][k]: <psi|O_k|psi> / <psi|psi> at time_grid[t].
  std::vector<std::vector<double>> records;
  /// (time, index into jump_operators(space, params)) per quantum jump.
  std::vector<std::pair<double, int>> jump_log;
};

struct TrajectoryOptions {
  /// Jump times are located to dt_max * jump_time_fraction.
  double jump_time_fraction = 1e-2;
  double rtol = 1e-9;
  double atol = 1e-12;
  /// Retries with a halved bracket when no channel can absorb a detected jump.
  int max_underflow_retries = 20;
};

/// Quantum-jump trajectory from `psi0` (ground state if empty). Observables
/// must be Hermitian and are recorded on the grid 0, dt_max, ..., t_final.
/// Deterministic in `seed`.
TrajectoryResult run_trajectory(const HilbertSpace& space, const SystemParams& params,
                                const std::vector<Operator>& observables, std::uint64_t seed,
                                double t_final, double dt_max, const Vector& psi0 = Vector(),
                                const TrajectoryOptions& options = {});

struct EnsembleAverage {
  std::vector<double> time_grid;
  /// [t][k]
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> standard_errors;
  std::size_t trajectories = 0;
};

/// Pointwise sample mean and standard error of the mean (n-1 normalization).
EnsembleAverage ensemble_average(const std::vector<TrajectoryResult>& results);

struct SteadyEstimate {
  std::vector<double> means;
  std::vector<double> standard_errors;
};

/// Per trajectory, averages each record over the final `fraction` of the time
/// grid; returns mean and standard error of those per-trajectory averages.
SteadyEstimate late_time_average(const std::vector<TrajectoryResult>& results,
                                 double fraction = 0.2);

struct EnsembleOptions {
  int trajectories = 2560;
  std::uint64_t base_seed = 1;
  double t_final = 50.0;
  double dt_max = 0.05;
  int threads = 1;
  TrajectoryOptions trajectory;
};

/// Runs trajectories with seeds base_seed + i. Results are ordered by index,
/// so thread count does not affect them.
std::vector<TrajectoryResult> run_ensemble(const HilbertSpace& space,
                                           const SystemParams& params,
                                           const std::vector<Operator>& observables,
                                           const EnsembleOptions& options,
                                           const Vector& psi0 = Vector());

}  // namespace cavity_eit
