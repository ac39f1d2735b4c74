#pragma once

#include <string>
#include <utility>

#include "cavity_eit/errors.hpp"
#include "cavity_eit/hilbert.hpp"
#include "cavity_eit/model.hpp"

namespace cavity_eit {

/// Mean-field state for N atoms: cavity amplitude and collective atomic
/// expectations, S_ij = sum_k <sigma_ij^(k)>.
struct SemiclassicalState {
  Complex alpha{0.0, 0.0};
  Complex s12{0.0, 0.0};
  Complex s13{0.0, 0.0};
  Complex s23{0.0, 0.0};
  double s11 = 0.0;
  double s22 = 0.0;
  double s33 = 0.0;

  /// All atoms in |1>, empty cavity.
  static SemiclassicalState ground(int n_atoms);
  double population_sum() const { return s11 + s22 + s33; }
};

struct SemiclassicalParams {
  SystemParams system;
  double delta1 = 0.0;  ///< detuning of level 1
  double delta2 = 0.0;  ///< detuning of level 2
  double gamma3 = 0.0;  ///< dephasing of level 3
  int n_atoms = 1;

  void validate() const;
};

/// Time derivative of the mean-field equations under the factorization
/// <a S_ij> = alpha <S_ij>.
SemiclassicalState semiclassical_rhs(const SemiclassicalState& state,
                                     const SemiclassicalParams& params);

struct SemiclassicalOptions {
  /// Convergence: max relative change of every component over the trailing
  /// window stays below this. Atomic variables are relative to N, the field to |alpha|.
  double tolerance = 1e-8;
  double window = 10.0;        ///< in units of 1/kappa
  double time_budget = 1e4;    ///< in units of 1/kappa
};

struct SemiclassicalResult {
  SemiclassicalState state;
  double time = 0.0;
  double window_residual = 0.0;
  /// max |S11 + S22 + S33 - N| seen during the integration
  double population_drift = 0.0;
};

/// Thrown when the time budget runs out. Keeps the final state and the range
/// of |alpha|^2 over the last window, so a slow oscillation can still be
/// bounded by the caller.
class SemiclassicalNotConverged : public SolverError {
 public:
  SemiclassicalNotConverged(const std::string& what, SemiclassicalResult last,
                            double min_photons, double max_photons)
      : SolverError(what), last(std::move(last)), min_photons(min_photons),
        max_photons(max_photons) {}

  SemiclassicalResult last;
  double min_photons;
  double max_photons;
};

/// Integrates from the ground state until converged. Throws
/// SemiclassicalNotConverged, whose message carries the last window residual,
/// when the time budget runs out.
SemiclassicalResult semiclassical_steady(const SemiclassicalParams& params,
                                         const SemiclassicalOptions& options = {});

}  // namespace cavity_eit
