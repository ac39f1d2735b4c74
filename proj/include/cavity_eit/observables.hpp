#pragma once

#include <array>
#include <optional>
#include <vector>

#include "cavity_eit/hilbert.hpp"
#include "cavity_eit/model.hpp"
#include "cavity_eit/semiclassical.hpp"
#include "cavity_eit/steadystate.hpp"

namespace cavity_eit {

/// Everything reported per spectrum point.
struct ObservableSet {
  /// <a^dag a> over the analytic resonant empty-cavity photon number, so an
  /// empty cavity reads exactly 1 on resonance.
  double transmission = 0.0;
  /// <a^dag a> / |epsilon/kappa|^2, which reads 4 for the empty cavity on
  /// resonance under the kappa/2 amplitude damping of the master equation.
  double transmission_raw = 0.0;
  double mean_photons = 0.0;
  /// Per-atom averages of sigma_11, sigma_22, sigma_33.
  std::array<double, 3> populations{};
  /// populations resolved by atom, [k][level].
  std::vector<std::array<double, 3>> atom_populations;
  /// NaN when the field is in vacuum.
  double g2 = 0.0;
  std::vector<double> photon_distribution;
  /// P2/P1; NaN when P1 vanishes or no distribution is available.
  double p21 = 0.0;
};

struct NonlinearityFigures {
  double cooperativity;    ///< C = N g^2 / (2 kappa Gamma)
  double critical_photons; ///< n_c = Gamma^2 / (2 g^2)
};

Complex expectation(const DensityMatrix& rho, const Operator& op);

/// Photon number of the driven, damped empty cavity on resonance:
/// epsilon^2 / (kappa/2)^2.
double empty_cavity_resonant_photons(const SystemParams& params);

/// Normalized transmission; throws ConfigError for epsilon = 0.
double transmission(const DensityMatrix& rho, const SystemParams& params);

/// <a^dag a^dag a a> / <a^dag a>^2. Throws SolverError for the vacuum.
double g2_zero(const DensityMatrix& rho);

std::vector<double> photon_distribution(const DensityMatrix& rho);

NonlinearityFigures nonlinearity_figures(const SystemParams& params, int n_atoms);

ObservableSet compute_observables(const DensityMatrix& rho, const SystemParams& params);

/// Populations [k][level] for every atom.
std::vector<std::array<double, 3>> atom_populations(const DensityMatrix& rho);

/// Mean-field observables. The field is a coherent amplitude, so g2 is 1 and
/// no photon distribution is reported.
ObservableSet compute_observables(const SemiclassicalState& state,
                                  const SemiclassicalParams& params);

/// Hermitian operators whose expectations determine an ObservableSet:
/// a^dag a, a^dag a^dag a a, P_0..P_{fock_dim-1}, then sigma_ll^(k) for each
/// atom k and level l.
std::vector<Operator> moment_operators(const HilbertSpace& space);

/// ObservableSet from expectations of moment_operators(space), e.g. averaged
/// over trajectories.
ObservableSet observables_from_moments(const std::vector<double>& moments,
                                       const HilbertSpace& space, const SystemParams& params);

}  // namespace cavity_eit
