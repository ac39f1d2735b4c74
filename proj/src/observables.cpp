#include "cavity_eit/observables.hpp"

#include <cmath>
#include <limits>

#include "cavity_eit/errors.hpp"

namespace cavity_eit {

namespace {

constexpr double kVacuumPhotons = 1e-14;

// Tr(rho D) for a diagonal operator with entries f(index).
template <typename F>
double diagonal_expectation(const DensityMatrix& rho, F&& f) {
  const DenseMatrix& m = rho.matrix();
  double sum = 0.0;
  for (int i = 0; i < m.rows(); ++i) sum += m(i, i).real() * f(i);
  return sum;
}

}  // namespace

Complex expectation(const DensityMatrix& rho, const Operator& op) {
  if (rho.space() != op.space()) throw ConfigError("expectation: space mismatch");
  const SparseMatrix& o = op.matrix();
  const DenseMatrix& m = rho.matrix();
  Complex sum(0.0);
  for (int c = 0; c < o.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(o, c); it; ++it) sum += m(c, it.row()) * it.value();
  }
  return sum;
}

double empty_cavity_resonant_photons(const SystemParams& params) {
  const double half = 0.5 * params.kappa;
  return params.epsilon * params.epsilon / (half * half);
}

double transmission(const DensityMatrix& rho, const SystemParams& params) {
  if (!(params.epsilon > 0.0)) {
    throw ConfigError("transmission is undefined without probe drive (epsilon = 0)");
  }
  const HilbertSpace& space = rho.space();
  const double n = diagonal_expectation(rho, [&](int i) { return space.photon_number(i); });
  return n / empty_cavity_resonant_photons(params);
}

double g2_zero(const DensityMatrix& rho) {
  const HilbertSpace& space = rho.space();
  const double n = diagonal_expectation(rho, [&](int i) { return space.photon_number(i); });
  if (!(n > kVacuumPhotons)) {
    throw SolverError("g2(0) is undefined for the cavity vacuum");
  }
  const double nn = diagonal_expectation(rho, [&](int i) {
    const double k = space.photon_number(i);
    return k * (k - 1.0);
  });
  return nn / (n * n);
}

std::vector<double> photon_distribution(const DensityMatrix& rho) {
  const HilbertSpace& space = rho.space();
  std::vector<double> p(space.fock_dim(), 0.0);
  const DenseMatrix& m = rho.matrix();
  for (int i = 0; i < space.dim(); ++i) p[space.photon_number(i)] += m(i, i).real();
  return p;
}

std::vector<std::array<double, 3>> atom_populations(const DensityMatrix& rho) {
  const HilbertSpace& space = rho.space();
  std::vector<std::array<double, 3>> pops(space.n_atoms(), {0.0, 0.0, 0.0});
  const DenseMatrix& m = rho.matrix();
  for (int i = 0; i < space.dim(); ++i) {
    const double p = m(i, i).real();
    for (int k = 1; k <= space.n_atoms(); ++k) pops[k - 1][space.atom_level(i, k)] += p;
  }
  return pops;
}

NonlinearityFigures nonlinearity_figures(const SystemParams& params, int n_atoms) {
  const double gamma = params.total_decay();
  const double g2 = params.g * params.g;
  return {n_atoms * g2 / (2.0 * params.kappa * gamma), gamma * gamma / (2.0 * g2)};
}

ObservableSet compute_observables(const DensityMatrix& rho, const SystemParams& params) {
  const HilbertSpace& space = rho.space();
  ObservableSet out;
  out.mean_photons =
      diagonal_expectation(rho, [&](int i) { return space.photon_number(i); });
  out.transmission = transmission(rho, params);
  out.transmission_raw =
      out.mean_photons * params.kappa * params.kappa / (params.epsilon * params.epsilon);
  out.atom_populations = atom_populations(rho);
  for (const auto& atom : out.atom_populations) {
    for (int l = 0; l < 3; ++l) out.populations[l] += atom[l] / space.n_atoms();
  }
  out.g2 = out.mean_photons > kVacuumPhotons ? g2_zero(rho)
                                             : std::numeric_limits<double>::quiet_NaN();
  out.photon_distribution = photon_distribution(rho);
  const double p1 = out.photon_distribution.size() > 1 ? out.photon_distribution[1] : 0.0;
  const double p2 = out.photon_distribution.size() > 2 ? out.photon_distribution[2] : 0.0;
  out.p21 = p1 > 0.0 ? p2 / p1 : std::numeric_limits<double>::quiet_NaN();
  return out;
}

ObservableSet compute_observables(const SemiclassicalState& state,
                                  const SemiclassicalParams& params) {
  const SystemParams& p = params.system;
  if (!(p.epsilon > 0.0)) {
    throw ConfigError("transmission is undefined without probe drive (epsilon = 0)");
  }
  ObservableSet out;
  out.mean_photons = std::norm(state.alpha);
  out.transmission = out.mean_photons / empty_cavity_resonant_photons(p);
  out.transmission_raw = out.mean_photons * p.kappa * p.kappa / (p.epsilon * p.epsilon);
  out.populations = {state.s11 / params.n_atoms, state.s22 / params.n_atoms,
                     state.s33 / params.n_atoms};
  out.g2 = 1.0;
  out.p21 = std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::vector<Operator> moment_operators(const HilbertSpace& space) {
  const Operator a = annihilation(space);
  const Operator ad = creation(space);
  std::vector<Operator> ops{number(space), ad * ad * a * a};
  for (int n = 0; n < space.fock_dim(); ++n) ops.push_back(fock_projector(space, n));
  for (int k = 1; k <= space.n_atoms(); ++k) {
    for (int l = 1; l <= 3; ++l) ops.push_back(atomic_transition(space, k, static_cast<Level>(l), static_cast<Level>(l)));
  }
  return ops;
}

ObservableSet observables_from_moments(const std::vector<double>& moments,
                                       const HilbertSpace& space, const SystemParams& params) {
  const std::size_t expected = 2 + space.fock_dim() + 3 * space.n_atoms();
  if (moments.size() != expected) {
    throw ConfigError("moment vector does not match moment_operators for this space");
  }
  if (!(params.epsilon > 0.0)) {
    throw ConfigError("transmission is undefined without probe drive (epsilon = 0)");
  }
  ObservableSet out;
  out.mean_photons = moments[0];
  out.transmission = out.mean_photons / empty_cavity_resonant_photons(params);
  out.transmission_raw =
      out.mean_photons * params.kappa * params.kappa / (params.epsilon * params.epsilon);
  out.g2 = out.mean_photons > kVacuumPhotons ? moments[1] / (out.mean_photons * out.mean_photons)
                                             : std::numeric_limits<double>::quiet_NaN();
  out.photon_distribution.assign(moments.begin() + 2, moments.begin() + 2 + space.fock_dim());
  std::size_t pos = 2 + space.fock_dim();
  for (int k = 0; k < space.n_atoms(); ++k) {
    std::array<double, 3> atom{};
    for (int l = 0; l < 3; ++l) {
      atom[l] = moments[pos++];
      out.populations[l] += atom[l] / space.n_atoms();
    }
    out.atom_populations.push_back(atom);
  }
  const double p1 = out.photon_distribution.size() > 1 ? out.photon_distribution[1] : 0.0;
  const double p2 = out.photon_distribution.size() > 2 ? out.photon_distribution[2] : 0.0;
  out.p21 = p1 > 0.0 ? p2 / p1 : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace cavity_eit
