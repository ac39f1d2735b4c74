#pragma once

// Hand-rolled generators and dense reference constructions shared by the
// test binaries.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cavity_eit/hilbert.hpp"
#include "cavity_eit/model.hpp"

namespace testing {

using cavity_eit::Complex;
using cavity_eit::DenseMatrix;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  Complex complex() { return {uniform(-1.0, 1.0), uniform(-1.0, 1.0)}; }

  DenseMatrix matrix(int dim) {
    DenseMatrix m(dim, dim);
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i) m(i, j) = complex();
    return m;
  }

  /// Random density matrix: B B^dag / Tr.
  DenseMatrix density(int dim) {
    const DenseMatrix b = matrix(dim);
    DenseMatrix rho = b * b.adjoint();
    return rho / rho.trace();
  }

  /// Rates drawn so that occasionally some vanish, to exercise channel omission.
  cavity_eit::SystemParams params() {
    cavity_eit::SystemParams p;
    p.kappa = 1.0;
    auto rate = [&](double hi) { return coin(0.2) ? 0.0 : uniform(0.05, hi); };
    p.gamma31 = rate(1.0);
    p.gamma32 = rate(1.0);
    p.gamma1 = rate(0.3);
    p.gamma2 = rate(0.3);
    p.g = uniform(0.0, 3.0);
    p.omega_c = uniform(0.0, 3.0);
    p.epsilon = uniform(0.05, 0.6);
    p.delta_p = uniform(-3.0, 3.0);
    return p;
  }

 private:
  std::mt19937_64 rng_;
};

/// Dense single-factor matrices in the basis 0..d-1.
inline DenseMatrix ket_bra(int d, int i, int j) {
  DenseMatrix m = DenseMatrix::Zero(d, d);
  m(i, j) = 1.0;
  return m;
}

/// Dense operator built by looping over composite basis states: for each
/// input index, decode (levels, photon), apply the local action, re-encode.
/// `atom_action(k, level)` returns (new level, amplitude) or amplitude 0;
/// `cavity_action(n)` likewise for the photon number.
template <typename AtomFn, typename CavityFn>
DenseMatrix brute_force(int n_atoms, int fock_dim, AtomFn atom_action, CavityFn cavity_action) {
  int atomic = 1;
  for (int k = 0; k < n_atoms; ++k) atomic *= 3;
  const int dim = atomic * fock_dim;
  DenseMatrix out = DenseMatrix::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    int photon = col % fock_dim;
    int rest = col / fock_dim;
    std::vector<int> levels(n_atoms);
    for (int k = n_atoms - 1; k >= 0; --k) {
      levels[k] = rest % 3;
      rest /= 3;
    }
    Complex amp = 1.0;
    for (int k = 0; k < n_atoms && amp != 0.0; ++k) {
      const auto [lv, a] = atom_action(k + 1, levels[k]);
      levels[k] = lv;
      amp *= a;
    }
    const auto [np, a] = cavity_action(photon);
    amp *= a;
    if (amp == 0.0 || np < 0 || np >= fock_dim) continue;
    int row = 0;
    for (int k = 0; k < n_atoms; ++k) row = row * 3 + levels[k];
    row = row * fock_dim + np;
    out(row, col) += amp;
  }
  return out;
}

inline double max_abs(const DenseMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testing
