#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>

#include <Eigen/Sparse>

namespace cavity_eit {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;

/// Atomic levels of the Lambda scheme: two ground states and the excited state.
enum class Level : int { One = 1, Two = 2, Three = 3 };

inline constexpr int kLevels = 3;
inline constexpr std::int64_t kDefaultDimensionCap = 20000;

/// Composite space of n_atoms three-level atoms and one truncated cavity mode.
///
/// Basis index convention: atom 1 is the slowest-varying factor, the cavity
/// Fock index the fastest. For basis state |l_1, ..., l_N, n> the index is
///   ((l_1 * 3 + l_2) * 3 + ... + l_N) * fock_dim + n
/// with l_k in {0,1,2} standing for levels |1>,|2>,|3>.
class HilbertSpace {
 public:
  HilbertSpace(int n_atoms, int fock_dim,
               std::int64_t dimension_cap = kDefaultDimensionCap);

  int n_atoms() const { return n_atoms_; }
  int fock_dim() const { return fock_dim_; }
  int atomic_dim() const { return atomic_dim_; }
  int dim() const { return dim_; }

  /// Size of a column-vectorized density matrix.
  std::int64_t liouville_dim() const {
    return static_cast<std::int64_t>(dim_) * dim_;
  }

  /// Level (0-based) of atom k (1-based) in basis state `index`.
  int atom_level(int index, int k) const;
  int photon_number(int index) const { return index % fock_dim_; }

  bool operator==(const HilbertSpace& other) const {
    return n_atoms_ == other.n_atoms_ && fock_dim_ == other.fock_dim_;
  }
  bool operator!=(const HilbertSpace& other) const { return !(*this == other); }

 private:
  int n_atoms_;
  int fock_dim_;
  int atomic_dim_;
  int dim_;
};

/// Sparse operator on a HilbertSpace. Immutable once built.
class Operator {
 public:
  Operator(const HilbertSpace& space, SparseMatrix data);

  const HilbertSpace& space() const { return space_; }
  const SparseMatrix& matrix() const { return data_; }

  Operator adjoint() const;
  DenseMatrix to_dense() const { return DenseMatrix(data_); }

  Operator operator+(const Operator& rhs) const;
  Operator operator-(const Operator& rhs) const;
  Operator operator*(const Operator& rhs) const;
  Operator operator*(Complex scale) const;
  friend Operator operator*(Complex scale, const Operator& op) {
    return op * scale;
  }

 private:
  HilbertSpace space_;
  SparseMatrix data_;
};

/// Entries below this magnitude are dropped from every constructed operator.
inline constexpr double kPruneThreshold = 1e-14;

SparseMatrix prune(SparseMatrix m);

/// Sparse Kronecker product a (x) b.
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix sparse_identity(int n);

HilbertSpace build_space(int n_atoms, int fock_dim,
                         std::int64_t dimension_cap = kDefaultDimensionCap);

Operator identity(const HilbertSpace& space);
Operator annihilation(const HilbertSpace& space);
Operator creation(const HilbertSpace& space);
Operator number(const HilbertSpace& space);

/// |i><j| acting on atom k (1-based), identity on every other factor.
Operator atomic_transition(const HilbertSpace& space, int k, Level i, Level j);

/// S_ij = sum_k |i><j|_k.
Operator collective(const HilbertSpace& space, Level i, Level j);

/// I_atoms (x) |n><n|.
Operator fock_projector(const HilbertSpace& space, int n);

}  // namespace cavity_eit
