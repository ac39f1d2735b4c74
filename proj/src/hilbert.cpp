#include "cavity_eit/hilbert.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cavity_eit/errors.hpp"

namespace cavity_eit {

HilbertSpace::HilbertSpace(int n_atoms, int fock_dim,
                           std::int64_t dimension_cap)
    : n_atoms_(n_atoms), fock_dim_(fock_dim), atomic_dim_(1), dim_(0) {
  if (n_atoms < 1) {
    throw ConfigError("n_atoms must be >= 1, got " + std::to_string(n_atoms));
  }
  if (fock_dim < 2) {
    throw ConfigError("fock_dim must be >= 2, got " + std::to_string(fock_dim));
  }
  std::int64_t atomic = 1;
  for (int k = 0; k < n_atoms; ++k) {
    atomic *= kLevels;
    if (atomic > std::numeric_limits<int>::max()) {
      throw TruncationError("3^n_atoms overflows the index type");
    }
  }
  const std::int64_t total = atomic * fock_dim;
  // The Liouville space (dim^2) has to be addressable with int indices too.
  const std::int64_t max_dim =
      static_cast<std::int64_t>(std::sqrt(double(std::numeric_limits<int>::max())));
  if (total > max_dim) {
    throw TruncationError("Hilbert dimension " + std::to_string(total) +
                          " overflows the Liouville index type");
  }
  if (total > dimension_cap) {
    throw TruncationError("Hilbert dimension " + std::to_string(total) +
                          " exceeds the cap " + std::to_string(dimension_cap));
  }
  atomic_dim_ = static_cast<int>(atomic);
  dim_ = static_cast<int>(total);
}

int HilbertSpace::atom_level(int index, int k) const {
  int atomic = index / fock_dim_;
  for (int m = n_atoms_; m > k; --m) atomic /= kLevels;
  return atomic % kLevels;
}

Operator::Operator(const HilbertSpace& space, SparseMatrix data)
    : space_(space), data_(prune(std::move(data))) {
  if (data_.rows() != space_.dim() || data_.cols() != space_.dim()) {
    throw ConfigError("operator shape does not match its Hilbert space");
  }
}

Operator Operator::adjoint() const {
  return Operator(space_, SparseMatrix(data_.adjoint()));
}

Operator Operator::operator+(const Operator& rhs) const {
  if (space_ != rhs.space_) throw ConfigError("operator space mismatch");
  return Operator(space_, data_ + rhs.data_);
}

Operator Operator::operator-(const Operator& rhs) const {
  if (space_ != rhs.space_) throw ConfigError("operator space mismatch");
  return Operator(space_, data_ - rhs.data_);
}

Operator Operator::operator*(const Operator& rhs) const {
  if (space_ != rhs.space_) throw ConfigError("operator space mismatch");
  return Operator(space_, data_ * rhs.data_);
}

Operator Operator::operator*(Complex scale) const {
  return Operator(space_, data_ * scale);
}

SparseMatrix prune(SparseMatrix m) {
  m.prune([](int, int, const Complex& v) { return std::abs(v) >= kPruneThreshold; });
  m.makeCompressed();
  return m;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros()) * b.nonZeros());
  for (int ca = 0; ca < a.outerSize(); ++ca) {
    for (SparseMatrix::InnerIterator ia(a, ca); ia; ++ia) {
      for (int cb = 0; cb < b.outerSize(); ++cb) {
        for (SparseMatrix::InnerIterator ib(b, cb); ib; ++ib) {
          triplets.emplace_back(ia.row() * b.rows() + ib.row(),
                                ia.col() * b.cols() + ib.col(),
                                ia.value() * ib.value());
        }
      }
    }
  }
  SparseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SparseMatrix sparse_identity(int n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

HilbertSpace build_space(int n_atoms, int fock_dim, std::int64_t dimension_cap) {
  return HilbertSpace(n_atoms, fock_dim, dimension_cap);
}

namespace {

int pow3(int e) {
  int r = 1;
  while (e-- > 0) r *= kLevels;
  return r;
}

SparseMatrix local_ladder(int fock_dim) {
  SparseMatrix a(fock_dim, fock_dim);
  for (int n = 1; n < fock_dim; ++n) a.insert(n - 1, n) = std::sqrt(double(n));
  a.makeCompressed();
  return a;
}

SparseMatrix local_transition(Level i, Level j) {
  SparseMatrix s(kLevels, kLevels);
  s.insert(static_cast<int>(i) - 1, static_cast<int>(j) - 1) = 1.0;
  s.makeCompressed();
  return s;
}

// atoms-part (x) cavity-part with atom k carrying `local`, identities elsewhere.
SparseMatrix embed_atom(const HilbertSpace& space, int k, const SparseMatrix& local) {
  const int before = pow3(k - 1);
  const int after = pow3(space.n_atoms() - k) * space.fock_dim();
  return kron(kron(sparse_identity(before), local), sparse_identity(after));
}

}  // namespace

Operator identity(const HilbertSpace& space) {
  return Operator(space, sparse_identity(space.dim()));
}

Operator annihilation(const HilbertSpace& space) {
  return Operator(space, kron(sparse_identity(space.atomic_dim()),
                              local_ladder(space.fock_dim())));
}

Operator creation(const HilbertSpace& space) {
  return annihilation(space).adjoint();
}

Operator number(const HilbertSpace& space) {
  const Operator a = annihilation(space);
  return a.adjoint() * a;
}

Operator atomic_transition(const HilbertSpace& space, int k, Level i, Level j) {
  if (k < 1 || k > space.n_atoms()) {
    throw ConfigError("atom index " + std::to_string(k) + " outside 1.." +
                      std::to_string(space.n_atoms()));
  }
  const int li = static_cast<int>(i);
  const int lj = static_cast<int>(j);
  if (li < 1 || li > kLevels || lj < 1 || lj > kLevels) {
    throw ConfigError("atomic level outside {1,2,3}");
  }
  return Operator(space, embed_atom(space, k, local_transition(i, j)));
}

Operator collective(const HilbertSpace& space, Level i, Level j) {
  SparseMatrix sum(space.dim(), space.dim());
  for (int k = 1; k <= space.n_atoms(); ++k) {
    sum += atomic_transition(space, k, i, j).matrix();
  }
  return Operator(space, std::move(sum));
}

Operator fock_projector(const HilbertSpace& space, int n) {
  if (n < 0 || n >= space.fock_dim()) {
    throw TruncationError("Fock level " + std::to_string(n) +
                          " outside the truncation 0.." +
                          std::to_string(space.fock_dim() - 1));
  }
  SparseMatrix local(space.fock_dim(), space.fock_dim());
  local.insert(n, n) = 1.0;
  return Operator(space, kron(sparse_identity(space.atomic_dim()), local));
}

}  // namespace cavity_eit
