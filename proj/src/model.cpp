#include "cavity_eit/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "cavity_eit/errors.hpp"

namespace cavity_eit {

namespace {

void require_nonnegative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string(name) + " must be a finite non-negative number");
  }
}

struct Entry {
  int row;
  Complex value;
};

// Visits L = I (x) G + conj(G) (x) I + sum_c rate_c conj(C) (x) C column by
// column with G = -iH - K/2 and K = sum_c rate_c C^dag C. Each column arrives
// with rows sorted and duplicates merged; entries below the prune threshold are
// dropped unless they sit on the diagonal and `full_diagonal` is set.
template <typename Sink>
void visit_columns(const HilbertSpace& space, const SparseMatrix& h,
                   const std::vector<JumpOperator>& jumps, bool full_diagonal,
                   Sink&& sink) {
  const int m = space.dim();
  SparseMatrix k(m, m);
  for (const auto& jump : jumps) {
    const SparseMatrix& c = jump.op.matrix();
    k += jump.rate * SparseMatrix(c.adjoint() * c);
  }
  const Complex i_unit(0.0, 1.0);
  SparseMatrix g = prune(SparseMatrix(-i_unit * h - 0.5 * k));
  SparseMatrix g_conj = g.conjugate();

  std::vector<Entry> column;
  std::vector<Entry> merged;
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < m; ++r) {
      const int col = c * m + r;
      column.clear();
      merged.clear();
      if (full_diagonal) column.push_back({col, Complex(0.0)});
      // I (x) G: rows c*m + r' with G(r', r).
      for (SparseMatrix::InnerIterator it(g, r); it; ++it) {
        column.push_back({c * m + static_cast<int>(it.row()), it.value()});
      }
      // conj(G) (x) I: rows c'*m + r with conj(G)(c', c).
      for (SparseMatrix::InnerIterator it(g_conj, c); it; ++it) {
        column.push_back({static_cast<int>(it.row()) * m + r, it.value()});
      }
      for (const auto& jump : jumps) {
        const SparseMatrix& op = jump.op.matrix();
        for (SparseMatrix::InnerIterator left(op, c); left; ++left) {
          const Complex lv = std::conj(left.value()) * jump.rate;
          for (SparseMatrix::InnerIterator right(op, r); right; ++right) {
            column.push_back({static_cast<int>(left.row() * m + right.row()),
                              lv * right.value()});
          }
        }
      }
      std::sort(column.begin(), column.end(),
                [](const Entry& a, const Entry& b) { return a.row < b.row; });
      for (std::size_t n = 0; n < column.size();) {
        const int row = column[n].row;
        Complex sum(0.0);
        while (n < column.size() && column[n].row == row) sum += column[n++].value;
        if (std::abs(sum) >= kPruneThreshold || (full_diagonal && row == col)) {
          merged.push_back({row, sum});
        }
      }
      sink(col, merged);
    }
  }
}

SparseMatrix assemble(const HilbertSpace& space, const SparseMatrix& h,
                      const std::vector<JumpOperator>& jumps, bool full_diagonal) {
  const int m = space.dim();
  std::vector<int> outer;
  std::vector<int> inner;
  std::vector<Complex> values;
  outer.reserve(static_cast<std::size_t>(m) * m + 1);
  outer.push_back(0);
  visit_columns(space, h, jumps, full_diagonal,
                [&](int, const std::vector<Entry>& entries) {
                  for (const auto& e : entries) {
                    inner.push_back(e.row);
                    values.push_back(e.value);
                  }
                  outer.push_back(static_cast<int>(inner.size()));
                });
  const int n = m * m;
  Eigen::Map<const SparseMatrix> view(n, n, static_cast<int>(inner.size()),
                                      outer.data(), inner.data(), values.data());
  return SparseMatrix(view);
}

Vector detuning_diagonal(const HilbertSpace& space) {
  const SparseMatrix hd = detuning_generator(space).matrix();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(space.dim());
  for (int c = 0; c < hd.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(hd, c); it; ++it) diag[it.row()] = it.value().real();
  }
  const int m = space.dim();
  Vector out(space.liouville_dim());
  // -i (I (x) Hd - Hd^T (x) I) is diagonal.
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < m; ++r) out[c * m + r] = Complex(0.0, -(diag[r] - diag[c]));
  }
  return out;
}

}  // namespace

void SystemParams::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw ConfigError("kappa must be positive");
  }
  require_nonnegative(gamma31, "gamma31");
  require_nonnegative(gamma32, "gamma32");
  require_nonnegative(gamma1, "gamma1");
  require_nonnegative(gamma2, "gamma2");
  require_nonnegative(g, "g");
  require_nonnegative(omega_c, "omega_c");
  require_nonnegative(epsilon, "epsilon");
  if (!std::isfinite(delta_p)) throw ConfigError("delta_p must be finite");
}

Superoperator::Superoperator(const HilbertSpace& space, SparseMatrix data)
    : space_(space), data_(std::move(data)) {
  if (data_.rows() != space_.liouville_dim() || data_.cols() != space_.liouville_dim()) {
    throw ConfigError("superoperator shape does not match its Hilbert space");
  }
}

DenseMatrix Superoperator::apply(const DenseMatrix& rho) const {
  return unvectorize(data_ * vectorize(rho), space_.dim());
}

Vector vectorize(const DenseMatrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

DenseMatrix unvectorize(const Vector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) {
    throw ConfigError("vector length is not dim^2");
  }
  return Eigen::Map<const DenseMatrix>(v.data(), dim, dim);
}

Operator detuning_generator(const HilbertSpace& space) {
  return collective(space, Level::One, Level::One) - number(space);
}

Operator hamiltonian(const HilbertSpace& space, const SystemParams& params) {
  params.validate();
  const Operator a = annihilation(space);
  const Operator ad = a.adjoint();
  const Operator s31 = collective(space, Level::Three, Level::One);
  const Operator s32 = collective(space, Level::Three, Level::Two);
  Operator h = detuning_generator(space) * params.delta_p +
               (a + ad) * params.epsilon +
               (a * s31 + ad * s31.adjoint()) * params.g +
               (s32 + s32.adjoint()) * params.omega_c;
  if ((h - h.adjoint()).matrix().nonZeros() != 0) {
    throw SolverError("assembled Hamiltonian is not Hermitian");
  }
  return h;
}

std::vector<JumpOperator> jump_operators(const HilbertSpace& space,
                                         const SystemParams& params) {
  params.validate();
  std::vector<JumpOperator> jumps;
  jumps.push_back({params.kappa, annihilation(space), "cavity"});
  for (int k = 1; k <= space.n_atoms(); ++k) {
    const std::string atom = "[" + std::to_string(k) + "]";
    if (params.gamma31 > 0.0) {
      jumps.push_back({params.gamma31,
                       atomic_transition(space, k, Level::One, Level::Three),
                       "decay31" + atom});
    }
    if (params.gamma32 > 0.0) {
      jumps.push_back({params.gamma32,
                       atomic_transition(space, k, Level::Two, Level::Three),
                       "decay32" + atom});
    }
  }
  for (int k = 1; k <= space.n_atoms(); ++k) {
    const std::string atom = "[" + std::to_string(k) + "]";
    if (params.gamma1 > 0.0) {
      jumps.push_back({params.gamma1,
                       atomic_transition(space, k, Level::One, Level::One),
                       "dephase1" + atom});
    }
    if (params.gamma2 > 0.0) {
      jumps.push_back({params.gamma2,
                       atomic_transition(space, k, Level::Two, Level::Two),
                       "dephase2" + atom});
    }
  }
  return jumps;
}

Superoperator liouvillian(const HilbertSpace& space, const SystemParams& params) {
  return Superoperator(space, assemble(space, hamiltonian(space, params).matrix(),
                                       jump_operators(space, params), false));
}

SplitLiouvillian split_liouvillian(const HilbertSpace& space,
                                   const SystemParams& params) {
  SystemParams resonant = params;
  resonant.delta_p = 0.0;
  return SplitLiouvillian{space,
                          assemble(space, hamiltonian(space, resonant).matrix(),
                                   jump_operators(space, resonant), true),
                          detuning_diagonal(space)};
}

LiouvillianNorm liouvillian_norm(const HilbertSpace& space, const SystemParams& params) {
  SystemParams resonant = params;
  resonant.delta_p = 0.0;
  const std::int64_t n = space.liouville_dim();
  LiouvillianNorm norm{Eigen::VectorXd::Zero(n), Vector::Zero(n), detuning_diagonal(space)};
  visit_columns(space, hamiltonian(space, resonant).matrix(),
                jump_operators(space, resonant), false,
                [&](int col, const std::vector<Entry>& entries) {
                  for (const auto& e : entries) {
                    if (e.row == col) {
                      norm.diagonal[col] = e.value;
                    } else {
                      norm.off_diagonal[e.row] += std::abs(e.value);
                    }
                  }
                });
  return norm;
}

double LiouvillianNorm::at(double delta_p) const {
  return (off_diagonal.array() + (diagonal + delta_p * detuning).array().abs()).maxCoeff();
}

SparseMatrix SplitLiouvillian::at(double delta_p) const {
  SparseMatrix out = fixed;
  const Eigen::Index n = out.outerSize();
  for (Eigen::Index col = 0; col < n; ++col) {
    out.coeffRef(col, col) += delta_p * detuning[col];
  }
  return out;
}

}  // namespace cavity_eit
