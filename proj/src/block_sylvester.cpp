#include "block_sylvester.hpp"

#include <algorithm>
#include <map>

#include <Eigen/Eigenvalues>

#include "cavity_eit/errors.hpp"

namespace cavity_eit::detail {

namespace {

// Solves T_p X + X T_q^dag = C for upper-triangular T_p, T_q, overwriting C.
template <typename Block>
void triangular_sylvester(const DenseMatrix& tp, const DenseMatrix& tq, Block&& c) {
  const Eigen::Index np = tp.rows();
  const Eigen::Index nq = tq.rows();
  for (Eigen::Index j = nq - 1; j >= 0; --j) {
    const Eigen::Index tail = nq - 1 - j;
    if (tail > 0) {
      c.col(j).noalias() -= c.rightCols(tail) * tq.row(j).tail(tail).adjoint();
    }
    const Complex shift = std::conj(tq(j, j));
    auto col = c.col(j);
    for (Eigen::Index i = np - 1; i >= 0; --i) {
      col(i) /= tp(i, i) + shift;
      if (i > 0) col.head(i) -= tp.col(i).head(i) * col(i);
    }
  }
}

}  // namespace

std::vector<int> excitation_labels(const HilbertSpace& space) {
  std::vector<int> labels(space.dim());
  for (int i = 0; i < space.dim(); ++i) {
    int excited = 0;
    for (int k = 1; k <= space.n_atoms(); ++k) excited += space.atom_level(i, k) != 0;
    labels[i] = space.photon_number(i) + excited;
  }
  return labels;
}

BlockSylvester::BlockSylvester(const SparseMatrix& a, const std::vector<int>& labels) {
  for (int c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      if (labels[it.row()] != labels[c]) {
        throw SolverError("operator is not block diagonal in the excitation labels");
      }
    }
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) groups[labels[i]].push_back(i);
  const DenseMatrix dense(a);
  order_.resize(static_cast<Eigen::Index>(labels.size()));
  Eigen::Index offset = 0;
  for (const auto& [label, members] : groups) {
    const Eigen::Index size = static_cast<Eigen::Index>(members.size());
    const Eigen::Map<const Eigen::VectorXi> indices(members.data(), size);
    order_.segment(offset, size) = indices;
    Eigen::ComplexSchur<DenseMatrix> schur(dense(indices, indices));
    if (schur.info() != Eigen::Success) {
      throw SolverError("Schur factorization of a drift block failed");
    }
    blocks_.push_back(Block{offset, size, schur.matrixU(), schur.matrixT()});
    offset += size;
  }
}

// Works in the label-sorted basis, where the Schur vectors form a block
// diagonal unitary Q and the problem becomes T Y + Y T^dag = Q^dag C Q.
void BlockSylvester::solve(const DenseMatrix& rhs, DenseMatrix& x) const {
  DenseMatrix y = rhs(order_, order_);
  DenseMatrix panel;
  for (const Block& p : blocks_) {
    panel.noalias() = p.schur_vectors.adjoint() * y.middleRows(p.offset, p.size);
    y.middleRows(p.offset, p.size) = panel;
  }
  for (const Block& q : blocks_) {
    panel.noalias() = y.middleCols(q.offset, q.size) * q.schur_vectors;
    y.middleCols(q.offset, q.size) = panel;
  }
  for (const Block& p : blocks_) {
    for (const Block& q : blocks_) {
      triangular_sylvester(p.triangular, q.triangular, y.block(p.offset, q.offset, p.size, q.size));
    }
  }
  for (const Block& p : blocks_) {
    panel.noalias() = p.schur_vectors * y.middleRows(p.offset, p.size);
    y.middleRows(p.offset, p.size) = panel;
  }
  for (const Block& q : blocks_) {
    panel.noalias() = y.middleCols(q.offset, q.size) * q.schur_vectors.adjoint();
    y.middleCols(q.offset, q.size) = panel;
  }
  x.resize(rhs.rows(), rhs.cols());
  x(order_, order_) = y;
}

}  // namespace cavity_eit::detail
