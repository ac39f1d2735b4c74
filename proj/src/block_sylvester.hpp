#pragma once

#include <vector>

#include "cavity_eit/hilbert.hpp"

namespace cavity_eit::detail {

/// Inverse of X -> A X + X A^dag for a sparse A that is block diagonal in a
/// given labelling of basis states. Each block is Schur-factorized once;
/// applying the inverse costs O(dim * sum_p n_p^2).
class BlockSylvester {
 public:
  /// Throws SolverError if A couples states with different labels.
  BlockSylvester(const SparseMatrix& a, const std::vector<int>& labels);

  void solve(const DenseMatrix& rhs, DenseMatrix& x) const;

  std::size_t block_count() const { return blocks_.size(); }

 private:
  struct Block {
    Eigen::Index offset;  // position in the label-sorted basis
    Eigen::Index size;
    DenseMatrix schur_vectors;
    DenseMatrix triangular;
  };
  Eigen::VectorXi order_;  // label-sorted basis -> original index
  std::vector<Block> blocks_;
};

/// Excitation label used to block-diagonalize the probe-free drift:
/// photon number plus the number of atoms outside |1>.
std::vector<int> excitation_labels(const HilbertSpace& space);

}  // namespace cavity_eit::detail
