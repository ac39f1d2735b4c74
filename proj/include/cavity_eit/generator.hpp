#pragma once

#include <memory>
#include <vector>

#include "cavity_eit/hilbert.hpp"
#include "cavity_eit/model.hpp"

namespace cavity_eit {

/// Matrix-free Lindblad generator acting on dense density matrices:
///   L(rho) = G rho + rho G^dag + sum_c rate_c C rho C^dag,
/// with G = -i H - K/2 = -i H_eff and K = sum_c rate_c C^dag C.
class LindbladGenerator {
 public:
  LindbladGenerator(const HilbertSpace& space, const SystemParams& params);

  const HilbertSpace& space() const { return space_; }
  const SystemParams& params() const { return params_; }
  const std::vector<JumpOperator>& jumps() const { return shared_->jumps; }
  /// -i H_eff
  const SparseMatrix& drift() const { return drift_; }

  /// Same generator at another probe detuning; detuning-independent parts
  /// are shared, not copied.
  LindbladGenerator with_detuning(double delta_p) const;

  void apply(const DenseMatrix& rho, DenseMatrix& out) const;
  /// sum_c rate_c C rho C^dag
  void apply_jumps(const DenseMatrix& rho, DenseMatrix& out) const;

 private:
  using RowSparse = Eigen::SparseMatrix<Complex, Eigen::RowMajor, int>;
  struct Shared {
    std::vector<JumpOperator> jumps;
    std::vector<RowSparse> jump_adjoints;
    SparseMatrix detuning_drift;  // -i (S11 - a^dag a)
    SparseMatrix resonant_drift;  // drift at delta_p = 0
  };
  LindbladGenerator(const HilbertSpace& space, const SystemParams& params,
                    std::shared_ptr<const Shared> shared);

  HilbertSpace space_;
  SystemParams params_;
  std::shared_ptr<const Shared> shared_;
  SparseMatrix drift_;
  RowSparse drift_adjoint_;
};

}  // namespace cavity_eit
