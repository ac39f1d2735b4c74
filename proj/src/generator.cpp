#include "cavity_eit/generator.hpp"

#include <utility>

namespace cavity_eit {

namespace {

SparseMatrix drift_at_resonance(const HilbertSpace& space, const SystemParams& params,
                                const std::vector<JumpOperator>& jumps) {
  SystemParams resonant = params;
  resonant.delta_p = 0.0;
  SparseMatrix k(space.dim(), space.dim());
  for (const auto& jump : jumps) {
    const SparseMatrix& c = jump.op.matrix();
    k += jump.rate * SparseMatrix(c.adjoint() * c);
  }
  return prune(SparseMatrix(Complex(0.0, -1.0) * hamiltonian(space, resonant).matrix() -
                            0.5 * k));
}

}  // namespace

LindbladGenerator::LindbladGenerator(const HilbertSpace& space, const SystemParams& params)
    : space_(space), params_(params) {
  params_.validate();
  auto shared = std::make_shared<Shared>();
  shared->jumps = jump_operators(space, params);
  for (const auto& jump : shared->jumps) shared->jump_adjoints.emplace_back(jump.op.matrix().adjoint());
  shared->detuning_drift = Complex(0.0, -1.0) * detuning_generator(space).matrix();
  shared->resonant_drift = drift_at_resonance(space, params, shared->jumps);
  shared_ = std::move(shared);
  drift_ = shared_->resonant_drift + params_.delta_p * shared_->detuning_drift;
  drift_adjoint_ = drift_.adjoint();
}

LindbladGenerator::LindbladGenerator(const HilbertSpace& space, const SystemParams& params,
                                     std::shared_ptr<const Shared> shared)
    : space_(space), params_(params), shared_(std::move(shared)) {
  params_.validate();
  drift_ = shared_->resonant_drift + params_.delta_p * shared_->detuning_drift;
  drift_adjoint_ = drift_.adjoint();
}

LindbladGenerator LindbladGenerator::with_detuning(double delta_p) const {
  SystemParams p = params_;
  p.delta_p = delta_p;
  return LindbladGenerator(space_, p, shared_);
}

void LindbladGenerator::apply_jumps(const DenseMatrix& rho, DenseMatrix& out) const {
  out.setZero(rho.rows(), rho.cols());
  DenseMatrix left(rho.rows(), rho.cols());
  for (std::size_t i = 0; i < shared_->jumps.size(); ++i) {
    const JumpOperator& jump = shared_->jumps[i];
    left.noalias() = jump.op.matrix() * rho;
    out.noalias() += jump.rate * (left * shared_->jump_adjoints[i]);
  }
}

void LindbladGenerator::apply(const DenseMatrix& rho, DenseMatrix& out) const {
  apply_jumps(rho, out);
  out.noalias() += drift_ * rho;
  out.noalias() += rho * drift_adjoint_;
}

}  // namespace cavity_eit
