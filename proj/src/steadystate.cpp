#include "cavity_eit/steadystate.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/UmfPackSupport>
#include <unsupported/Eigen/IterativeSolvers>

#include "block_sylvester.hpp"
#include "cavity_eit/errors.hpp"
#include "cavity_eit/generator.hpp"
#include "cavity_eit/krylov.hpp"

namespace cavity_eit {

namespace {

constexpr double kResidualTolerance = 1e-10;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Symmetrizes, normalizes and validates a raw solution vector.
SteadyState finish(const HilbertSpace& space, const Vector& x, double residual,
                   double l_norm, const SteadyStateOptions& options) {
  if (!x.allFinite()) {
    throw SolverError("steady state solve produced non-finite values; "
                      "the steady state is not unique");
  }
  const double relative = residual / l_norm;
  if (!(relative <= kResidualTolerance)) {
    throw SolverError("steady state residual " + format_double(relative) +
                      " exceeds " + format_double(kResidualTolerance) +
                      " relative to ||L||_inf");
  }
  DenseMatrix rho = unvectorize(x, space.dim());
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const Complex tr = rho.trace();
  rho /= tr;
  SteadyState out{DensityMatrix(space, std::move(rho)), relative, 0.0, {}};
  if (options.check_positivity) {
    out.min_eigenvalue = out.rho.min_eigenvalue();
    if (out.min_eigenvalue < -options.positivity_tolerance) {
      out.warnings.push_back("steady state has eigenvalue " +
                             format_double(out.min_eigenvalue) +
                             " below the positivity floor; either fock_dim is too small "
                             "or the steady state is not unique");
    }
  }
  return out;
}

Vector solve_iterative(const SparseMatrix& bordered, const Vector& rhs,
                       const SteadyStateOptions& options) {
  Eigen::GMRES<SparseMatrix, Eigen::IncompleteLUT<Complex>> gmres;
  gmres.set_restart(options.iterative_restart);
  gmres.setTolerance(options.iterative_tolerance);
  gmres.setMaxIterations(options.iterative_max_iterations);
  gmres.preconditioner().setDroptol(1e-6);
  gmres.preconditioner().setFillfactor(20);
  gmres.compute(bordered);
  if (gmres.info() != Eigen::Success) {
    throw SolverError("preconditioner construction failed for the bordered system");
  }
  Vector x = gmres.solve(rhs);
  if (gmres.info() != Eigen::Success) {
    throw SolverError("GMRES did not converge: " + std::to_string(gmres.iterations()) +
                      " iterations, estimated error " + format_double(gmres.error()));
  }
  return x;
}

Vector unit_rhs(Eigen::Index n) {
  Vector rhs = Vector::Zero(n);
  rhs[0] = 1.0;
  return rhs;
}

}  // namespace

DensityMatrix::DensityMatrix(const HilbertSpace& space, DenseMatrix data)
    : space_(space), data_(std::move(data)) {
  if (data_.rows() != space_.dim() || data_.cols() != space_.dim()) {
    throw ConfigError("density matrix shape does not match its Hilbert space");
  }
}

DensityMatrix DensityMatrix::pure(const HilbertSpace& space, const Vector& psi) {
  return DensityMatrix(space, psi * psi.adjoint());
}

DensityMatrix DensityMatrix::basis(const HilbertSpace& space, int index) {
  DenseMatrix m = DenseMatrix::Zero(space.dim(), space.dim());
  m(index, index) = 1.0;
  return DensityMatrix(space, std::move(m));
}

DensityMatrix DensityMatrix::ground(const HilbertSpace& space) {
  return basis(space, 0);
}

double DensityMatrix::hermiticity_error() const {
  return (data_ - data_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  const DenseMatrix herm = 0.5 * (data_ + data_.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(herm, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double infinity_norm(const SparseMatrix& m) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(m.rows());
  for (int c = 0; c < m.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) row_sums[it.row()] += std::abs(it.value());
  }
  return row_sums.maxCoeff();
}

SparseMatrix bordered_system(const SparseMatrix& liouvillian, int dim) {
  const int n = static_cast<int>(liouvillian.rows());
  std::vector<int> outer;
  std::vector<int> inner;
  std::vector<Complex> values;
  outer.reserve(n + 1);
  inner.reserve(liouvillian.nonZeros() + dim);
  values.reserve(liouvillian.nonZeros() + dim);
  outer.push_back(0);
  for (int col = 0; col < n; ++col) {
    const bool diagonal_element = (col % (dim + 1)) == 0;
    if (diagonal_element) {
      inner.push_back(0);
      values.push_back(1.0);
    }
    for (SparseMatrix::InnerIterator it(liouvillian, col); it; ++it) {
      if (it.row() == 0) continue;
      inner.push_back(it.row());
      values.push_back(it.value());
    }
    outer.push_back(static_cast<int>(inner.size()));
  }
  Eigen::Map<const SparseMatrix> view(n, n, static_cast<int>(inner.size()),
                                      outer.data(), inner.data(), values.data());
  return SparseMatrix(view);
}

SteadyState steady_state(const Superoperator& liouvillian,
                         const SteadyStateOptions& options) {
  const HilbertSpace& space = liouvillian.space();
  const SparseMatrix& l = liouvillian.matrix();
  SparseMatrix system = bordered_system(l, space.dim());
  const Vector rhs = unit_rhs(system.rows());
  Vector x;
  if (options.solver != LinearSolver::Iterative) {
    Eigen::UmfPackLU<SparseMatrix> lu;
    lu.compute(system);
    if (lu.info() != Eigen::Success) {
      throw SolverError("bordered Liouvillian is singular: the steady state is not unique");
    }
    x = lu.solve(rhs);
  } else {
    x = solve_iterative(system, rhs, options);
  }
  const double residual = (l * x).cwiseAbs().maxCoeff();
  return finish(space, x, residual, infinity_norm(l), options);
}

struct SteadyStateSweeper::Direct {
  explicit Direct(SplitLiouvillian s) : split(std::move(s)) {}
  SplitLiouvillian split;
  SparseMatrix system;
  std::vector<Complex> base_values;
  std::vector<int> diagonal_position;  // -1 where row 0 was replaced
  double fixed_norm = 0.0;
  Eigen::UmfPackLU<SparseMatrix> lu;
  bool analyzed = false;
};

struct SteadyStateSweeper::Krylov {
  LindbladGenerator generator;
  LiouvillianNorm norm;
  SparseMatrix probe_coupling;  // a + a^dag
  std::vector<int> labels;
  Vector last;
};

SteadyStateSweeper::SteadyStateSweeper(const HilbertSpace& space,
                                       const SystemParams& params,
                                       SteadyStateOptions options)
    : space_(space), params_(params), options_(options) {
  params_.validate();
  direct_ = options_.solver == LinearSolver::Direct ||
            (options_.solver == LinearSolver::Auto &&
             space.liouville_dim() <= options_.direct_limit);
  if (direct_) {
    direct_state_ = std::make_unique<Direct>(split_liouvillian(space, params));
    Direct& d = *direct_state_;
    d.system = bordered_system(d.split.fixed, space.dim());
    d.base_values.assign(d.system.valuePtr(), d.system.valuePtr() + d.system.nonZeros());
    d.diagonal_position.assign(d.system.cols(), -1);
    for (int col = 1; col < d.system.cols(); ++col) {
      for (int p = d.system.outerIndexPtr()[col]; p < d.system.outerIndexPtr()[col + 1]; ++p) {
        if (d.system.innerIndexPtr()[p] == col) d.diagonal_position[col] = p;
      }
    }
    d.fixed_norm = infinity_norm(d.split.fixed);
  } else {
    const Operator a = annihilation(space);
    krylov_state_ = std::make_unique<Krylov>(Krylov{
        LindbladGenerator(space, params), liouvillian_norm(space, params),
        (a + a.adjoint()).matrix(), detail::excitation_labels(space), Vector()});
  }
}

SteadyStateSweeper::~SteadyStateSweeper() = default;
SteadyStateSweeper::SteadyStateSweeper(SteadyStateSweeper&&) noexcept = default;
SteadyStateSweeper& SteadyStateSweeper::operator=(SteadyStateSweeper&&) noexcept = default;

SteadyState SteadyStateSweeper::solve(double delta_p) {
  return direct_ ? solve_direct(delta_p) : solve_krylov(delta_p);
}

SteadyState SteadyStateSweeper::solve_direct(double delta_p) {
  Direct& d = *direct_state_;
  Complex* values = d.system.valuePtr();
  std::copy(d.base_values.begin(), d.base_values.end(), values);
  for (std::size_t col = 0; col < d.diagonal_position.size(); ++col) {
    if (d.diagonal_position[col] >= 0) values[d.diagonal_position[col]] += delta_p * d.split.detuning[col];
  }
  if (!d.analyzed) {
    d.lu.analyzePattern(d.system);
    d.analyzed = true;
  }
  d.lu.factorize(d.system);
  if (d.lu.info() != Eigen::Success) {
    throw SolverError("bordered Liouvillian is singular at delta_p=" +
                      format_double(delta_p) + ": the steady state is not unique");
  }
  const Vector x = d.lu.solve(unit_rhs(d.system.rows()));
  const Vector lx = d.split.fixed * x + (delta_p * d.split.detuning).cwiseProduct(x);
  const double l_norm =
      (delta_p == 0.0) ? d.fixed_norm : infinity_norm(d.split.at(delta_p));
  return finish(space_, x, lx.cwiseAbs().maxCoeff(), l_norm, options_);
}

// Left-preconditioned fixed-point form. With S0(X) = A X + X A^dag, A the
// drift without the probe term and shifted by -shift/2, and
// R = L - S0, the steady state solves
//   X + S0^{-1}(R(X)) + r0 Tr(X) = r0,   r0 = I/dim.
// The trace term removes the one-dimensional kernel.
SteadyState SteadyStateSweeper::solve_krylov(double delta_p) {
  const double shift = options_.preconditioner_shift;
  Krylov& k = *krylov_state_;
  const int m = space_.dim();
  const LindbladGenerator gen = k.generator.with_detuning(delta_p);
  const double eps = params_.epsilon;
  const Complex i_eps(0.0, eps);

  SparseMatrix shifted = gen.drift() + i_eps * k.probe_coupling;
  for (int i = 0; i < m; ++i) shifted.coeffRef(i, i) -= 0.5 * shift;
  const detail::BlockSylvester s0(prune(shifted), k.labels);

  DenseMatrix jumps(m, m);
  DenseMatrix rest(m, m);
  DenseMatrix corrected(m, m);
  const LinearOperator op = [&](const Vector& in, Vector& out) {
    Eigen::Map<const DenseMatrix> x(in.data(), m, m);
    gen.apply_jumps(x, jumps);
    rest.noalias() = k.probe_coupling * x;
    rest.noalias() -= x * k.probe_coupling;
    rest *= -i_eps;
    rest += jumps + shift * x;
    s0.solve(rest, corrected);
    out.resize(in.size());
    Eigen::Map<DenseMatrix> y(out.data(), m, m);
    y = x + corrected;
    y.diagonal().array() += x.trace() / static_cast<double>(m);
  };

  const Vector b = vectorize(DenseMatrix::Identity(m, m) / static_cast<double>(m));
  Vector x = (k.last.size() == b.size()) ? k.last : b;
  GmresOptions gopt{options_.iterative_tolerance, options_.iterative_restart,
                    options_.iterative_max_iterations};
  last_iterations_ = 0;
  double relative = 0.0;
  DenseMatrix rho;
  DenseMatrix lrho(m, m);
  const double l_norm = k.norm.at(delta_p);
  for (int attempt = 0; attempt < 4; ++attempt) {
    const GmresReport report = gmres(op, b, x, gopt);
    last_iterations_ += report.iterations;
    if (!report.converged) {
      throw SolverError("GMRES did not converge at delta_p=" + format_double(delta_p) +
                        ": residual " + format_double(report.relative_residual) +
                        " after " + std::to_string(report.iterations) + " iterations");
    }
    rho = unvectorize(x, m);
    rho /= rho.trace();
    gen.apply(rho, lrho);
    relative = lrho.cwiseAbs().maxCoeff() / l_norm;
    if (relative <= kResidualTolerance) break;
    gopt.tolerance *= 1e-2;
  }
  k.last = x;
  return finish(space_, vectorize(rho), relative * l_norm, l_norm, options_);
}

DensityMatrix evolve(const Superoperator& liouvillian, const DensityMatrix& rho0,
                     double t_final, double rtol) {
  if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (!(rtol > 0.0)) throw ConfigError("rtol must be positive");
  if (rho0.space() != liouvillian.space()) throw ConfigError("space mismatch in evolve");
  const SparseMatrix& l = liouvillian.matrix();
  OdeOptions opt;
  opt.rtol = rtol;
  opt.atol = rtol * 1e-3;
  opt.max_step = 0.5;
  DormandPrince<Vector> integrator(
      [&l](double, const Vector& y, Vector& dydt) { dydt.noalias() = l * y; }, opt);
  Vector y = vectorize(rho0.matrix());
  integrator.integrate(0.0, t_final, y);
  DensityMatrix out(liouvillian.space(), unvectorize(y, liouvillian.space().dim()));
  const double drift = std::abs(out.trace() - rho0.trace());
  if (drift > 10.0 * rtol || out.hermiticity_error() > 10.0 * rtol) {
    throw SolverError("evolve lost trace or Hermiticity: trace drift " +
                      format_double(drift));
  }
  return out;
}

}  // namespace cavity_eit
