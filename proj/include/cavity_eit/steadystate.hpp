#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cavity_eit/hilbert.hpp"
#include "cavity_eit/model.hpp"
#include "cavity_eit/ode.hpp"

namespace cavity_eit {

/// Hermitian, unit-trace state on a HilbertSpace.
class DensityMatrix {
 public:
  DensityMatrix(const HilbertSpace& space, DenseMatrix data);

  /// |psi><psi| for a normalized state vector.
  static DensityMatrix pure(const HilbertSpace& space, const Vector& psi);
  /// Basis projector |index><index|.
  static DensityMatrix basis(const HilbertSpace& space, int index);
  /// All atoms in |1>, cavity in vacuum.
  static DensityMatrix ground(const HilbertSpace& space);

  const HilbertSpace& space() const { return space_; }
  const DenseMatrix& matrix() const { return data_; }

  Complex trace() const { return data_.trace(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;

 private:
  HilbertSpace space_;
  DenseMatrix data_;
};

/// Direct: sparse LU of the bordered Liouvillian. Iterative: restarted GMRES;
/// for a bare Superoperator it is preconditioned by incomplete LU, inside
/// SteadyStateSweeper by an excitation-block Sylvester solve. Auto picks
/// Direct up to `direct_limit` Liouville-space unknowns.
enum class LinearSolver { Auto, Direct, Iterative };

struct SteadyStateOptions {
  LinearSolver solver = LinearSolver::Auto;
  std::int64_t direct_limit = 2500;
  /// Relative residual target for the GMRES paths.
  double iterative_tolerance = 1e-12;
  int iterative_restart = 80;
  int iterative_max_iterations = 4000;
  /// Uniform decay added to the Sylvester preconditioner so that its
  /// vacuum block is invertible.
  double preconditioner_shift = 0.1;
  /// Minimum-eigenvalue floor; lower values produce a warning.
  double positivity_tolerance = 1e-8;
  bool check_positivity = true;
};

struct SteadyState {
  DensityMatrix rho;
  /// ||L vec(rho)||_inf / ||L||_inf
  double relative_residual = 0.0;
  double min_eigenvalue = 0.0;
  std::vector<std::string> warnings;
};

/// Unique steady state of L from the bordered system: the row of L for
/// rho_00 is replaced by the trace functional, right-hand side e_0.
/// Throws SolverError when the kernel of L is not one-dimensional or the
/// residual misses 1e-10 * ||L||_inf.
SteadyState steady_state(const Superoperator& liouvillian,
                         const SteadyStateOptions& options = {});

/// Reuses one symbolic factorization across many probe detunings.
class SteadyStateSweeper {
 public:
  SteadyStateSweeper(const HilbertSpace& space, const SystemParams& params,
                     SteadyStateOptions options = {});
  ~SteadyStateSweeper();
  SteadyStateSweeper(SteadyStateSweeper&&) noexcept;
  SteadyStateSweeper& operator=(SteadyStateSweeper&&) noexcept;

  /// Steady state at the given probe detuning. The iterative path warm-starts
  /// from the previous solution, so results depend (at the solver tolerance)
  /// on the call order.
  SteadyState solve(double delta_p);

  const HilbertSpace& space() const { return space_; }
  const SystemParams& params() const { return params_; }
  bool uses_direct_solver() const { return direct_; }
  /// GMRES iterations spent in the last iterative solve.
  int last_iterations() const { return last_iterations_; }

 private:
  struct Direct;
  struct Krylov;
  SteadyState solve_direct(double delta_p);
  SteadyState solve_krylov(double delta_p);

  HilbertSpace space_;
  SystemParams params_;
  SteadyStateOptions options_;
  bool direct_;
  int last_iterations_ = 0;
  std::unique_ptr<Direct> direct_state_;
  std::unique_ptr<Krylov> krylov_state_;
};

/// rho(t_final) under d vec(rho)/dt = L vec(rho), Dormand-Prince with
/// relative tolerance rtol. Throws SolverError on step-size underflow or
/// when trace/Hermiticity drift beyond 10 * rtol.
DensityMatrix evolve(const Superoperator& liouvillian, const DensityMatrix& rho0,
                     double t_final, double rtol);

/// Bordered matrix: row 0 replaced by the trace functional.
SparseMatrix bordered_system(const SparseMatrix& liouvillian, int dim);

double infinity_norm(const SparseMatrix& m);

}  // namespace cavity_eit
