#pragma once

#include <string>
#include <vector>

#include "cavity_eit/hilbert.hpp"

namespace cavity_eit {

/// Physical rates and drives, all in units of the cavity intensity decay
/// rate kappa. Drive phases are absorbed: epsilon, g and omega_c are real
/// and non-negative.
struct SystemParams {
  double kappa = 1.0;
  double gamma31 = 0.0;  ///< spontaneous decay |3> -> |1>
  double gamma32 = 0.0;  ///< spontaneous decay |3> -> |2>
  double gamma1 = 0.0;   ///< dephasing of |1>
  double gamma2 = 0.0;   ///< dephasing of |2>
  double g = 0.0;        ///< single-atom cavity coupling on |1> <-> |3>
  double omega_c = 0.0;  ///< control coupling on |2> <-> |3> (Rabi frequency 2*omega_c)
  double epsilon = 0.0;  ///< probe drive on the cavity
  double delta_p = 0.0;  ///< cavity-probe detuning omega - omega_p

  /// Throws ConfigError naming the first offending field.
  void validate() const;
  double total_decay() const { return gamma31 + gamma32; }
};

struct JumpOperator {
  double rate;
  Operator op;
  std::string label;
};

/// Linear map on column-vectorized density matrices:
/// vec(A rho B) = (B^T (x) A) vec(rho).
class Superoperator {
 public:
  Superoperator(const HilbertSpace& space, SparseMatrix data);

  const HilbertSpace& space() const { return space_; }
  const SparseMatrix& matrix() const { return data_; }

  DenseMatrix apply(const DenseMatrix& rho) const;

 private:
  HilbertSpace space_;
  SparseMatrix data_;
};

Vector vectorize(const DenseMatrix& rho);
DenseMatrix unvectorize(const Vector& v, int dim);

/// H = dp S11 - dp a^dag a + eps (a + a^dag) + g (a S31 + a^dag S13)
///     + omega_c (S32 + S23)
Operator hamiltonian(const HilbertSpace& space, const SystemParams& params);

/// Detuning-proportional part of the Hamiltonian, S11 - a^dag a (diagonal).
Operator detuning_generator(const HilbertSpace& space);

/// Collapse channels with non-zero rate: cavity loss, per-atom decay from
/// |3> to |1>,|2>, and per-atom dephasing of |1>,|2>, in that order.
std::vector<JumpOperator> jump_operators(const HilbertSpace& space,
                                         const SystemParams& params);

/// -i[H, .] plus rate/2 (2 C . C^dag - C^dag C . - . C^dag C) per channel.
Superoperator liouvillian(const HilbertSpace& space, const SystemParams& params);

/// Liouvillian split as L(dp) = fixed + dp * diag(detuning). The pattern of
/// `fixed` contains the full diagonal so that every detuning shares one
/// sparsity pattern.
struct SplitLiouvillian {
  HilbertSpace space;
  SparseMatrix fixed;
  Vector detuning;

  SparseMatrix at(double delta_p) const;
};

SplitLiouvillian split_liouvillian(const HilbertSpace& space,
                                   const SystemParams& params);

/// ||L(dp)||_inf for every detuning without storing L: off-diagonal absolute
/// row sums plus the detuning-dependent diagonal.
struct LiouvillianNorm {
  Eigen::VectorXd off_diagonal;
  Vector diagonal;
  Vector detuning;

  double at(double delta_p) const;
};

LiouvillianNorm liouvillian_norm(const HilbertSpace& space, const SystemParams& params);

}  // namespace cavity_eit
