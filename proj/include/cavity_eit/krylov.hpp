#pragma once

#include <functional>

#include "cavity_eit/hilbert.hpp"

namespace cavity_eit {

struct GmresOptions {
  double tolerance = 1e-12;  ///< on ||b - A x||_2 / ||b||_2
  int restart = 80;
  int max_iterations = 4000;
};

struct GmresReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

using LinearOperator = std::function<void(const Vector& in, Vector& out)>;

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations. `x`
/// holds the initial guess on entry.
GmresReport gmres(const LinearOperator& apply, const Vector& b, Vector& x,
                  const GmresOptions& options);

}  // namespace cavity_eit
