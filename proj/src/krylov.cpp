#include "cavity_eit/krylov.hpp"

#include <cmath>
#include <vector>

namespace cavity_eit {

namespace {

// Rotation that zeroes b in (a, b).
void givens(const Complex& a, const Complex& b, double& c, Complex& s) {
  const double abs_a = std::abs(a);
  const double abs_b = std::abs(b);
  if (abs_b == 0.0) {
    c = 1.0;
    s = 0.0;
    return;
  }
  if (abs_a == 0.0) {
    c = 0.0;
    s = std::conj(b) / abs_b;
    return;
  }
  const double r = std::hypot(abs_a, abs_b);
  c = abs_a / r;
  s = (a / abs_a) * std::conj(b) / r;
}

}  // namespace

GmresReport gmres(const LinearOperator& apply, const Vector& b, Vector& x,
                  const GmresOptions& options) {
  GmresReport report;
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    x.setZero();
    report.converged = true;
    return report;
  }
  const int m = options.restart;
  const Eigen::Index n = b.size();
  std::vector<Vector> basis(m + 1, Vector(n));
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m + 1, m);
  std::vector<double> cs(m);
  std::vector<Complex> sn(m);
  Vector g(m + 1);
  Vector w(n);

  while (report.iterations < options.max_iterations) {
    apply(x, w);
    basis[0] = b - w;
    double beta = basis[0].norm();
    report.relative_residual = beta / b_norm;
    if (report.relative_residual <= options.tolerance) {
      report.converged = true;
      return report;
    }
    basis[0] /= beta;
    g.setZero();
    g[0] = beta;
    h.setZero();
    int k = 0;
    for (; k < m && report.iterations < options.max_iterations; ++k) {
      ++report.iterations;
      apply(basis[k], w);
      for (int j = 0; j <= k; ++j) {
        h(j, k) = basis[j].dot(w);
        w -= h(j, k) * basis[j];
      }
      h(k + 1, k) = w.norm();
      if (std::abs(h(k + 1, k)) > 0.0) basis[k + 1] = w / h(k + 1, k);
      for (int j = 0; j < k; ++j) {
        const Complex t = cs[j] * h(j, k) + sn[j] * h(j + 1, k);
        h(j + 1, k) = -std::conj(sn[j]) * h(j, k) + cs[j] * h(j + 1, k);
        h(j, k) = t;
      }
      givens(h(k, k), h(k + 1, k), cs[k], sn[k]);
      h(k, k) = cs[k] * h(k, k) + sn[k] * h(k + 1, k);
      h(k + 1, k) = 0.0;
      g[k + 1] = -std::conj(sn[k]) * g[k];
      g[k] = cs[k] * g[k];
      report.relative_residual = std::abs(g[k + 1]) / b_norm;
      if (report.relative_residual <= options.tolerance) {
        ++k;
        break;
      }
    }
    // Back-substitute the k x k triangular system and update x.
    Vector y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int j = 0; j < k; ++j) x += y[j] * basis[j];
    if (report.relative_residual <= options.tolerance) {
      apply(x, w);
      report.relative_residual = (b - w).norm() / b_norm;
      if (report.relative_residual <= options.tolerance * 10.0) {
        report.converged = true;
        return report;
      }
    }
  }
  return report;
}

}  // namespace cavity_eit
