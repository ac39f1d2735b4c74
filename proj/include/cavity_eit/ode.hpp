#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "cavity_eit/errors.hpp"

namespace cavity_eit {

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 1e-3;
  double min_step = 1e-12;
  double max_step = 1.0;
  long max_steps = 50'000'000;
};

/// Dormand-Prince 5(4) with FSAL and a standard PI-free step controller.
/// `State` is any Eigen vector type; `Rhs` is callable as rhs(t, y, dydt).
template <typename State>
class DormandPrince {
 public:
  using Rhs = std::function<void(double, const State&, State&)>;

  DormandPrince(Rhs rhs, OdeOptions options) : rhs_(std::move(rhs)), opt_(options) {}

  /// Integrates y from t to t_end in place. `on_step(t, y)` is called after
  /// every accepted step and may return false to stop early.
  template <typename Callback>
  double integrate(double t, double t_end, State& y, Callback&& on_step) {
    double h = std::min(opt_.initial_step, opt_.max_step);
    const Eigen::Index n = y.size();
    State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n), err(n);
    rhs_(t, y, k1);
    long steps = 0;
    while (t < t_end) {
      if (++steps > opt_.max_steps) {
        throw SolverError("ODE integration exceeded the step budget at t=" +
                          std::to_string(t));
      }
      h = std::min(h, t_end - t);
      tmp = y + h * (a21 * k1);
      rhs_(t + c2 * h, tmp, k2);
      tmp = y + h * (a31 * k1 + a32 * k2);
      rhs_(t + c3 * h, tmp, k3);
      tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs_(t + c4 * h, tmp, k4);
      tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs_(t + c5 * h, tmp, k5);
      tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs_(t + h, tmp, k6);
      y5 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      rhs_(t + h, y5, k7);
      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double norm = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double scale =
            opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
        const double r = std::abs(err[i]) / scale;
        norm += r * r;
      }
      norm = std::sqrt(norm / static_cast<double>(n));

      if (norm <= 1.0) {
        t += h;
        y.swap(y5);
        k1.swap(k7);
        if (!on_step(t, y)) return t;
      }
      const double factor =
          norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
      h = std::min(h * factor, opt_.max_step);
      if (h < opt_.min_step && t < t_end) {
        throw SolverError("ODE step size underflow at t=" + std::to_string(t));
      }
    }
    return t;
  }

  double integrate(double t, double t_end, State& y) {
    return integrate(t, t_end, y, [](double, const State&) { return true; });
  }

 private:
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  // Difference between the 5th- and embedded 4th-order weights.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Rhs rhs_;
  OdeOptions opt_;
};

}  // namespace cavity_eit
