#include "cavity_eit/semiclassical.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "cavity_eit/errors.hpp"
#include "cavity_eit/ode.hpp"

namespace cavity_eit {

namespace {

using Packed = Eigen::VectorXd;
constexpr Complex kI{0.0, 1.0};

Packed pack(const SemiclassicalState& s) {
  Packed y(11);
  y << s.alpha.real(), s.alpha.imag(), s.s12.real(), s.s12.imag(), s.s13.real(), s.s13.imag(),
      s.s23.real(), s.s23.imag(), s.s11, s.s22, s.s33;
  return y;
}

SemiclassicalState unpack(const Packed& y) {
  SemiclassicalState s;
  s.alpha = {y[0], y[1]};
  s.s12 = {y[2], y[3]};
  s.s13 = {y[4], y[5]};
  s.s23 = {y[6], y[7]};
  s.s11 = y[8];
  s.s22 = y[9];
  s.s33 = y[10];
  return s;
}

// Per-component change between two packed states; complex components count
// as one entry.
// Atomic collective variables are measured against their bound N; the field
// against its own magnitude. Per-component scaling would let coherences that
// sit near zero (the 1-2 coherence has no restoring force without ground-state
// dephasing) block convergence while every observable is settled.
double relative_change(const Packed& now, const Packed& before, double n) {
  const double field = std::max(std::hypot(now[0], now[1]), 1e-12);
  double worst = std::hypot(now[0] - before[0], now[1] - before[1]) / field;
  for (int k = 2; k < 8; k += 2) {
    worst = std::max(worst, std::hypot(now[k] - before[k], now[k + 1] - before[k + 1]) / n);
  }
  for (int k = 8; k < 11; ++k) worst = std::max(worst, std::abs(now[k] - before[k]) / n);
  return worst;
}

}  // namespace

SemiclassicalState SemiclassicalState::ground(int n_atoms) {
  SemiclassicalState s;
  s.s11 = n_atoms;
  return s;
}

void SemiclassicalParams::validate() const {
  system.validate();
  if (n_atoms < 1) throw ConfigError("n_atoms must be at least 1");
  if (!std::isfinite(delta1)) throw ConfigError("delta1 must be finite");
  if (!std::isfinite(delta2)) throw ConfigError("delta2 must be finite");
  if (!(gamma3 >= 0.0) || !std::isfinite(gamma3)) throw ConfigError("gamma3 must be non-negative");
}

SemiclassicalState semiclassical_rhs(const SemiclassicalState& s, const SemiclassicalParams& p) {
  const SystemParams& q = p.system;
  const double g = q.g;
  const double om = q.omega_c;
  const double gamma = q.gamma31 + q.gamma32;
  const Complex s21 = std::conj(s.s12);
  const Complex s31 = std::conj(s.s13);
  const Complex s32 = std::conj(s.s23);

  SemiclassicalState d;
  d.alpha = kI * ((q.delta_p + kI * (q.kappa / 2)) * s.alpha - g * s.s13 - q.epsilon);
  d.s12 = kI * (q.delta_p + p.delta2 - p.delta1 + kI * (q.gamma2 / 2)) * s.s12 -
          kI * om * s.s13 + kI * g * s.alpha * s32;
  d.s13 = kI * ((q.delta_p - p.delta1) + kI * 0.5 * (gamma + p.gamma3)) * s.s13 -
          kI * om * s.s12 + kI * g * s.alpha * (s.s33 - s.s11);
  d.s23 = kI * (-p.delta2 + kI * 0.5 * (gamma + q.gamma2 + p.gamma3)) * s.s23 -
          kI * g * s.alpha * s21 + kI * om * (s.s33 - s.s22);
  // The coupling term enters with -i g alpha^* S13, as follows from the
  // master equation; with +i the populations pick up imaginary parts.
  d.s11 = (-kI * g * std::conj(s.alpha) * s.s13 + kI * g * s.alpha * s31).real() +
          q.gamma31 * s.s33;
  d.s22 = (-kI * om * s.s23 + kI * om * s32).real() + q.gamma32 * s.s33;
  d.s33 = -d.s11 - d.s22;
  return d;
}

SemiclassicalResult semiclassical_steady(const SemiclassicalParams& params,
                                         const SemiclassicalOptions& options) {
  params.validate();
  if (!(options.tolerance > 0.0)) throw ConfigError("semiclassical tolerance must be positive");
  if (!(options.window > 0.0)) throw ConfigError("semiclassical window must be positive");

  const double n = params.n_atoms;
  OdeOptions ode;
  ode.rtol = std::min(1e-9, options.tolerance * 1e-2);
  ode.atol = ode.rtol * 1e-4;
  ode.max_step = options.window / 20;
  DormandPrince<Packed> integrator(
      [&params](double, const Packed& y, Packed& dy) {
        dy = pack(semiclassical_rhs(unpack(y), params));
      },
      ode);

  SemiclassicalResult result;
  Packed y = pack(SemiclassicalState::ground(params.n_atoms));
  double t = 0.0;
  double residual = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  while (t < options.time_budget) {
    const Packed start = y;
    double worst = 0.0;
    lo = hi = start[0] * start[0] + start[1] * start[1];
    const double end = std::min(t + options.window, options.time_budget);
    integrator.integrate(t, end, y, [&](double, const Packed& state) {
      worst = std::max(worst, relative_change(state, start, n));
      const double photons = state[0] * state[0] + state[1] * state[1];
      lo = std::min(lo, photons);
      hi = std::max(hi, photons);
      result.population_drift =
          std::max(result.population_drift, std::abs(state[8] + state[9] + state[10] - n));
      return true;
    });
    t = end;
    residual = worst;
    if (residual < options.tolerance) {
      result.state = unpack(y);
      result.time = t;
      result.window_residual = residual;
      return result;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "semiclassical integration did not converge within t=%.3g; last window residual "
                "%.3e (tolerance %.1e)",
                options.time_budget, residual, options.tolerance);
  result.state = unpack(y);
  result.time = t;
  result.window_residual = residual;
  throw SemiclassicalNotConverged(buf, result, lo, hi);
}

}  // namespace cavity_eit
