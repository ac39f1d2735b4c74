#include "cavity_eit/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <boost/math/tools/minima.hpp>

#include "cavity_eit/errors.hpp"

namespace cavity_eit {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void add_unique(std::vector<std::string>& list, const std::string& message) {
  if (std::find(list.begin(), list.end(), message) == list.end()) list.push_back(message);
}

struct Crossing {
  double location;
  double uncertainty;
  bool merged;
};

// Half-height crossing on one side of the peak. Points are (detuning, value)
// pairs ordered away from the peak, starting with the peak itself.
Crossing find_crossing(const std::vector<std::pair<double, double>>& walk, double half,
                       const TransmissionFn& refine, const FwhmOptions& options) {
  bool merged = false;
  std::size_t k = 1;
  for (; k < walk.size(); ++k) {
    if (walk[k].second < half) break;
    if (k >= 2 && walk[k].second > walk[k - 1].second) merged = true;
  }
  if (k == walk.size()) {
    throw SolverError("transmission stays above half maximum up to delta_p=" +
                      fmt(walk.back().first) + "; widen the scan window");
  }
  double a = walk[k - 1].first;
  double fa = walk[k - 1].second;
  double b = walk[k].first;
  double fb = walk[k].second;

  if (refine) {
    const double width = std::abs(b - a);
    const int pieces = std::min(options.subdivisions,
                                static_cast<int>(std::ceil(width / options.tolerance)));
    for (int m = 1; m < pieces; ++m) {
      const double x = walk[k - 1].first + (b - walk[k - 1].first) * m / pieces;
      const double fx = refine(x);
      if (fx < half) {
        b = x;
        fb = fx;
        break;
      }
      if (fx > fa && a != walk[0].first) merged = true;
      a = x;
      fa = fx;
    }
    while (std::abs(b - a) > options.tolerance) {
      const double mid = 0.5 * (a + b);
      const double fm = refine(mid);
      if (options.noise_floor > 0.0 && std::abs(fm - half) <= options.noise_floor) {
        return {mid, 0.5 * std::abs(b - a), merged};
      }
      if (fm >= half) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
        fb = fm;
      }
    }
  }
  const double location = a + (fa - half) / (fa - fb) * (b - a);
  return {location, 0.5 * std::abs(b - a), merged};
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::QuantumSteady:
      return "quantum-steady";
    case Method::Mcwf:
      return "mcwf";
    case Method::Semiclassical:
      return "semiclassical";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "quantum-steady") return Method::QuantumSteady;
  if (name == "mcwf") return Method::Mcwf;
  if (name == "semiclassical") return Method::Semiclassical;
  throw ConfigError("method: unknown value '" + name +
                    "' (expected quantum-steady, mcwf or semiclassical)");
}

int auto_fock_start(const SystemParams& params) {
  const double ratio = params.epsilon / params.kappa;
  return std::max(4, static_cast<int>(std::ceil(8.0 * ratio * ratio + 4.0)));
}

PointSolver::PointSolver(const SystemParams& params, int n_atoms, Method method,
                         SolverSettings settings)
    : params_(params),
      n_atoms_(n_atoms),
      method_(method),
      settings_(std::move(settings)),
      auto_fock_(settings_.fock_dim == 0) {
  params_.validate();
  if (n_atoms < 1) throw ConfigError("n_atoms must be at least 1");
  if (settings_.fock_dim < 0 || settings_.fock_dim == 1) {
    throw ConfigError("fock_dim must be at least 2 (or 0 for auto)");
  }
  if (method_ != Method::Semiclassical) {
    fock_dim_ = auto_fock_ ? std::max(auto_fock_start(params_), settings_.fock_min)
                           : settings_.fock_dim;
    rebuild();
  }
}

PointSolver::~PointSolver() = default;
PointSolver::PointSolver(PointSolver&&) noexcept = default;
PointSolver& PointSolver::operator=(PointSolver&&) noexcept = default;

void PointSolver::rebuild() {
  const HilbertSpace space(n_atoms_, fock_dim_, settings_.dimension_cap);
  if (method_ == Method::QuantumSteady) {
    sweeper_ = std::make_unique<SteadyStateSweeper>(space, params_, settings_.steady);
  }
}

ObservableSet PointSolver::solve(double delta_p) {
  for (;;) {
    ObservableSet obs = solve_once(delta_p);
    if (method_ == Method::Semiclassical) return obs;
    const double tail = obs.photon_distribution.back();
    if (tail < settings_.tail_tolerance) return obs;
    if (!auto_fock_) {
      throw TruncationError("P_" + std::to_string(fock_dim_ - 1) + " = " + fmt(tail) +
                            " at delta_p=" + fmt(delta_p) + " exceeds " +
                            fmt(settings_.tail_tolerance) + "; raise fock_dim");
    }
    fock_dim_ += 2;
    add_unique(warnings_, "fock_dim raised to " + std::to_string(fock_dim_) +
                              " at delta_p=" + fmt(delta_p));
    rebuild();
  }
}

ObservableSet PointSolver::solve_once(double delta_p) {
  SystemParams p = params_;
  p.delta_p = delta_p;
  last_error_ = 0.0;
  switch (method_) {
    case Method::QuantumSteady: {
      const SteadyState ss = sweeper_->solve(delta_p);
      for (const auto& w : ss.warnings) add_unique(warnings_, w + " (delta_p=" + fmt(delta_p) + ")");
      return compute_observables(ss.rho, p);
    }
    case Method::Mcwf: {
      if (settings_.mcwf.t_final < 50.0 / params_.kappa) {
        add_unique(warnings_, "mcwf t_final below 50/kappa; late-time averages may be biased");
      }
      const HilbertSpace space(n_atoms_, fock_dim_, settings_.dimension_cap);
      const auto results = run_ensemble(space, p, moment_operators(space), settings_.mcwf);
      const SteadyEstimate est = late_time_average(results, 0.2);
      last_error_ = est.standard_errors[0] / empty_cavity_resonant_photons(p);
      return observables_from_moments(est.means, space, p);
    }
    case Method::Semiclassical: {
      SemiclassicalParams sp;
      sp.system = p;
      sp.n_atoms = n_atoms_;
      sp.delta1 = settings_.delta1;
      sp.delta2 = settings_.delta2;
      sp.gamma3 = settings_.gamma3;
      return compute_observables(semiclassical_steady(sp, settings_.semiclassical).state, sp);
    }
  }
  throw ConfigError("unknown method");
}

std::vector<double> Spectrum::transmissions() const {
  std::vector<double> t(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) t[i] = points[i].transmission;
  return t;
}

std::pair<double, double> default_window(const SystemParams& params) {
  const double w = std::max(2.0 * std::hypot(params.g, params.omega_c), 2.0 * params.kappa);
  return {-w, w};
}

std::vector<double> linear_grid(double lo, double hi, int n) {
  if (n < 2) throw ConfigError("grid needs at least two points");
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = lo + (hi - lo) * i / (n - 1);
  grid.back() = hi;
  return grid;
}

Spectrum spectrum(PointSolver& solver, std::pair<double, double> window, int n_points,
                  int refine_passes) {
  if (!(window.first < window.second)) throw ConfigError("window: lower bound must be below upper");
  if (window.first > 0.0 || window.second < 0.0) throw ConfigError("window: must contain 0");
  if (n_points < 41) throw ConfigError("points: a spectrum needs at least 41 points");
  if (refine_passes < 0) throw ConfigError("refine: must be non-negative");

  struct Sample {
    ObservableSet obs;
    double error;
  };
  std::map<double, Sample> samples;
  auto evaluate = [&](double d) {
    if (samples.count(d)) return;
    ObservableSet obs = solver.solve(d);
    samples.emplace(d, Sample{std::move(obs), solver.last_transmission_error()});
  };
  for (double d : linear_grid(window.first, window.second, n_points)) evaluate(d);

  Spectrum spec;
  auto collect = [&] {
    spec.detunings.clear();
    spec.points.clear();
    spec.transmission_errors.clear();
    for (const auto& [d, s] : samples) {
      spec.detunings.push_back(d);
      spec.points.push_back(s.obs);
      spec.transmission_errors.push_back(s.error);
    }
  };
  collect();
  for (int pass = 0; pass < refine_passes; ++pass) {
    std::vector<double> inserts;
    for (std::size_t i : local_maxima(spec)) {
      inserts.push_back(0.5 * (spec.detunings[i - 1] + spec.detunings[i]));
      inserts.push_back(0.5 * (spec.detunings[i] + spec.detunings[i + 1]));
    }
    for (double d : inserts) evaluate(d);
    collect();
  }
  spec.method = solver.method();
  spec.fock_dim = solver.fock_dim();
  spec.warnings = solver.warnings();
  return spec;
}

Spectrum spectrum(const SystemParams& params, int n_atoms, std::pair<double, double> window,
                  int n_points, Method method, const SolverSettings& settings,
                  int refine_passes) {
  PointSolver solver(params, n_atoms, method, settings);
  return spectrum(solver, window, n_points, refine_passes);
}

std::vector<std::size_t> local_maxima(const Spectrum& spec) {
  std::vector<std::size_t> out;
  const auto& p = spec.points;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const double v = p[i].transmission;
    const double l = p[i - 1].transmission;
    const double r = p[i + 1].transmission;
    if (v >= l && v >= r && (v > l || v > r)) out.push_back(i);
  }
  return out;
}

FwhmResult fwhm(const Spectrum& spec, const TransmissionFn& refine, const FwhmOptions& options) {
  const std::size_t n = spec.points.size();
  if (n < 3) throw ConfigError("fwhm needs at least three spectrum points");
  if (!(options.tolerance > 0.0)) throw ConfigError("fwhm tolerance must be positive");
  const std::vector<double>& x = spec.detunings;
  const std::vector<double> v = spec.transmissions();

  FwhmResult result;
  std::size_t peak = 0;
  const std::vector<std::size_t> maxima = local_maxima(spec);
  if (!maxima.empty()) {
    peak = maxima.front();
    for (std::size_t i : maxima) {
      const double ai = std::abs(x[i]);
      const double ap = std::abs(x[peak]);
      if (ai < ap || (ai == ap && (x[i] == 0.0 || (x[peak] != 0.0 && x[i] < x[peak])))) peak = i;
    }
  } else {
    peak = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    result.central_peak = false;
    result.diagnostic = "no local maximum in the scan; measured the global maximum";
    if (peak == 0 || peak + 1 == n) {
      throw SolverError("transmission maximum lies on the scan edge at delta_p=" + fmt(x[peak]) +
                        "; widen the scan window");
    }
  }

  double peak_x = x[peak];
  double peak_v = v[peak];
  if (refine && options.refine_peak && options.noise_floor == 0.0) {
    const auto [best_x, neg_v] = boost::math::tools::brent_find_minima(
        [&](double d) { return -refine(d); }, x[peak - 1], x[peak + 1], 12);
    if (-neg_v > peak_v) {
      peak_x = best_x;
      peak_v = -neg_v;
    }
  }
  const double half = 0.5 * peak_v;

  std::vector<std::pair<double, double>> right{{peak_x, peak_v}};
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > peak_x) right.emplace_back(x[i], v[i]);
  }
  std::vector<std::pair<double, double>> left{{peak_x, peak_v}};
  for (std::size_t i = n; i-- > 0;) {
    if (x[i] < peak_x) left.emplace_back(x[i], v[i]);
  }
  const Crossing r = find_crossing(right, half, refine, options);
  const Crossing l = find_crossing(left, half, refine, options);

  result.peak_location = peak_x;
  result.peak_height = peak_v;
  result.left_cross = l.location;
  result.right_cross = r.location;
  result.fwhm = r.location - l.location;
  result.refined = static_cast<bool>(refine);
  result.merged = l.merged || r.merged;
  result.uncertainty = std::hypot(l.uncertainty, r.uncertainty);
  if (result.merged) {
    if (!result.diagnostic.empty()) result.diagnostic += "; ";
    result.diagnostic += "half-height contour encloses neighbouring maxima (merged peaks)";
  }
  return result;
}

FwhmResult measure_fwhm(PointSolver& solver, const MeasureOptions& options) {
  const auto window = options.half_width
                          ? std::make_pair(-*options.half_width, *options.half_width)
                          : default_window(solver.params());
  const Spectrum spec = spectrum(solver, window, options.n_points);
  FwhmOptions fo = options.fwhm;
  if (solver.method() == Method::Mcwf) {
    const double worst =
        *std::max_element(spec.transmission_errors.begin(), spec.transmission_errors.end());
    fo.noise_floor = std::max(fo.noise_floor, 3.0 * worst);
    fo.refine_peak = false;
  }
  return fwhm(spec, [&solver](double d) { return solver.transmission(d); }, fo);
}

SystemParams control_params(const SystemParams& base, int n_atoms, double omega_c,
                            const ControlSweepOptions& options) {
  SystemParams p = base;
  p.omega_c = omega_c;
  if (options.scale_g_with_atoms) p.g = base.g / std::sqrt(static_cast<double>(n_atoms));
  return p;
}

std::vector<ControlPoint> sweep_control(const SystemParams& base, int n_atoms,
                                        const std::vector<double>& omega_grid, Method method,
                                        const SolverSettings& settings,
                                        const ControlSweepOptions& options) {
  if (omega_grid.empty()) throw ConfigError("omega_grid must not be empty");
  std::vector<ControlPoint> out;
  for (double omega : omega_grid) {
    if (!(omega >= 0.0)) throw ConfigError("omega_grid: values must be non-negative");
    const SystemParams p = control_params(base, n_atoms, omega, options);
    PointSolver solver(p, n_atoms, method, settings);
    out.push_back({omega, p.g, measure_fwhm(solver, options.measure)});
  }
  return out;
}

MinFwhmResult min_fwhm(const SystemParams& base, int n_atoms,
                       std::pair<double, double> omega_range, Method method,
                       const SolverSettings& settings, const MinFwhmOptions& options) {
  const auto [lo, hi] = omega_range;
  if (!(lo >= 0.0 && hi > lo)) throw ConfigError("omega_range: need 0 <= lower < upper");
  if (options.coarse_points < 3) throw ConfigError("coarse_points must be at least 3");

  MinFwhmResult result;
  std::map<double, FwhmResult> cache;
  auto objective = [&](double omega) {
    auto it = cache.find(omega);
    if (it == cache.end()) {
      const SystemParams p = control_params(base, n_atoms, omega, options.control);
      PointSolver solver(p, n_atoms, method, settings);
      it = cache.emplace(omega, measure_fwhm(solver, options.control.measure)).first;
      result.evaluations.emplace_back(omega, it->second.fwhm);
      for (const auto& w : solver.warnings()) add_unique(result.warnings, w);
    }
    return it->second.fwhm;
  };

  const std::vector<double> coarse = linear_grid(lo, hi, options.coarse_points);
  std::vector<double> f;
  for (double w : coarse) f.push_back(objective(w));
  const std::size_t k = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  bool unimodal = true;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    if (i < k && f[i + 1] > f[i]) unimodal = false;
    if (i >= k && f[i + 1] < f[i]) unimodal = false;
  }

  if (unimodal) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = coarse[k == 0 ? 0 : k - 1];
    double b = coarse[std::min(k + 1, coarse.size() - 1)];
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > options.tolerance) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - kInvPhi * (b - a);
        fc = objective(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + kInvPhi * (b - a);
        fd = objective(d);
      }
    }
  } else {
    result.grid_fallback = true;
    add_unique(result.warnings, "FWHM is not unimodal over omega_c in [" + fmt(lo) + ", " +
                                    fmt(hi) + "]; used a grid scan");
    for (double w : linear_grid(lo, hi, options.fallback_points)) objective(w);
  }

  auto best = cache.begin();
  for (auto it = cache.begin(); it != cache.end(); ++it) {
    if (it->second.fwhm < best->second.fwhm) best = it;
  }
  result.omega_star = best->first;
  result.fwhm = best->second;
  return result;
}

}  // namespace cavity_eit
