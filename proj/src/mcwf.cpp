#include "cavity_eit/mcwf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include "cavity_eit/errors.hpp"

namespace cavity_eit {

namespace {

double expectation_value(const SparseMatrix& op, const Vector& psi) {
  return psi.dot(op * psi).real() / psi.squaredNorm();
}

void validate_observables(const HilbertSpace& space, const std::vector<Operator>& observables) {
  for (std::size_t k = 0; k < observables.size(); ++k) {
    const Operator& o = observables[k];
    if (!(o.space() == space)) {
      throw ConfigError("observable " + std::to_string(k) + " acts on a different space");
    }
    if ((o - o.adjoint()).matrix().nonZeros() != 0) {
      throw ConfigError("observable " + std::to_string(k) + " is not Hermitian");
    }
  }
}

}  // namespace

TrajectoryResult run_trajectory(const HilbertSpace& space, const SystemParams& params,
                                const std::vector<Operator>& observables, std::uint64_t seed,
                                double t_final, double dt_max, const Vector& psi0,
                                const TrajectoryOptions& options) {
  params.validate();
  if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
  if (!(dt_max > 0.0)) throw ConfigError("dt_max must be positive");
  validate_observables(space, observables);

  const std::vector<JumpOperator> jumps = jump_operators(space, params);
  SparseMatrix drift = Complex(0.0, -1.0) * hamiltonian(space, params).matrix();
  for (const auto& jump : jumps) {
    const SparseMatrix& c = jump.op.matrix();
    drift -= 0.5 * jump.rate * SparseMatrix(c.adjoint() * c);
  }

  Vector psi;
  if (psi0.size() == 0) {
    psi = Vector::Zero(space.dim());
    psi[0] = 1.0;
  } else {
    if (psi0.size() != space.dim()) throw ConfigError("initial state has the wrong dimension");
    psi = psi0 / psi0.norm();
  }

  OdeOptions ode_options;
  ode_options.rtol = options.rtol;
  ode_options.atol = options.atol;
  ode_options.max_step = dt_max;
  ode_options.initial_step = dt_max / 4;
  DormandPrince<Vector> ode(
      [&drift](double, const Vector& y, Vector& dy) { dy.noalias() = drift * y; }, ode_options);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double threshold = uniform(rng);

  TrajectoryResult result;
  result.seed = seed;
  const long n_steps = std::max(1L, static_cast<long>(std::ceil(t_final / dt_max - 1e-9)));
  result.time_grid.reserve(n_steps + 1);
  result.records.reserve(n_steps + 1);
  auto record = [&](double t) {
    std::vector<double> row(observables.size());
    for (std::size_t k = 0; k < observables.size(); ++k) {
      row[k] = expectation_value(observables[k].matrix(), psi);
    }
    result.time_grid.push_back(t);
    result.records.push_back(std::move(row));
  };
  record(0.0);

  const double locate = dt_max * options.jump_time_fraction;
  std::vector<double> weights(jumps.size());
  double t = 0.0;
  for (long step = 1; step <= n_steps; ++step) {
    const double target = std::min(static_cast<double>(step) * dt_max, t_final);
    while (t < target) {
      double t_prev = t;
      Vector prev = psi;
      t = ode.integrate(t, target, psi, [&](double tt, const Vector& y) {
        if (y.squaredNorm() < threshold) return false;
        t_prev = tt;
        prev = y;
        return true;
      });
      if (psi.squaredNorm() >= threshold) break;

      // The norm crossed the threshold inside (t_prev, t]: bisect.
      double lo = t_prev;
      double hi = t;
      Vector at_hi = psi;
      Vector trial;
      while (hi - lo > locate) {
        const double mid = 0.5 * (lo + hi);
        trial = prev;
        ode.integrate(lo, mid, trial);
        if (trial.squaredNorm() < threshold) {
          hi = mid;
          at_hi = trial;
        } else {
          lo = mid;
          prev = trial;
        }
      }

      double total = 0.0;
      for (int attempt = 0;; ++attempt) {
        total = 0.0;
        for (std::size_t c = 0; c < jumps.size(); ++c) {
          weights[c] = jumps[c].rate * (jumps[c].op.matrix() * at_hi).squaredNorm();
          total += weights[c];
        }
        if (total > 0.0 && std::isfinite(total)) break;
        if (attempt >= options.max_underflow_retries || hi - lo <= 0.0) {
          throw SolverError("trajectory seed " + std::to_string(seed) +
                            ": no jump channel available at t=" + std::to_string(hi) +
                            " (norm underflow)");
        }
        hi = 0.5 * (lo + hi);
        at_hi = prev;
        ode.integrate(lo, hi, at_hi);
      }

      const double pick = uniform(rng) * total;
      std::size_t channel = 0;
      double cumulative = weights[0];
      while (cumulative < pick && channel + 1 < jumps.size()) cumulative += weights[++channel];
      psi = jumps[channel].op.matrix() * at_hi;
      psi /= psi.norm();
      t = hi;
      result.jump_log.emplace_back(t, static_cast<int>(channel));
      threshold = uniform(rng);
    }
    t = target;
    record(target);
  }
  return result;
}

EnsembleAverage ensemble_average(const std::vector<TrajectoryResult>& results) {
  if (results.empty()) throw ConfigError("ensemble_average needs at least one trajectory");
  const auto& grid = results.front().time_grid;
  const std::size_t n_obs = results.front().records.empty() ? 0 : results.front().records[0].size();
  for (const auto& r : results) {
    if (r.time_grid != grid) throw ConfigError("trajectories do not share a time grid");
    for (const auto& row : r.records) {
      if (row.size() != n_obs) throw ConfigError("trajectories do not share an observable set");
    }
  }
  const double n = static_cast<double>(results.size());
  EnsembleAverage out;
  out.time_grid = grid;
  out.trajectories = results.size();
  out.means.assign(grid.size(), std::vector<double>(n_obs, 0.0));
  out.standard_errors.assign(grid.size(), std::vector<double>(n_obs, 0.0));
  for (std::size_t t = 0; t < grid.size(); ++t) {
    for (std::size_t k = 0; k < n_obs; ++k) {
      double sum = 0.0;
      for (const auto& r : results) sum += r.records[t][k];
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& r : results) ss += (r.records[t][k] - mean) * (r.records[t][k] - mean);
      out.means[t][k] = mean;
      out.standard_errors[t][k] = results.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    }
  }
  return out;
}

SteadyEstimate late_time_average(const std::vector<TrajectoryResult>& results, double fraction) {
  if (results.empty()) throw ConfigError("late_time_average needs at least one trajectory");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
  const auto& grid = results.front().time_grid;
  const double t_start = grid.back() - fraction * (grid.back() - grid.front());
  const std::size_t first = static_cast<std::size_t>(
      std::lower_bound(grid.begin(), grid.end(), t_start - 1e-12) - grid.begin());

  std::vector<TrajectoryResult> averaged(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (r.time_grid != grid) throw ConfigError("trajectories do not share a time grid");
    std::vector<double> avg(r.records.front().size(), 0.0);
    for (std::size_t t = first; t < grid.size(); ++t) {
      for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += r.records[t][k];
    }
    for (double& v : avg) v /= static_cast<double>(grid.size() - first);
    averaged[i].time_grid = {0.0};
    averaged[i].records = {std::move(avg)};
  }
  const EnsembleAverage e = ensemble_average(averaged);
  return {e.means[0], e.standard_errors[0]};
}

std::vector<TrajectoryResult> run_ensemble(const HilbertSpace& space,
                                           const SystemParams& params,
                                           const std::vector<Operator>& observables,
                                           const EnsembleOptions& options,
                                           const Vector& psi0) {
  if (options.trajectories < 1) throw ConfigError("trajectories must be at least 1");
  std::vector<TrajectoryResult> results(options.trajectories);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < options.trajectories; i = next++) {
      try {
        results[i] = run_trajectory(space, params, observables,
                                    options.base_seed + static_cast<std::uint64_t>(i),
                                    options.t_final, options.dt_max, psi0, options.trajectory);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.trajectories;
      }
    }
  };
  const int threads = std::clamp(options.threads, 1, options.trajectories);
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace cavity_eit
