#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "odcal/assignment.hpp"
#include "odcal/core.hpp"
#include "odcal/metamodel.hpp"
#include "odcal/metrics.hpp"
#include "odcal/network.hpp"
#include "odcal/route_choice.hpp"
#include "odcal/simulator.hpp"

namespace odcal {

/// Spall-style gain schedule constants, in veh/hr demand units.
struct spsa_config {
  double alpha = 0.602;
  double gamma = 0.101;
  double c = 1.9;
  double a = 0.16;
  double A = 0.02;
};

struct lam_config {
  double learning_rate = 0.001;
  int inner_gd_steps = 5000;
  double tolerance = 1e-6;
  /// The default 1/t MSA weighting replaces the average outright at t = 1,
  /// dropping the initial estimate; this switches to 1/(t+1), which keeps it.
  bool msa_include_initial = false;
};

struct metamodel_loop_config {
  double ridge = 1e-3;
  double solver_tolerance = 1e-6;
  int solver_max_iterations = 10000;
};

struct calibrator_config {
  int max_iterations = 15;
  double delta = 1.0;
  bounds_box bounds;  // empty: defaults to bounds_box::around_prior(prior)
  std::uint64_t seed = 0;
  spsa_config spsa;
  lam_config lam;
  metamodel_loop_config metamodel;
};

struct calibration_record {
  int iteration = 0;
  od_vector iterate;
  double objective = 0.0;
  double nrmse = 0.0;
  double wall_time_seconds = 0.0;
  int sim_calls = 0;
};

struct calibration_history {
  std::string method;
  std::vector<calibration_record> records;
  od_vector best_point;
  double best_objective = std::numeric_limits<double>::infinity();
  int best_iteration = -1;
  bool aborted = false;
  std::string abort_reason;

  int total_sim_calls() const { return records.empty() ? 0 : records.back().sim_calls; }
};

/// Calibration objective at one point: mean squared count mismatch plus the
/// prior regularizer, with the expected counts replaced by the replication
/// average of one simulation.
inline double objective_estimate(const od_vector& x, const simulation_result& sim,
                                 const std::vector<double>& field_counts, const od_vector& prior,
                                 double delta) {
  if (sim.measured_counts.size() != field_counts.size())
    throw invalid_input_error("objective_estimate: count length mismatch");
  if (x.size() != prior.size()) throw invalid_input_error("objective_estimate: demand length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < field_counts.size(); ++i) {
    double d = field_counts[i] - sim.measured_counts[i];
    s += d * d;
  }
  double value = s / static_cast<double>(field_counts.size());
  for (std::size_t z = 0; z < x.size(); ++z) {
    double d = x[z] - prior[z];
    value += delta / static_cast<double>(x.size()) * d * d;
  }
  return value;
}

template <class F>
concept simulation_oracle = requires(F f, const od_vector& x, std::uint64_t call) {
  { f(x, call) } -> std::convertible_to<simulation_result>;
};

/// Default oracle: one simulate() per call with a call-derived seed, so whole
/// calibration runs are reproducible from one config seed. The network must
/// outlive the returned callable.
inline auto make_simulation_oracle(const network& net, const sim_config& base, const choice_params& choice) {
  return [&net, base, choice](const od_vector& x, std::uint64_t call) {
    sim_config cfg = base;
    cfg.seed = mix_seed(base.seed, call);
    return simulate(net, x, cfg, choice);
  };
}

inline double spsa_perturbation_gain(const spsa_config& s, int k) {
  return s.c / std::pow(static_cast<double>(k) + 1.0, s.gamma);
}

inline double spsa_step_gain(const spsa_config& s, int k) {
  return s.a / std::pow(s.A + static_cast<double>(k) + 1.0, s.alpha);
}

/// One MSA step: A <- (1 - w) A + w Ahat with w = 1/t as printed, or
/// w = 1/(t+1) when include_initial keeps the first estimate's weight.
inline void msa_update(assignment_matrix& average, const assignment_matrix& estimate, int t,
                       bool include_initial = false) {
  if (t < 1) throw invalid_input_error("msa_update: t must be >= 1");
  if (!average.same_pattern(estimate)) throw invalid_input_error("msa_update: sparsity patterns differ");
  const double w = include_initial ? 1.0 / (t + 1.0) : 1.0 / t;
  auto& out = average.values();
  const auto& in = estimate.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * out[i] + w * in[i];
}

namespace detail {

struct run_state {
  calibration_history history;
  const std::vector<double>* field_counts = nullptr;
  const od_vector* prior = nullptr;
  double delta = 0.0;
  int calls = 0;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void consider_best(const od_vector& point, double objective, int iteration) {
    if (objective < history.best_objective) {
      history.best_objective = objective;
      history.best_point = point;
      history.best_iteration = iteration;
    }
  }

  void record(int iteration, const od_vector& iterate, double objective, double nrmse_pct) {
    calibration_record rec;
    rec.iteration = iteration;
    rec.iterate = iterate;
    rec.objective = objective;
    rec.nrmse = nrmse_pct;
    rec.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    rec.sim_calls = calls;
    history.records.push_back(std::move(rec));
  }
};

inline bounds_box resolve_bounds(const calibrator_config& config, const od_vector& prior) {
  bounds_box bounds = config.bounds.lower.empty() ? bounds_box::around_prior(prior) : config.bounds;
  bounds.validate(prior.size());
  return bounds;
}

inline void check_common(const network& net, const std::vector<double>& field_counts,
                         const od_vector& prior, const calibrator_config& config) {
  if (field_counts.size() != net.num_measured())
    throw invalid_input_error("calibrate: field counts length != |I|");
  if (prior.size() != net.num_od_pairs()) throw invalid_input_error("calibrate: prior length != |Z|");
  if (config.max_iterations < 1) throw invalid_input_error("calibrate: max_iterations must be >= 1");
  if (config.delta < 0.0) throw invalid_input_error("calibrate: delta must be >= 0");
}

}  // namespace detail

/// Proposed method: fit the metamodel to all simulation observations, solve
/// the bound-constrained quadratic, simulate the solution, repeat. The
/// assignment matrix comes once from the exogenous travel times and is never
/// re-estimated from simulation. Budget: max_iterations + 1 simulation calls.
template <simulation_oracle Oracle>
calibration_history run_linear_metamodel(const network& net, const std::vector<double>& field_counts,
                                         const od_vector& prior, const calibrator_config& config,
                                         const travel_time_provider& times, const choice_params& choice,
                                         Oracle&& oracle) {
  detail::check_common(net, field_counts, prior, config);
  auto table = get_travel_times(times, net);
  auto probs = route_probabilities_for(net, table, choice);

  metamodel_problem problem;
  problem.assignment = build_assignment_matrix(net, probs.value);
  problem.field_counts = field_counts;
  problem.prior = prior;
  problem.delta = config.delta;
  problem.bounds = detail::resolve_bounds(config, prior);
  problem.beta = metamodel_beta::identity(prior.size());
  problem.validate();

  detail::run_state state;
  state.history.method = "linear-metamodel";

  std::vector<observation> observations;
  od_vector x0 = problem.bounds.clamp(prior);
  simulation_result sim = oracle(x0, static_cast<std::uint64_t>(state.calls));
  ++state.calls;
  double f0 = objective_estimate(x0, sim, field_counts, prior, config.delta);
  observations.push_back({x0, f0});
  state.consider_best(x0, f0, 0);
  state.record(0, x0, f0, nrmse(field_counts, sim.measured_counts));

  for (int k = 1; k <= config.max_iterations; ++k) {
    try {
      problem.beta = k == 1 ? metamodel_beta::identity(prior.size())
                            : fit_beta(observations, state.history.best_point, problem, config.metamodel.ridge);
      auto solved = solve_metamodel(problem, state.history.best_point, config.metamodel.solver_tolerance,
                                    config.metamodel.solver_max_iterations);
      od_vector candidate = std::move(solved.x);
      simulation_result rk = oracle(candidate, static_cast<std::uint64_t>(state.calls));
      ++state.calls;
      double fk = objective_estimate(candidate, rk, field_counts, prior, config.delta);
      observations.push_back({candidate, fk});
      state.consider_best(candidate, fk, k);
      state.record(k, candidate, fk, nrmse(field_counts, rk.measured_counts));
    } catch (const numeric_error& e) {
      state.history.aborted = true;
      state.history.abort_reason = e.what();
      break;
    }
  }
  return state.history;
}

/// SPSA benchmark: two projected perturbation evaluations per iteration, the
/// usual simultaneous-perturbation gradient estimate, projected update.
/// Budget: 1 + 2 * max_iterations simulation calls. Each record carries the
/// updated iterate with the better perturbation evaluation's objective.
template <simulation_oracle Oracle>
calibration_history run_spsa(const network& net, const std::vector<double>& field_counts,
                             const od_vector& prior, const calibrator_config& config, Oracle&& oracle) {
  detail::check_common(net, field_counts, prior, config);
  const spsa_config& gains = config.spsa;
  if (!(gains.alpha > 0.0) || !(gains.gamma > 0.0) || !(gains.c > 0.0) || !(gains.a > 0.0) || !(gains.A > 0.0))
    throw invalid_input_error("run_spsa: gains must be positive");
  bounds_box bounds = detail::resolve_bounds(config, prior);

  detail::run_state state;
  state.history.method = "spsa";
  std::mt19937_64 rng(mix_seed(config.seed, 0x5b5a));

  od_vector x = bounds.clamp(prior);
  simulation_result sim = oracle(x, static_cast<std::uint64_t>(state.calls));
  ++state.calls;
  double f0 = objective_estimate(x, sim, field_counts, prior, config.delta);
  state.consider_best(x, f0, 0);
  state.record(0, x, f0, nrmse(field_counts, sim.measured_counts));

  const std::size_t n = prior.size();
  std::uniform_int_distribution<int> coin(0, 1);
  for (int k = 0; k < config.max_iterations; ++k) {
    const double ck = spsa_perturbation_gain(gains, k);
    const double ak = spsa_step_gain(gains, k);
    std::vector<double> delta_dir(n);
    for (std::size_t z = 0; z < n; ++z) delta_dir[z] = coin(rng) == 0 ? -1.0 : 1.0;

    od_vector x_plus(n), x_minus(n);
    for (std::size_t z = 0; z < n; ++z) {
      x_plus[z] = x[z] + ck * delta_dir[z];
      x_minus[z] = x[z] - ck * delta_dir[z];
    }
    x_plus = bounds.clamp(x_plus);
    x_minus = bounds.clamp(x_minus);

    simulation_result rp = oracle(x_plus, static_cast<std::uint64_t>(state.calls));
    ++state.calls;
    double fp = objective_estimate(x_plus, rp, field_counts, prior, config.delta);
    state.consider_best(x_plus, fp, k + 1);
    simulation_result rm = oracle(x_minus, static_cast<std::uint64_t>(state.calls));
    ++state.calls;
    double fm = objective_estimate(x_minus, rm, field_counts, prior, config.delta);
    state.consider_best(x_minus, fm, k + 1);

    for (std::size_t z = 0; z < n; ++z) {
      double g = (fp - fm) / (2.0 * ck * delta_dir[z]);
      x[z] -= ak * g;
    }
    x = bounds.clamp(x);
    const bool plus_better = fp <= fm;
    state.record(k + 1, x, plus_better ? fp : fm,
                 nrmse(field_counts, plus_better ? rp.measured_counts : rm.measured_counts));
  }
  return state.history;
}

namespace detail {

/// Fixed-rate projected gradient descent on the LAM quadratic.
inline od_vector lam_solve(const assignment_matrix& matrix, const std::vector<double>& field_counts,
                           const od_vector& prior, double delta, const bounds_box& bounds,
                           const lam_config& lam, const od_vector& start) {
  if (!(lam.learning_rate > 0.0) || lam.inner_gd_steps < 1)
    throw invalid_input_error("lam_solve: learning_rate must be > 0 and inner_gd_steps >= 1");
  const double n_i = static_cast<double>(field_counts.size());
  const double n_z = static_cast<double>(prior.size());
  od_vector x = bounds.clamp(start);
  std::vector<double> residual, grad;
  for (int step = 0; step < lam.inner_gd_steps; ++step) {
    matrix.multiply(x, residual);
    double f = 0.0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
      residual[i] -= field_counts[i];
      f += residual[i] * residual[i];
    }
    f /= n_i;
    matrix.multiply_transpose(residual, grad);
    for (std::size_t z = 0; z < x.size(); ++z) {
      double d = x[z] - prior[z];
      grad[z] = 2.0 / n_i * grad[z] + 2.0 * delta / n_z * d;
      f += delta / n_z * d * d;
    }
    if (!std::isfinite(f) || !all_finite(grad)) throw numeric_error("lam_solve: non-finite iterate");
    if (norm2(projected_gradient(x, grad, bounds)) <= lam.tolerance * (1.0 + std::abs(f))) break;
    for (std::size_t z = 0; z < x.size(); ++z) {
      x[z] = std::min(std::max(x[z] - lam.learning_rate * grad[z], bounds.lower[z]), bounds.upper[z]);
    }
  }
  return x;
}

}  // namespace detail

/// Linear assignment method benchmark: the assignment matrix is estimated
/// from each simulation run and smoothed by the method of successive
/// averages; the quadratic demand fit is solved by fixed-rate gradient
/// descent. Budget: max_iterations + 1 simulation calls.
template <simulation_oracle Oracle>
calibration_history run_lam(const network& net, const std::vector<double>& field_counts,
                            const od_vector& prior, const calibrator_config& config, Oracle&& oracle) {
  detail::check_common(net, field_counts, prior, config);
  bounds_box bounds = detail::resolve_bounds(config, prior);

  detail::run_state state;
  state.history.method = "lam";

  od_vector x0 = bounds.clamp(prior);
  simulation_result sim = oracle(x0, static_cast<std::uint64_t>(state.calls));
  ++state.calls;
  double f0 = objective_estimate(x0, sim, field_counts, prior, config.delta);
  state.consider_best(x0, f0, 0);
  state.record(0, x0, f0, nrmse(field_counts, sim.measured_counts));

  assignment_matrix average = estimate_assignment(sim, net).matrix;  // A^1 = Ahat^1
  for (int t = 1; t <= config.max_iterations; ++t) {
    od_vector candidate = detail::lam_solve(average, field_counts, prior, config.delta, bounds,
                                            config.lam, state.history.best_point);
    simulation_result rt = oracle(candidate, static_cast<std::uint64_t>(state.calls));
    ++state.calls;
    double ft = objective_estimate(candidate, rt, field_counts, prior, config.delta);
    state.consider_best(candidate, ft, t);
    state.record(t, candidate, ft, nrmse(field_counts, rt.measured_counts));
    msa_update(average, estimate_assignment(rt, net).matrix, t, config.lam.msa_include_initial);
  }
  return state.history;
}

}  // namespace odcal
