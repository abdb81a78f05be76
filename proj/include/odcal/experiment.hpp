#pragma once

#include <array>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "odcal/calibrators.hpp"
#include "odcal/core.hpp"
#include "odcal/io.hpp"
#include "odcal/metrics.hpp"
#include "odcal/report.hpp"
#include "odcal/synthetic.hpp"

namespace odcal {

namespace detail {

inline nlohmann::json parse_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path + ": " + e.what());
  }
}

inline std::array<double, 2> range_from(const nlohmann::json& j, const char* key,
                                        std::array<double, 2> fallback) {
  if (!j.contains(key)) return fallback;
  auto arr = j.at(key);
  if (!arr.is_array() || arr.size() != 2) throw invalid_input_error(std::string(key) + " must be [lo, hi]");
  return {arr[0].get<double>(), arr[1].get<double>()};
}

inline choice_params choice_from_json(const nlohmann::json& j) {
  choice_params params;
  if (j.contains("theta_per_second") && j.contains("theta_per_minute"))
    throw invalid_input_error("choice: give theta_per_second or theta_per_minute, not both");
  if (j.contains("theta_per_second"))
    params.theta = j.at("theta_per_second").get<double>();
  else if (j.contains("theta_per_minute"))
    params.theta = j.at("theta_per_minute").get<double>() / 60.0;
  return params;
}

inline sim_config sim_from_json(const nlohmann::json& j) {
  sim_config cfg;
  cfg.inner_fixed_point_iters = j.value("inner_fixed_point_iters", cfg.inner_fixed_point_iters);
  cfg.vdf_alpha = j.value("vdf_alpha", cfg.vdf_alpha);
  cfg.vdf_beta = j.value("vdf_beta", cfg.vdf_beta);
  cfg.replications = j.value("replications", cfg.replications);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

inline calibrator_config calibrator_from_json(const nlohmann::json& j) {
  calibrator_config cfg;
  cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
  cfg.delta = j.value("delta", cfg.delta);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    if (b.at("lower").is_array()) {
      cfg.bounds.lower = b.at("lower").get<std::vector<double>>();
      cfg.bounds.upper = b.at("upper").get<std::vector<double>>();
    } else {
      // scalar bounds are expanded to the OD dimension when the run starts
      cfg.bounds.lower = {b.at("lower").get<double>()};
      cfg.bounds.upper = {b.at("upper").get<double>()};
    }
  }
  if (j.contains("spsa")) {
    const auto& s = j.at("spsa");
    cfg.spsa.alpha = s.value("alpha", cfg.spsa.alpha);
    cfg.spsa.gamma = s.value("gamma", cfg.spsa.gamma);
    cfg.spsa.c = s.value("c", cfg.spsa.c);
    cfg.spsa.a = s.value("a", cfg.spsa.a);
    cfg.spsa.A = s.value("A", cfg.spsa.A);
  }
  if (j.contains("lam")) {
    const auto& l = j.at("lam");
    cfg.lam.learning_rate = l.value("learning_rate", cfg.lam.learning_rate);
    cfg.lam.inner_gd_steps = l.value("inner_gd_steps", cfg.lam.inner_gd_steps);
    cfg.lam.tolerance = l.value("tolerance", cfg.lam.tolerance);
    cfg.lam.msa_include_initial = l.value("msa_include_initial", cfg.lam.msa_include_initial);
  }
  if (j.contains("metamodel")) {
    const auto& m = j.at("metamodel");
    cfg.metamodel.ridge = m.value("ridge", cfg.metamodel.ridge);
    cfg.metamodel.solver_tolerance = m.value("solver_tolerance", cfg.metamodel.solver_tolerance);
    cfg.metamodel.solver_max_iterations = m.value("solver_max_iterations", cfg.metamodel.solver_max_iterations);
  }
  return cfg;
}

inline std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute()) return path.string();
  return (base / path).lexically_normal().string();
}

inline void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw invalid_input_error("referenced file does not exist: " + path);
}

inline std::string method_file_tag(std::string method) {
  for (char& c : method)
    if (c == '-') c = '_';
  return method;
}

}  // namespace detail

inline scenario_spec scenario_from_json(const nlohmann::json& j) {
  scenario_spec spec;
  spec.nodes = j.value("nodes", spec.nodes);
  spec.edges = j.value("edges", spec.edges);
  spec.od_pairs = j.value("od_pairs", spec.od_pairs);
  spec.routes_per_od = j.value("routes_per_od", spec.routes_per_od);
  spec.overlap_cap = j.value("overlap_cap", spec.overlap_cap);
  spec.free_flow_time_range = detail::range_from(j, "free_flow_time_range", spec.free_flow_time_range);
  spec.capacity_range = detail::range_from(j, "capacity_range", spec.capacity_range);
  spec.measured_fraction = j.value("measured_fraction", spec.measured_fraction);
  spec.demand_range = detail::range_from(j, "demand_range", spec.demand_range);
  return spec;
}

/// Synthetic ground-truth block: build the counts from a true OD file and
/// derive the prior by a seeded multiplicative perturbation of the truth.
struct synthetic_truth_spec {
  std::string true_od_path;
  std::array<double, 2> prior_noise_range{0.5, 1.5};
  int count_replications = 10;
};

struct experiment_config {
  std::string network_path;
  std::optional<std::string> counts_path;
  std::optional<synthetic_truth_spec> truth;
  std::string method = "all";
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  std::optional<std::string> travel_time_file;  // default provider: free flow
  calibrator_config calibrator;
  sim_config simulation;
  choice_params choice;
};

inline experiment_config load_experiment_config(const std::string& path) {
  auto j = detail::parse_json_file(path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  experiment_config cfg;
  try {
    cfg.network_path = detail::resolve_path(base, j.at("network").get<std::string>());
    if (j.contains("counts")) cfg.counts_path = detail::resolve_path(base, j.at("counts").get<std::string>());
    if (j.contains("synthetic_truth")) {
      const auto& t = j.at("synthetic_truth");
      synthetic_truth_spec truth;
      truth.true_od_path = detail::resolve_path(base, t.at("true_od").get<std::string>());
      truth.prior_noise_range = detail::range_from(t, "prior_noise_range", truth.prior_noise_range);
      truth.count_replications = t.value("count_replications", truth.count_replications);
      cfg.truth = truth;
    }
    cfg.method = j.value("method", cfg.method);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("travel_times")) {
      const auto& tt = j.at("travel_times");
      if (tt.is_string()) {
        if (tt.get<std::string>() != "free_flow")
          throw invalid_input_error("travel_times must be \"free_flow\" or {\"file\": path}");
      } else {
        cfg.travel_time_file = detail::resolve_path(base, tt.at("file").get<std::string>());
      }
    }
    if (j.contains("calibrator")) cfg.calibrator = detail::calibrator_from_json(j.at("calibrator"));
    if (j.contains("simulation")) cfg.simulation = detail::sim_from_json(j.at("simulation"));
    if (j.contains("choice")) cfg.choice = detail::choice_from_json(j.at("choice"));
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path + ": " + e.what());
  }
  if (cfg.counts_path.has_value() == cfg.truth.has_value())
    throw invalid_input_error(path + ": exactly one of \"counts\" and \"synthetic_truth\" is required");
  detail::require_file(cfg.network_path);
  if (cfg.counts_path) detail::require_file(*cfg.counts_path);
  if (cfg.truth) detail::require_file(cfg.truth->true_od_path);
  if (cfg.travel_time_file) detail::require_file(*cfg.travel_time_file);
  return cfg;
}

struct generate_options {
  std::string spec_path;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

struct calibrate_options {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> replications;
};

struct evaluate_options {
  std::string network_path;
  std::string od_path;
  std::string counts_path;
  int replications = 1;
  int inner_fixed_point_iters = 5;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  double theta_per_minute = -0.1;
  std::optional<std::string> replication_dump_path;
};

namespace detail {

template <class Fn>
int run_command(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const numeric_error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

inline od_vector perturbed_prior(const od_vector& truth, std::array<double, 2> noise_range,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(noise_range[0], noise_range[1]);
  od_vector prior(truth.size());
  for (std::size_t z = 0; z < truth.size(); ++z) prior[z] = truth[z] * noise(rng);
  return prior;
}

inline network with_prior(const network& net, const od_vector& prior) {
  std::vector<od_pair> od_pairs = net.od_pairs();
  for (std::size_t z = 0; z < od_pairs.size(); ++z) od_pairs[z].prior_demand = prior[z];
  return network(net.edges(), std::move(od_pairs), net.routes(), net.measured_edges());
}

}  // namespace detail

/// Generate a synthetic scenario: network.json (prior demands), true_od.csv
/// (ground truth) and counts.csv (replication-averaged simulated counts at
/// the truth).
inline int cmd_generate(const generate_options& options, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  return detail::run_command(err, [&] {
    auto j = detail::parse_json_file(options.spec_path);
    scenario_spec spec = scenario_from_json(j);
    sim_config sim = j.contains("simulation") ? detail::sim_from_json(j.at("simulation")) : sim_config{};
    choice_params choice =
        j.contains("choice") ? detail::choice_from_json(j.at("choice")) : choice_params{};
    const auto noise_range = detail::range_from(j, "prior_noise_range", {0.5, 1.5});
    const int count_replications = j.value("count_replications", 10);
    if (count_replications < 1) throw invalid_input_error("count_replications must be >= 1");

    network truth_net = generate_synthetic_network(spec, options.seed);
    od_vector truth = truth_net.prior_demands();
    sim.replications = count_replications;
    sim.seed = mix_seed(options.seed, 1001);
    std::vector<double> counts = simulate(truth_net, truth, sim, choice).measured_counts;
    od_vector prior = detail::perturbed_prior(truth, noise_range, mix_seed(options.seed, 1002));
    network out_net = detail::with_prior(truth_net, prior);

    std::filesystem::create_directories(options.out_dir);
    const std::filesystem::path dir(options.out_dir);
    save_network(out_net, (dir / "network.json").string());
    write_od_csv(out_net, truth, (dir / "true_od.csv").string());
    write_counts_csv(out_net, counts, (dir / "counts.csv").string());

    out << "od_pairs=" << out_net.num_od_pairs() << ", edges=" << out_net.num_edges()
        << ", routes=" << out_net.num_routes() << ", measured_edges=" << out_net.num_measured() << "\n";
    return 0;
  });
}

/// Run the selected calibration method(s) and write every report artifact.
inline int cmd_calibrate(const calibrate_options& options, std::ostream& out = std::cout,
                         std::ostream& err = std::cerr) {
  return detail::run_command(err, [&] {
    experiment_config cfg = load_experiment_config(options.config_path);
    if (options.method) cfg.method = *options.method;
    if (options.iterations) cfg.calibrator.max_iterations = *options.iterations;
    if (options.seed) cfg.seed = *options.seed;
    if (options.out_dir) cfg.output_dir = *options.out_dir;
    if (options.replications) cfg.simulation.replications = *options.replications;

    std::vector<std::string> methods;
    if (cfg.method == "all")
      methods = {"linear-metamodel", "spsa", "lam"};
    else if (cfg.method == "linear-metamodel" || cfg.method == "spsa" || cfg.method == "lam")
      methods = {cfg.method};
    else
      throw invalid_input_error("unknown method '" + cfg.method + "'");

    network net = load_network(cfg.network_path);
    od_vector prior;
    std::vector<double> field_counts;
    if (cfg.counts_path) {
      field_counts = read_counts_csv(net, *cfg.counts_path);
      prior = net.prior_demands();
    } else {
      od_vector truth = read_od_csv(net, cfg.truth->true_od_path);
      sim_config sim = cfg.simulation;
      sim.replications = cfg.truth->count_replications;
      sim.seed = mix_seed(cfg.seed, 1001);
      field_counts = simulate(net, truth, sim, cfg.choice).measured_counts;
      prior = detail::perturbed_prior(truth, cfg.truth->prior_noise_range, mix_seed(cfg.seed, 1002));
    }

    calibrator_config calib = cfg.calibrator;
    calib.seed = cfg.seed;
    if (calib.bounds.lower.size() == 1 && net.num_od_pairs() != 1) {
      calib.bounds = bounds_box::uniform(net.num_od_pairs(), calib.bounds.lower[0], calib.bounds.upper[0]);
    }
    sim_config sim = cfg.simulation;
    sim.seed = cfg.seed;
    travel_time_provider provider = cfg.travel_time_file
                                        ? travel_time_provider::from_file(*cfg.travel_time_file)
                                        : travel_time_provider::free_flow();

    std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path dir(cfg.output_dir);

    std::vector<calibration_history> histories;
    bool any_aborted = false;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      auto oracle = make_simulation_oracle(net, sim, cfg.choice);
      calibration_history history;
      if (methods[m] == "linear-metamodel")
        history = run_linear_metamodel(net, field_counts, prior, calib, provider, cfg.choice, oracle);
      else if (methods[m] == "spsa")
        history = run_spsa(net, field_counts, prior, calib, oracle);
      else
        history = run_lam(net, field_counts, prior, calib, oracle);
      any_aborted = any_aborted || history.aborted;

      const std::string tag = detail::method_file_tag(methods[m]);
      write_history_csv(history, (dir / ("history_" + tag + ".csv")).string());
      if (!history.best_point.empty()) {
        write_best_od_csv(history, net, (dir / ("best_od_" + tag + ".csv")).string());
        sim_config eval_sim = cfg.simulation;
        eval_sim.seed = mix_seed(cfg.seed, 2001 + m);
        auto eval = simulate(net, history.best_point, eval_sim, cfg.choice);
        auto report = make_fit_report(net, field_counts, eval.measured_counts, history.best_point, prior);
        export_scatter(report, (dir / ("scatter_" + tag + ".csv")).string(),
                       (dir / ("scatter_" + tag + ".svg")).string());
      }
      if (!history.records.empty()) {
        double best_nrmse = history.records.front().nrmse;
        for (const auto& rec : history.records)
          if (rec.iteration == history.best_iteration) best_nrmse = rec.nrmse;
        out << "method=" << methods[m] << " initial_nrmse=" << detail::fmt6(history.records.front().nrmse)
            << "% best_nrmse=" << detail::fmt6(best_nrmse)
            << "% best_objective=" << detail::fmt6(history.best_objective)
            << " sim_calls=" << history.total_sim_calls() << (history.aborted ? " (aborted)" : "") << "\n";
      }
      histories.push_back(std::move(history));
    }
    export_convergence(histories, (dir / "convergence.csv").string(), (dir / "convergence.svg").string());
    return any_aborted ? 3 : 0;
  });
}

/// Simulate a given OD vector against a counts file and report the fit.
inline int cmd_evaluate(const evaluate_options& options, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  return detail::run_command(err, [&] {
    network net = load_network(options.network_path);
    od_vector demand = read_od_csv(net, options.od_path);
    std::vector<double> field_counts = read_counts_csv(net, options.counts_path);
    sim_config sim;
    sim.replications = options.replications;
    sim.inner_fixed_point_iters = options.inner_fixed_point_iters;
    sim.seed = options.seed;
    auto result = simulate(net, demand, sim, choice_params::per_minute(options.theta_per_minute));
    auto report = make_fit_report(net, field_counts, result.measured_counts, demand, net.prior_demands());

    std::filesystem::create_directories(options.out_dir);
    const std::filesystem::path dir(options.out_dir);
    export_scatter(report, (dir / "scatter.csv").string(), (dir / "scatter.svg").string());
    if (options.replication_dump_path)
      write_replication_counts_csv(result, net, *options.replication_dump_path);
    out << "nrmse=" << detail::fmt6(report.nrmse_percent)
        << "% demand_rmse_to_prior=" << detail::fmt6(report.demand_rmse_to_prior) << "\n";
    return 0;
  });
}

}  // namespace odcal
