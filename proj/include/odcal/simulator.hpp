#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "odcal/assignment.hpp"
#include "odcal/core.hpp"
#include "odcal/network.hpp"
#include "odcal/route_choice.hpp"

namespace odcal {

struct sim_config {
  int inner_fixed_point_iters = 5;
  double vdf_alpha = 0.15;
  double vdf_beta = 4.0;
  int replications = 1;
  std::uint64_t seed = 0;
};

struct replication_result {
  std::vector<double> measured_counts;  // integer-valued, length |I|
  std::vector<double> route_flows;      // integer-valued, per route
  std::vector<double> od_trips;         // Poisson draws, per OD
};

struct simulation_result {
  std::vector<double> measured_counts;        // replication mean, length |I|
  std::vector<double> route_flows;            // replication mean, per route
  std::vector<double> od_trips;               // replication mean, per OD
  std::vector<double> converged_route_times;  // seconds, per route
  std::vector<double> converged_route_probs;  // logit at converged times, per route
  od_vector demand_used;
  std::vector<replication_result> replications;
};

/// Stochastic mesoscopic loading of one demand vector.
///
/// Route times start at free flow, then a fixed-point loop alternates logit
/// probabilities, expected edge volumes and BPR-style edge times. Demand is
/// then sampled per OD from Poisson(x_z), assigned to routes multinomially at
/// the converged probabilities, and traversals of the measured edges counted.
/// Deterministic for fixed (inputs, seed); replications use derived seeds and
/// are merged in replication order.
inline simulation_result simulate(const network& net, const od_vector& demand, const sim_config& config,
                                  const choice_params& params) {
  const std::size_t n_routes = net.num_routes();
  const std::size_t n_ods = net.num_od_pairs();
  const std::size_t n_edges = net.num_edges();
  if (demand.size() != n_ods) throw invalid_input_error("simulate: demand length != |Z|");
  for (double x : demand)
    if (!(x >= 0.0)) throw invalid_input_error("simulate: demand must be >= 0");
  if (config.inner_fixed_point_iters < 1 || config.replications < 1)
    throw invalid_input_error("simulate: iteration and replication counts must be >= 1");
  if (config.vdf_alpha < 0.0 || config.vdf_beta < 0.0)
    throw invalid_input_error("simulate: VDF parameters must be >= 0");

  std::vector<double> route_times(n_routes);
  for (std::size_t r = 0; r < n_routes; ++r) route_times[r] = net.route_free_flow_time(r);

  std::vector<double> edge_times(n_edges), volumes(n_edges);
  for (int it = 0; it < config.inner_fixed_point_iters; ++it) {
    auto probs = route_probabilities_for(net, travel_time_table{route_times, time_source::simulator}, params);
    volumes.assign(n_edges, 0.0);
    for (std::size_t r = 0; r < n_routes; ++r) {
      double w = probs.value[r] * demand[net.od_index(net.routes()[r].od_id)];
      for (int eid : net.routes()[r].edge_sequence) volumes[net.edge_index(eid)] += w;
    }
    for (std::size_t e = 0; e < n_edges; ++e) {
      const auto& ed = net.edges()[e];
      edge_times[e] =
          ed.free_flow_time * (1.0 + config.vdf_alpha * std::pow(volumes[e] / ed.capacity, config.vdf_beta));
    }
    for (std::size_t r = 0; r < n_routes; ++r) {
      double t = 0.0;
      for (int eid : net.routes()[r].edge_sequence) t += edge_times[net.edge_index(eid)];
      route_times[r] = t;
    }
  }
  auto converged =
      route_probabilities_for(net, travel_time_table{route_times, time_source::simulator}, params);

  simulation_result result;
  result.converged_route_times = route_times;
  result.converged_route_probs = converged.value;
  result.demand_used = demand;
  result.measured_counts.assign(net.num_measured(), 0.0);
  result.route_flows.assign(n_routes, 0.0);
  result.od_trips.assign(n_ods, 0.0);

  for (int rep = 0; rep < config.replications; ++rep) {
    std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(rep)));
    replication_result rr;
    rr.measured_counts.assign(net.num_measured(), 0.0);
    rr.route_flows.assign(n_routes, 0.0);
    rr.od_trips.assign(n_ods, 0.0);
    for (std::size_t z = 0; z < n_ods; ++z) {
      long long trips = 0;
      if (demand[z] > 0.0) trips = std::poisson_distribution<long long>(demand[z])(rng);
      rr.od_trips[z] = static_cast<double>(trips);
      const auto& members = net.routes_of_od(z);
      if (members.size() == 1) {
        rr.route_flows[members[0]] += static_cast<double>(trips);
      } else if (trips > 0) {
        std::vector<double> weights(members.size());
        for (std::size_t j = 0; j < members.size(); ++j) weights[j] = converged.value[members[j]];
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        for (long long t = 0; t < trips; ++t) rr.route_flows[members[pick(rng)]] += 1.0;
      }
    }
    for (std::size_t r = 0; r < n_routes; ++r) {
      if (rr.route_flows[r] == 0.0) continue;
      for (std::size_t row : net.measured_rows_of_route(r)) rr.measured_counts[row] += rr.route_flows[r];
    }
    for (std::size_t i = 0; i < rr.measured_counts.size(); ++i) result.measured_counts[i] += rr.measured_counts[i];
    for (std::size_t r = 0; r < n_routes; ++r) result.route_flows[r] += rr.route_flows[r];
    for (std::size_t z = 0; z < n_ods; ++z) result.od_trips[z] += rr.od_trips[z];
    result.replications.push_back(std::move(rr));
  }
  const double inv_r = 1.0 / config.replications;
  for (double& v : result.measured_counts) v *= inv_r;
  for (double& v : result.route_flows) v *= inv_r;
  for (double& v : result.od_trips) v *= inv_r;
  return result;
}

struct assignment_estimate {
  assignment_matrix matrix;
};

/// Simulation-based assignment estimate: entry (i, z) is the share of OD z's
/// sampled trips that crossed measured edge i. ODs whose sampled trip count is
/// zero fall back to the analytic logit column at the converged times.
inline assignment_estimate estimate_assignment(const simulation_result& result, const network& net) {
  if (result.route_flows.size() != net.num_routes() || result.od_trips.size() != net.num_od_pairs() ||
      result.measured_counts.size() != net.num_measured() ||
      result.converged_route_probs.size() != net.num_routes())
    throw invalid_input_error("estimate_assignment: result does not match network shape");
  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
  for (std::size_t r = 0; r < net.num_routes(); ++r) {
    std::size_t z = net.od_index(net.routes()[r].od_id);
    double share = result.od_trips[z] > 0.0 ? result.route_flows[r] / result.od_trips[z]
                                            : result.converged_route_probs[r];
    for (std::size_t row : net.measured_rows_of_route(r)) triplets.emplace_back(row, z, share);
  }
  return assignment_estimate{assignment_matrix::from_triplets(net.num_measured(), net.num_od_pairs(),
                                                              std::move(triplets), true)};
}

}  // namespace odcal
