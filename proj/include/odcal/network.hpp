#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "odcal/core.hpp"

namespace odcal {

struct edge {
  int edge_id = 0;
  double free_flow_time = 0.0;  // seconds
  double capacity = 0.0;        // vehicles/hour
  bool is_measured = false;
};

struct od_pair {
  int od_id = 0;  // 1-based, contiguous over the network
  int origin_node = 0;
  int destination_node = 0;
  double prior_demand = 0.0;  // vehicles/hour
};

struct route {
  int route_id = 0;
  int od_id = 0;
  std::vector<int> edge_sequence;
  double travel_time = 0.0;  // seconds, nominal (generator fills free-flow sum)
};

/// Immutable road network: edges, OD pairs, routes grouped per OD, and the
/// ordered measured-edge list that fixes the row order of count vectors.
class network {
 public:
  network() = default;

  network(std::vector<edge> edges, std::vector<od_pair> od_pairs,
          std::vector<route> routes, std::vector<int> measured_edges)
      : edges_(std::move(edges)),
        od_pairs_(std::move(od_pairs)),
        routes_(std::move(routes)),
        measured_edges_(std::move(measured_edges)) {
    build_indices();
    validate();
  }

  const std::vector<edge>& edges() const { return edges_; }
  const std::vector<od_pair>& od_pairs() const { return od_pairs_; }
  const std::vector<route>& routes() const { return routes_; }
  const std::vector<int>& measured_edges() const { return measured_edges_; }

  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_od_pairs() const { return od_pairs_.size(); }
  std::size_t num_routes() const { return routes_.size(); }
  std::size_t num_measured() const { return measured_edges_.size(); }

  std::size_t edge_index(int edge_id) const { return lookup(edge_index_, edge_id, "edge_id"); }
  std::size_t od_index(int od_id) const { return lookup(od_index_, od_id, "od_id"); }
  std::size_t route_index(int route_id) const { return lookup(route_index_, route_id, "route_id"); }

  /// Row of a measured edge in count vectors, or -1 when not measured.
  int measured_row(int edge_id) const {
    auto it = measured_row_.find(edge_id);
    return it == measured_row_.end() ? -1 : static_cast<int>(it->second);
  }

  /// Route indices of one OD (by OD position, not od_id).
  const std::vector<std::size_t>& routes_of_od(std::size_t od_pos) const {
    return routes_by_od_[od_pos];
  }

  /// Measured rows crossed by one route (by route position).
  const std::vector<std::size_t>& measured_rows_of_route(std::size_t route_pos) const {
    return route_measured_rows_[route_pos];
  }

  double route_free_flow_time(std::size_t route_pos) const {
    double t = 0.0;
    for (int eid : routes_[route_pos].edge_sequence) t += edges_[edge_index(eid)].free_flow_time;
    return t;
  }

  od_vector prior_demands() const {
    od_vector x(od_pairs_.size());
    for (std::size_t z = 0; z < od_pairs_.size(); ++z) x[z] = od_pairs_[z].prior_demand;
    return x;
  }

 private:
  static std::size_t lookup(const std::map<int, std::size_t>& m, int id, const char* what) {
    auto it = m.find(id);
    if (it == m.end()) throw invalid_input_error(std::string("unknown ") + what + " " + std::to_string(id));
    return it->second;
  }

  void build_indices() {
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      if (!edge_index_.emplace(edges_[i].edge_id, i).second)
        throw invalid_input_error("duplicate edge_id " + std::to_string(edges_[i].edge_id));
    }
    for (std::size_t i = 0; i < od_pairs_.size(); ++i) {
      if (!od_index_.emplace(od_pairs_[i].od_id, i).second)
        throw invalid_input_error("duplicate od_id " + std::to_string(od_pairs_[i].od_id));
    }
    for (std::size_t i = 0; i < routes_.size(); ++i) {
      if (!route_index_.emplace(routes_[i].route_id, i).second)
        throw invalid_input_error("duplicate route_id " + std::to_string(routes_[i].route_id));
    }
    for (std::size_t r = 0; r < measured_edges_.size(); ++r)
      measured_row_.emplace(measured_edges_[r], r);

    routes_by_od_.assign(od_pairs_.size(), {});
    route_measured_rows_.assign(routes_.size(), {});
    for (std::size_t i = 0; i < routes_.size(); ++i) {
      routes_by_od_[od_index(routes_[i].od_id)].push_back(i);
      for (int eid : routes_[i].edge_sequence) {
        int row = measured_row(eid);
        if (row >= 0) route_measured_rows_[i].push_back(static_cast<std::size_t>(row));
      }
    }
  }

  void validate() const {
    for (const auto& e : edges_) {
      if (!(e.free_flow_time > 0.0))
        throw invalid_input_error("edge " + std::to_string(e.edge_id) + ": free_flow_time must be > 0");
      if (!(e.capacity > 0.0))
        throw invalid_input_error("edge " + std::to_string(e.edge_id) + ": capacity must be > 0");
    }
    // od_id values must form the contiguous set 1..|Z|
    for (std::size_t z = 0; z < od_pairs_.size(); ++z) {
      if (od_index_.find(static_cast<int>(z) + 1) == od_index_.end())
        throw invalid_input_error("od_id values must be contiguous 1..|Z|; missing " + std::to_string(z + 1));
      if (od_pairs_[z].prior_demand < 0.0)
        throw invalid_input_error("od_pair " + std::to_string(od_pairs_[z].od_id) + ": prior_demand must be >= 0");
    }
    for (const auto& r : routes_) {
      if (r.edge_sequence.empty())
        throw invalid_input_error("route " + std::to_string(r.route_id) + ": empty edge_sequence");
      if (!(r.travel_time > 0.0))
        throw invalid_input_error("route " + std::to_string(r.route_id) + ": travel_time must be > 0");
      if (od_index_.find(r.od_id) == od_index_.end())
        throw invalid_input_error("route " + std::to_string(r.route_id) + ": unknown od_id " + std::to_string(r.od_id));
      std::set<int> seen;
      for (int eid : r.edge_sequence) {
        if (edge_index_.find(eid) == edge_index_.end())
          throw invalid_input_error("route " + std::to_string(r.route_id) + ": unknown edge_id " + std::to_string(eid));
        if (!seen.insert(eid).second)
          throw invalid_input_error("route " + std::to_string(r.route_id) + ": edge " + std::to_string(eid) + " repeated");
      }
    }
    std::set<int> measured_seen;
    for (int eid : measured_edges_) {
      auto it = edge_index_.find(eid);
      if (it == edge_index_.end())
        throw invalid_input_error("measured edge " + std::to_string(eid) + " not in network");
      if (!edges_[it->second].is_measured)
        throw invalid_input_error("measured edge " + std::to_string(eid) + " lacks is_measured flag");
      if (!measured_seen.insert(eid).second)
        throw invalid_input_error("measured edge " + std::to_string(eid) + " listed twice");
    }
    for (std::size_t z = 0; z < od_pairs_.size(); ++z) {
      if (routes_by_od_[z].empty())
        throw invalid_input_error("od_pair " + std::to_string(od_pairs_[z].od_id) + " has no route");
    }
  }

  std::vector<edge> edges_;
  std::vector<od_pair> od_pairs_;
  std::vector<route> routes_;
  std::vector<int> measured_edges_;

  std::map<int, std::size_t> edge_index_, od_index_, route_index_, measured_row_;
  std::vector<std::vector<std::size_t>> routes_by_od_;
  std::vector<std::vector<std::size_t>> route_measured_rows_;
};

/// Distance-based overlap of two routes: free-flow length of the shared edges
/// divided by the shorter route's free-flow length. Symmetric, in [0, 1].
inline double route_overlap(const route& a, const route& b, const network& net) {
  double len_a = 0.0, len_b = 0.0, shared = 0.0;
  std::set<int> edges_a(a.edge_sequence.begin(), a.edge_sequence.end());
  for (int eid : a.edge_sequence) len_a += net.edges()[net.edge_index(eid)].free_flow_time;
  for (int eid : b.edge_sequence) {
    double t = net.edges()[net.edge_index(eid)].free_flow_time;
    len_b += t;
    if (edges_a.count(eid)) shared += t;
  }
  return shared / std::min(len_a, len_b);
}

}  // namespace odcal
