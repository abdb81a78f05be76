#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "odcal/core.hpp"
#include "odcal/network.hpp"

namespace odcal {

/// Parameters of a synthetic scenario. Node and edge counts are targets: the
/// generator lays out a grid lattice (strongly connected) and tops up with
/// random chords, so the realized counts can differ slightly.
struct scenario_spec {
  int nodes = 36;
  int edges = 120;
  int od_pairs = 20;
  int routes_per_od = 10;
  double overlap_cap = 0.70;
  std::array<double, 2> free_flow_time_range{30.0, 120.0};  // seconds
  std::array<double, 2> capacity_range{600.0, 1800.0};      // vehicles/hour
  double measured_fraction = 0.25;                          // of edges used by >= 1 route
  std::array<double, 2> demand_range{50.0, 500.0};          // vehicles/hour
};

namespace detail {

struct gen_edge {
  int from = 0, to = 0;
  double weight = 0.0;
};

using edge_path = std::vector<std::size_t>;  // indices into the gen_edge list

inline std::vector<int> path_nodes(const edge_path& p, const std::vector<gen_edge>& edges, int src) {
  std::vector<int> nodes{src};
  for (std::size_t e : p) nodes.push_back(edges[e].to);
  return nodes;
}

inline double path_cost(const edge_path& p, const std::vector<gen_edge>& edges) {
  double c = 0.0;
  for (std::size_t e : p) c += edges[e].weight;
  return c;
}

inline std::optional<edge_path> dijkstra(int n_nodes, const std::vector<std::vector<std::size_t>>& out_edges,
                                         const std::vector<gen_edge>& edges, int src, int dst,
                                         const std::vector<char>& banned_node,
                                         const std::set<std::size_t>& banned_edge) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n_nodes, inf);
  std::vector<std::size_t> parent_edge(n_nodes, SIZE_MAX);
  using item = std::pair<double, int>;
  std::priority_queue<item, std::vector<item>, std::greater<>> pq;
  dist[src] = 0.0;
  pq.emplace(0.0, src);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == dst) break;
    for (std::size_t ei : out_edges[u]) {
      if (banned_edge.count(ei)) continue;
      int v = edges[ei].to;
      if (banned_node[v]) continue;
      double nd = d + edges[ei].weight;
      if (nd < dist[v]) {
        dist[v] = nd;
        parent_edge[v] = ei;
        pq.emplace(nd, v);
      }
    }
  }
  if (dist[dst] == inf) return std::nullopt;
  edge_path path;
  for (int v = dst; v != src;) {
    std::size_t ei = parent_edge[v];
    path.push_back(ei);
    v = edges[ei].from;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

/// Yen's k-shortest loopless paths, returned in nondecreasing cost order.
inline std::vector<edge_path> yen_k_shortest(int n_nodes, const std::vector<std::vector<std::size_t>>& out_edges,
                                             const std::vector<gen_edge>& edges, int src, int dst,
                                             std::size_t k) {
  std::vector<edge_path> found;
  std::vector<char> no_ban(n_nodes, 0);
  auto first = dijkstra(n_nodes, out_edges, edges, src, dst, no_ban, {});
  if (!first) return found;
  found.push_back(*first);
  std::vector<std::pair<double, edge_path>> candidates;
  std::set<edge_path> seen{*first};
  while (found.size() < k) {
    const edge_path& prev = found.back();
    std::vector<int> nodes = path_nodes(prev, edges, src);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      int spur_node = nodes[i];
      edge_path root(prev.begin(), prev.begin() + i);
      std::set<std::size_t> banned_edge;
      for (const edge_path& p : found)
        if (p.size() > i && std::equal(root.begin(), root.end(), p.begin())) banned_edge.insert(p[i]);
      std::vector<char> banned_node(n_nodes, 0);
      for (std::size_t j = 0; j < i; ++j) banned_node[nodes[j]] = 1;
      auto spur = dijkstra(n_nodes, out_edges, edges, spur_node, dst, banned_node, banned_edge);
      if (!spur) continue;
      edge_path total = root;
      total.insert(total.end(), spur->begin(), spur->end());
      if (seen.insert(total).second) candidates.emplace_back(path_cost(total, edges), total);
    }
    if (candidates.empty()) break;
    auto best = std::min_element(candidates.begin(), candidates.end());
    found.push_back(best->second);
    candidates.erase(best);
  }
  return found;
}

inline double overlap_fraction(const edge_path& a, const edge_path& b, const std::vector<gen_edge>& edges) {
  std::set<std::size_t> in_a(a.begin(), a.end());
  double len_a = path_cost(a, edges), len_b = 0.0, shared = 0.0;
  for (std::size_t e : b) {
    len_b += edges[e].weight;
    if (in_a.count(e)) shared += edges[e].weight;
  }
  return shared / std::min(len_a, len_b);
}

}  // namespace detail

/// Deterministic function of (spec, seed). Every OD gets between 1 and
/// routes_per_od routes whose pairwise distance-based overlap is <= the cap.
inline network generate_synthetic_network(const scenario_spec& spec, std::uint64_t seed) {
  if (spec.nodes < 4) throw generation_error("scenario needs at least 4 nodes");
  if (spec.od_pairs < 1) throw generation_error("scenario needs at least 1 OD pair");
  if (spec.routes_per_od < 1) throw generation_error("routes_per_od must be >= 1");
  if (spec.overlap_cap < 0.0 || spec.overlap_cap > 1.0) throw generation_error("overlap_cap must be in [0,1]");
  if (!(spec.measured_fraction > 0.0) || spec.measured_fraction > 1.0)
    throw generation_error("measured_fraction must be in (0,1]");
  for (auto [lo, hi] : {spec.free_flow_time_range, spec.capacity_range})
    if (!(lo > 0.0) || hi < lo) throw generation_error("scenario ranges must satisfy 0 < lo <= hi");
  if (spec.demand_range[0] < 0.0 || spec.demand_range[1] < spec.demand_range[0])
    throw generation_error("demand_range must satisfy 0 <= lo <= hi");

  std::mt19937_64 rng(mix_seed(seed, 0));
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  const int rows = std::max(2, static_cast<int>(std::floor(std::sqrt(static_cast<double>(spec.nodes)))));
  const int cols = std::max(2, (spec.nodes + rows - 1) / rows);
  const int n_nodes = rows * cols;
  auto node_at = [cols](int r, int c) { return r * cols + c; };

  std::vector<detail::gen_edge> edges;
  std::set<std::pair<int, int>> arcs;
  auto add_arc = [&](int u, int v) {
    if (u == v || !arcs.emplace(u, v).second) return false;
    edges.push_back({u, v, uniform(spec.free_flow_time_range[0], spec.free_flow_time_range[1])});
    return true;
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        add_arc(node_at(r, c), node_at(r, c + 1));
        add_arc(node_at(r, c + 1), node_at(r, c));
      }
      if (r + 1 < rows) {
        add_arc(node_at(r, c), node_at(r + 1, c));
        add_arc(node_at(r + 1, c), node_at(r, c));
      }
    }
  std::uniform_int_distribution<int> node_dist(0, n_nodes - 1);
  for (int attempt = 0; static_cast<int>(edges.size()) < spec.edges && attempt < 50 * spec.edges; ++attempt)
    add_arc(node_dist(rng), node_dist(rng));

  std::vector<std::vector<std::size_t>> out_edges(n_nodes);
  for (std::size_t i = 0; i < edges.size(); ++i) out_edges[edges[i].from].push_back(i);

  // OD pairs: distinct node pairs at grid distance >= 2
  std::set<std::pair<int, int>> od_set;
  std::vector<std::pair<int, int>> od_nodes;
  for (int attempt = 0; static_cast<int>(od_nodes.size()) < spec.od_pairs; ++attempt) {
    if (attempt > 200 * spec.od_pairs)
      throw generation_error("cannot place " + std::to_string(spec.od_pairs) + " OD pairs on " +
                             std::to_string(n_nodes) + " nodes");
    int o = node_dist(rng), d = node_dist(rng);
    int manhattan = std::abs(o / cols - d / cols) + std::abs(o % cols - d % cols);
    if (manhattan < 2 || !od_set.emplace(o, d).second) continue;
    od_nodes.emplace_back(o, d);
  }

  std::vector<od_pair> od_pairs;
  std::vector<route> routes;
  int next_route_id = 1;
  for (int z = 0; z < spec.od_pairs; ++z) {
    auto [o, d] = od_nodes[z];
    od_pair od;
    od.od_id = z + 1;
    od.origin_node = o;
    od.destination_node = d;
    od.prior_demand = uniform(spec.demand_range[0], spec.demand_range[1]);
    od_pairs.push_back(od);

    std::size_t want = static_cast<std::size_t>(spec.routes_per_od);
    auto candidates = detail::yen_k_shortest(n_nodes, out_edges, edges, o, d, want * 5 + 5);
    if (candidates.empty())
      throw generation_error("no route between nodes " + std::to_string(o) + " and " + std::to_string(d));
    std::vector<detail::edge_path> accepted;
    for (const auto& cand : candidates) {
      if (accepted.size() >= want) break;
      bool ok = true;
      for (const auto& got : accepted)
        if (detail::overlap_fraction(got, cand, edges) > spec.overlap_cap) {
          ok = false;
          break;
        }
      if (ok) accepted.push_back(cand);
    }
    for (const auto& path : accepted) {
      route r;
      r.route_id = next_route_id++;
      r.od_id = od.od_id;
      for (std::size_t e : path) r.edge_sequence.push_back(static_cast<int>(e));
      r.travel_time = detail::path_cost(path, edges);
      routes.push_back(std::move(r));
    }
  }

  std::set<int> used;
  for (const auto& r : routes) used.insert(r.edge_sequence.begin(), r.edge_sequence.end());
  std::vector<int> used_edges(used.begin(), used.end());
  std::shuffle(used_edges.begin(), used_edges.end(), rng);
  std::size_t n_measured =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.measured_fraction * used_edges.size())));
  n_measured = std::min(n_measured, used_edges.size());
  std::vector<int> measured(used_edges.begin(), used_edges.begin() + n_measured);
  std::sort(measured.begin(), measured.end());
  std::set<int> measured_set(measured.begin(), measured.end());

  std::vector<edge> net_edges;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edge e;
    e.edge_id = static_cast<int>(i);
    e.free_flow_time = edges[i].weight;
    e.capacity = uniform(spec.capacity_range[0], spec.capacity_range[1]);
    e.is_measured = measured_set.count(e.edge_id) > 0;
    net_edges.push_back(e);
  }
  return network(std::move(net_edges), std::move(od_pairs), std::move(routes), std::move(measured));
}

}  // namespace odcal
