#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "odcal/calibrators.hpp"
#include "odcal/core.hpp"
#include "odcal/network.hpp"
#include "odcal/simulator.hpp"

namespace odcal {

namespace detail {

inline std::string fmt10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  return in;
}

/// Strict two-column numeric CSV: checks the header, returns (id, value) rows.
inline std::vector<std::pair<int, double>> read_id_value_csv(const std::string& path,
                                                             const std::string& expected_header) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw io_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header)
    throw io_error(path + ": expected header '" + expected_header + "', got '" + line + "'");
  std::vector<std::pair<int, double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id_str, value_str, extra;
    if (!std::getline(ss, id_str, ',') || !std::getline(ss, value_str, ',') || std::getline(ss, extra, ','))
      throw io_error(path + ":" + std::to_string(line_no) + ": expected two columns");
    try {
      std::size_t used = 0;
      int id = std::stoi(id_str, &used);
      if (used != id_str.size()) throw std::invalid_argument(id_str);
      double value = std::stod(value_str, &used);
      if (used != value_str.size()) throw std::invalid_argument(value_str);
      rows.emplace_back(id, value);
    } catch (const std::exception&) {
      throw io_error(path + ":" + std::to_string(line_no) + ": unparsable row '" + line + "'");
    }
  }
  return rows;
}

}  // namespace detail

inline nlohmann::ordered_json network_to_json(const network& net) {
  nlohmann::ordered_json j;
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : net.edges())
    j["edges"].push_back({{"edge_id", e.edge_id},
                          {"free_flow_time", e.free_flow_time},
                          {"capacity", e.capacity},
                          {"is_measured", e.is_measured}});
  j["od_pairs"] = nlohmann::ordered_json::array();
  for (const auto& od : net.od_pairs())
    j["od_pairs"].push_back({{"od_id", od.od_id},
                             {"origin_node", od.origin_node},
                             {"destination_node", od.destination_node},
                             {"prior_demand", od.prior_demand}});
  j["routes"] = nlohmann::ordered_json::array();
  for (const auto& r : net.routes())
    j["routes"].push_back({{"route_id", r.route_id},
                           {"od_id", r.od_id},
                           {"edge_sequence", r.edge_sequence},
                           {"travel_time", r.travel_time}});
  j["measured_edges"] = net.measured_edges();
  return j;
}

inline network network_from_json(const nlohmann::json& j) {
  try {
    std::vector<edge> edges;
    for (const auto& je : j.at("edges"))
      edges.push_back({je.at("edge_id").get<int>(), je.at("free_flow_time").get<double>(),
                       je.at("capacity").get<double>(), je.at("is_measured").get<bool>()});
    std::vector<od_pair> od_pairs;
    for (const auto& jo : j.at("od_pairs"))
      od_pairs.push_back({jo.at("od_id").get<int>(), jo.at("origin_node").get<int>(),
                          jo.at("destination_node").get<int>(), jo.at("prior_demand").get<double>()});
    std::vector<route> routes;
    for (const auto& jr : j.at("routes"))
      routes.push_back({jr.at("route_id").get<int>(), jr.at("od_id").get<int>(),
                        jr.at("edge_sequence").get<std::vector<int>>(), jr.at("travel_time").get<double>()});
    return network(std::move(edges), std::move(od_pairs), std::move(routes),
                   j.at("measured_edges").get<std::vector<int>>());
  } catch (const nlohmann::json::exception& e) {
    throw io_error(std::string("malformed network document: ") + e.what());
  }
}

inline void save_network(const network& net, const std::string& path) {
  detail::open_out(path) << network_to_json(net).dump(2) << "\n";
}

inline network load_network(const std::string& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path + ": " + e.what());
  }
  return network_from_json(j);
}

/// OD CSV `od_id,demand`, ordered by od_id.
inline void write_od_csv(const network& net, const od_vector& demand, const std::string& path) {
  if (demand.size() != net.num_od_pairs()) throw invalid_input_error("write_od_csv: demand length != |Z|");
  auto out = detail::open_out(path);
  out << "od_id,demand\n";
  for (std::size_t z = 0; z < demand.size(); ++z)
    out << net.od_pairs()[z].od_id << "," << detail::fmt10(demand[z]) << "\n";
}

inline od_vector read_od_csv(const network& net, const std::string& path) {
  auto rows = detail::read_id_value_csv(path, "od_id,demand");
  std::map<int, double> by_id(rows.begin(), rows.end());
  if (by_id.size() != rows.size()) throw io_error(path + ": duplicate od_id");
  od_vector demand(net.num_od_pairs());
  for (std::size_t z = 0; z < net.num_od_pairs(); ++z) {
    auto it = by_id.find(net.od_pairs()[z].od_id);
    if (it == by_id.end())
      throw io_error(path + ": missing od_id " + std::to_string(net.od_pairs()[z].od_id));
    demand[z] = it->second;
  }
  if (by_id.size() != net.num_od_pairs()) throw io_error(path + ": extra od rows");
  return demand;
}

/// Counts CSV `edge_id,count`, ordered like network.measured_edges().
inline void write_counts_csv(const network& net, const std::vector<double>& counts, const std::string& path) {
  if (counts.size() != net.num_measured()) throw invalid_input_error("write_counts_csv: counts length != |I|");
  auto out = detail::open_out(path);
  out << "edge_id,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i)
    out << net.measured_edges()[i] << "," << detail::fmt10(counts[i]) << "\n";
}

inline std::vector<double> read_counts_csv(const network& net, const std::string& path) {
  auto rows = detail::read_id_value_csv(path, "edge_id,count");
  std::map<int, double> by_id(rows.begin(), rows.end());
  if (by_id.size() != rows.size()) throw io_error(path + ": duplicate edge_id");
  std::vector<double> counts(net.num_measured());
  for (std::size_t i = 0; i < net.num_measured(); ++i) {
    auto it = by_id.find(net.measured_edges()[i]);
    if (it == by_id.end())
      throw io_error(path + ": missing count for measured edge " + std::to_string(net.measured_edges()[i]));
    counts[i] = it->second;
  }
  if (by_id.size() != net.num_measured()) throw io_error(path + ": extra count rows");
  return counts;
}

/// Travel-time CSV `route_id,travel_time_seconds` (the file-provider format).
inline void write_travel_times_csv(const network& net, const std::vector<double>& seconds,
                                   const std::string& path) {
  if (seconds.size() != net.num_routes())
    throw invalid_input_error("write_travel_times_csv: length != route count");
  auto out = detail::open_out(path);
  out << "route_id,travel_time_seconds\n";
  for (std::size_t r = 0; r < seconds.size(); ++r)
    out << net.routes()[r].route_id << "," << detail::fmt10(seconds[r]) << "\n";
}

/// History CSV `iteration,sim_calls,objective,nrmse,is_best`; is_best marks
/// the record whose evaluation produced the best objective.
inline void write_history_csv(const calibration_history& history, const std::string& path) {
  auto out = detail::open_out(path);
  out << "iteration,sim_calls,objective,nrmse,is_best\n";
  for (const auto& rec : history.records)
    out << rec.iteration << "," << rec.sim_calls << "," << detail::fmt10(rec.objective) << ","
        << detail::fmt10(rec.nrmse) << "," << (rec.iteration == history.best_iteration ? 1 : 0) << "\n";
}

inline void write_best_od_csv(const calibration_history& history, const network& net,
                              const std::string& path) {
  write_od_csv(net, history.best_point, path);
}

/// Per-replication count dump `edge_id,replication,count`.
inline void write_replication_counts_csv(const simulation_result& result, const network& net,
                                         const std::string& path) {
  auto out = detail::open_out(path);
  out << "edge_id,replication,count\n";
  for (std::size_t i = 0; i < net.num_measured(); ++i)
    for (std::size_t rep = 0; rep < result.replications.size(); ++rep)
      out << net.measured_edges()[i] << "," << rep << ","
          << detail::fmt10(result.replications[rep].measured_counts[i]) << "\n";
}

}  // namespace odcal
