#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "odcal/core.hpp"
#include "odcal/network.hpp"

namespace odcal {

/// Multinomial-logit travel-time sensitivity, in 1/seconds. Negative values
/// make faster routes more likely (the default convention).
struct choice_params {
  double theta = -0.1 / 60.0;

  static choice_params per_minute(double theta_per_minute) {
    return choice_params{theta_per_minute / 60.0};
  }
};

enum class time_source { free_flow, file, simulator };

/// Travel time per route, aligned with network.routes().
struct travel_time_table {
  std::vector<double> seconds;
  time_source source = time_source::free_flow;
};

/// Choice probability per route, aligned with network.routes(). Probabilities
/// of the routes sharing one OD sum to one.
struct route_probabilities {
  std::vector<double> value;

  double of(const network& net, int route_id) const { return value[net.route_index(route_id)]; }
};

/// P_r = exp(theta t_r) / sum over the OD's routes of exp(theta t_j), computed
/// with per-OD max subtraction so large |theta t| cannot overflow.
inline route_probabilities route_probabilities_for(const network& net, const travel_time_table& times,
                                                   const choice_params& params) {
  if (times.seconds.size() != net.num_routes())
    throw invalid_input_error("route_probabilities: travel times must cover every route");
  route_probabilities probs;
  probs.value.assign(net.num_routes(), 0.0);
  for (std::size_t z = 0; z < net.num_od_pairs(); ++z) {
    const auto& members = net.routes_of_od(z);
    double max_u = -std::numeric_limits<double>::infinity();
    for (std::size_t r : members) max_u = std::max(max_u, params.theta * times.seconds[r]);
    if (!std::isfinite(max_u)) throw numeric_error("route_probabilities: non-finite utility");
    double denom = 0.0;
    for (std::size_t r : members) {
      double e = std::exp(params.theta * times.seconds[r] - max_u);
      if (!std::isfinite(e)) throw numeric_error("route_probabilities: non-finite exponent");
      probs.value[r] = e;
      denom += e;
    }
    for (std::size_t r : members) probs.value[r] /= denom;
  }
  return probs;
}

namespace detail {

struct free_flow_provider {};
struct file_provider {
  std::string path;
};
struct simulator_provider {
  std::vector<double> converged_seconds;  // aligned with network.routes()
};

}  // namespace detail

/// Exogenous travel-time source: a sealed set of providers (free-flow sums,
/// a CSV file, or a simulator snapshot). Never performs network calls.
class travel_time_provider {
 public:
  static travel_time_provider free_flow() { return travel_time_provider(detail::free_flow_provider{}); }

  /// Two-column CSV `route_id,travel_time_seconds`, header row required.
  static travel_time_provider from_file(std::string path) {
    return travel_time_provider(detail::file_provider{std::move(path)});
  }

  static travel_time_provider from_simulation(std::vector<double> converged_route_times) {
    return travel_time_provider(detail::simulator_provider{std::move(converged_route_times)});
  }

  travel_time_table get(const network& net) const {
    travel_time_table table;
    if (std::holds_alternative<detail::free_flow_provider>(impl_)) {
      table.source = time_source::free_flow;
      table.seconds.resize(net.num_routes());
      for (std::size_t r = 0; r < net.num_routes(); ++r) table.seconds[r] = net.route_free_flow_time(r);
    } else if (const auto* fp = std::get_if<detail::file_provider>(&impl_)) {
      table.source = time_source::file;
      table.seconds = read_time_file(fp->path, net);
    } else {
      const auto& sp = std::get<detail::simulator_provider>(impl_);
      if (sp.converged_seconds.size() != net.num_routes())
        throw invalid_input_error("travel_time_provider: simulator snapshot length mismatch");
      table.source = time_source::simulator;
      table.seconds = sp.converged_seconds;
    }
    for (double t : table.seconds)
      if (!(t > 0.0)) throw invalid_input_error("travel_time_provider: travel times must be > 0");
    return table;
  }

 private:
  using impl_type = std::variant<detail::free_flow_provider, detail::file_provider, detail::simulator_provider>;
  explicit travel_time_provider(impl_type impl) : impl_(std::move(impl)) {}

  static std::vector<double> read_time_file(const std::string& path, const network& net) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open travel-time file " + path);
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty travel-time file " + path);
    std::map<int, double> by_id;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string id_str, t_str;
      if (!std::getline(ss, id_str, ',') || !std::getline(ss, t_str))
        throw io_error(path + ":" + std::to_string(line_no) + ": expected route_id,travel_time_seconds");
      try {
        std::size_t used = 0;
        int id = std::stoi(id_str, &used);
        if (used != id_str.size()) throw std::invalid_argument(id_str);
        double t = std::stod(t_str, &used);
        if (used != t_str.size()) throw std::invalid_argument(t_str);
        by_id[id] = t;
      } catch (const std::exception&) {
        throw io_error(path + ":" + std::to_string(line_no) + ": unparsable row '" + line + "'");
      }
    }
    std::vector<double> seconds(net.num_routes());
    std::string missing;
    for (std::size_t r = 0; r < net.num_routes(); ++r) {
      auto it = by_id.find(net.routes()[r].route_id);
      if (it == by_id.end()) {
        if (!missing.empty()) missing += ", ";
        missing += std::to_string(net.routes()[r].route_id);
      } else {
        seconds[r] = it->second;
      }
    }
    if (!missing.empty())
      throw coverage_error("travel-time file " + path + " misses routes: " + missing);
    return seconds;
  }

  impl_type impl_;
};

inline travel_time_table get_travel_times(const travel_time_provider& provider, const network& net) {
  return provider.get(net);
}

}  // namespace odcal
