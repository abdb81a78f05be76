#pragma once

#include <cmath>
#include <vector>

#include "odcal/core.hpp"
#include "odcal/network.hpp"

namespace odcal {

/// nRMSE in percent: 100 * sqrt(mean squared count error) / mean field count.
inline double nrmse(const std::vector<double>& field_counts, const std::vector<double>& simulated_counts) {
  if (field_counts.empty() || field_counts.size() != simulated_counts.size())
    throw invalid_input_error("nrmse: count vectors must be non-empty and of equal length");
  double mean_y = 0.0, mse = 0.0;
  for (std::size_t i = 0; i < field_counts.size(); ++i) {
    mean_y += field_counts[i];
    double d = field_counts[i] - simulated_counts[i];
    mse += d * d;
  }
  mean_y /= static_cast<double>(field_counts.size());
  mse /= static_cast<double>(field_counts.size());
  if (!(mean_y > 0.0)) throw metric_error("nrmse: mean field count must be > 0");
  return 100.0 * std::sqrt(mse) / mean_y;
}

/// Fit of one demand vector to the field data: per-edge (field, simulated)
/// count pairs plus summary numbers.
struct fit_report {
  std::vector<int> edge_ids;  // measured edges, row order
  std::vector<double> field_counts;
  std::vector<double> simulated_counts;
  double nrmse_percent = 0.0;
  double demand_rmse_to_prior = 0.0;
};

inline fit_report make_fit_report(const network& net, const std::vector<double>& field_counts,
                                  const std::vector<double>& simulated_counts, const od_vector& demand,
                                  const od_vector& prior) {
  if (field_counts.size() != net.num_measured() || simulated_counts.size() != net.num_measured())
    throw invalid_input_error("make_fit_report: count vectors must have length |I|");
  if (demand.size() != prior.size()) throw invalid_input_error("make_fit_report: demand/prior length mismatch");
  fit_report report;
  report.edge_ids = net.measured_edges();
  report.field_counts = field_counts;
  report.simulated_counts = simulated_counts;
  report.nrmse_percent = nrmse(field_counts, simulated_counts);
  double s = 0.0;
  for (std::size_t z = 0; z < demand.size(); ++z) {
    double d = demand[z] - prior[z];
    s += d * d;
  }
  report.demand_rmse_to_prior = demand.empty() ? 0.0 : std::sqrt(s / static_cast<double>(demand.size()));
  return report;
}

}  // namespace odcal
