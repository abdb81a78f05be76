#pragma once

#include <algorithm>
#include <cstddef>
#include <tuple>
#include <utility>
#include <vector>

#include "odcal/core.hpp"
#include "odcal/network.hpp"

namespace odcal {

/// Sparse measured-edges x OD-pairs probability map, row-compressed with
/// ordered column indices. Rows follow network.measured_edges(), columns
/// follow od_id order.
class assignment_matrix {
 public:
  assignment_matrix() = default;

  /// Triplets (row, col, value) need not be sorted; duplicates are summed.
  /// Zero entries are kept only when keep_zeros is set (estimate patterns).
  static assignment_matrix from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<std::tuple<std::size_t, std::size_t, double>> triplets,
                                         bool keep_zeros = false) {
    std::sort(triplets.begin(), triplets.end(),
              [](const auto& a, const auto& b) {
                return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
              });
    assignment_matrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_ptr_.assign(rows + 1, 0);
    std::size_t i = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      while (i < triplets.size() && std::get<0>(triplets[i]) == r) {
        std::size_t c = std::get<1>(triplets[i]);
        double v = 0.0;
        while (i < triplets.size() && std::get<0>(triplets[i]) == r && std::get<1>(triplets[i]) == c) {
          v += std::get<2>(triplets[i]);
          ++i;
        }
        if (v != 0.0 || keep_zeros) {
          m.col_idx_.push_back(c);
          m.values_.push_back(v);
        }
      }
      m.row_ptr_[r + 1] = m.col_idx_.size();
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double at(std::size_t r, std::size_t c) const {
    auto first = col_idx_.begin() + row_ptr_[r];
    auto last = col_idx_.begin() + row_ptr_[r + 1];
    auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return 0.0;
    return values_[it - col_idx_.begin()];
  }

  /// out = A x
  void multiply(const std::vector<double>& x, std::vector<double>& out) const {
    if (x.size() != cols_) throw invalid_input_error("assignment_matrix: demand length mismatch");
    out.assign(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[col_idx_[k]];
      out[r] = s;
    }
  }

  std::vector<double> multiply(const std::vector<double>& x) const {
    std::vector<double> out;
    multiply(x, out);
    return out;
  }

  /// out = A^T v
  void multiply_transpose(const std::vector<double>& v, std::vector<double>& out) const {
    if (v.size() != rows_) throw invalid_input_error("assignment_matrix: row-vector length mismatch");
    out.assign(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out[col_idx_[k]] += values_[k] * v[r];
  }

  bool same_pattern(const assignment_matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && row_ptr_ == other.row_ptr_ &&
           col_idx_ == other.col_idx_;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// Entry (i, z) = sum of P_r over routes r of OD z whose edge sequence crosses
/// measured edge i. `probabilities` is aligned with network.routes().
inline assignment_matrix build_assignment_matrix(const network& net,
                                                 const std::vector<double>& probabilities) {
  if (probabilities.size() != net.num_routes())
    throw invalid_input_error("build_assignment_matrix: probabilities must cover every route");
  for (std::size_t z = 0; z < net.num_od_pairs(); ++z) {
    double sum = 0.0;
    for (std::size_t r : net.routes_of_od(z)) sum += probabilities[r];
    if (std::abs(sum - 1.0) > 1e-9)
      throw normalization_error("build_assignment_matrix: probabilities of od_id " +
                                std::to_string(net.od_pairs()[z].od_id) + " sum to " + std::to_string(sum));
  }
  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
  for (std::size_t r = 0; r < net.num_routes(); ++r) {
    std::size_t z = net.od_index(net.routes()[r].od_id);
    for (std::size_t row : net.measured_rows_of_route(r)) triplets.emplace_back(row, z, probabilities[r]);
  }
  return assignment_matrix::from_triplets(net.num_measured(), net.num_od_pairs(), std::move(triplets));
}

/// Fixed sparsity pattern of every route/measured-edge crossing, values zero.
/// Simulation-based estimates share this pattern so MSA averaging stays a
/// plain value combination.
inline assignment_matrix route_support_pattern(const network& net) {
  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
  for (std::size_t r = 0; r < net.num_routes(); ++r) {
    std::size_t z = net.od_index(net.routes()[r].od_id);
    for (std::size_t row : net.measured_rows_of_route(r)) triplets.emplace_back(row, z, 0.0);
  }
  return assignment_matrix::from_triplets(net.num_measured(), net.num_od_pairs(), std::move(triplets), true);
}

/// lambda = P x: expected hourly counts on the measured edges.
inline std::vector<double> predict_counts(const assignment_matrix& matrix, const od_vector& demand) {
  for (double v : demand)
    if (v < 0.0) throw invalid_input_error("predict_counts: demand must be nonnegative");
  return matrix.multiply(demand);
}

}  // namespace odcal
