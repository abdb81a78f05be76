#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace odcal {

/// Expected hourly demand per OD pair, ordered by od_id (1..|Z| maps to index 0..|Z|-1).
using od_vector = std::vector<double>;

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inconsistent or malformed caller input (dimension mismatches, missing ids, ...).
struct invalid_input_error : error {
  using error::error;
};

/// Per-OD probabilities that should sum to one do not.
struct normalization_error : invalid_input_error {
  using invalid_input_error::invalid_input_error;
};

/// A travel-time source does not cover every route of the network.
struct coverage_error : invalid_input_error {
  using invalid_input_error::invalid_input_error;
};

/// A metric is undefined for the given input (e.g. zero-mean counts).
struct metric_error : invalid_input_error {
  using invalid_input_error::invalid_input_error;
};

/// The synthetic scenario generator cannot satisfy its spec.
struct generation_error : error {
  using error::error;
};

struct io_error : error {
  using error::error;
};

/// Non-finite values encountered in a numerical routine.
struct numeric_error : error {
  using error::error;
};

/// splitmix64 step; derives independent RNG streams from (seed, stream index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(const std::vector<double>& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace odcal
