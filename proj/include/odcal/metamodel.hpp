#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "odcal/assignment.hpp"
#include "odcal/core.hpp"

namespace odcal {

/// Per-OD box constraints defining the feasible region.
struct bounds_box {
  std::vector<double> lower, upper;

  static bounds_box uniform(std::size_t n, double lo, double hi) {
    return bounds_box{std::vector<double>(n, lo), std::vector<double>(n, hi)};
  }

  /// Default region: [0, 3 * max prior demand] per coordinate.
  static bounds_box around_prior(const od_vector& prior) {
    double hi = 0.0;
    for (double v : prior) hi = std::max(hi, v);
    hi = std::max(3.0 * hi, 1.0);
    return uniform(prior.size(), 0.0, hi);
  }

  void validate(std::size_t n) const {
    if (lower.size() != n || upper.size() != n)
      throw invalid_input_error("bounds_box: size mismatch");
    for (std::size_t i = 0; i < n; ++i)
      if (!(0.0 <= lower[i]) || !(lower[i] <= upper[i]))
        throw invalid_input_error("bounds_box: needs 0 <= lower <= upper");
  }

  od_vector clamp(const od_vector& x) const {
    od_vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::min(std::max(x[i], lower[i]), upper[i]);
    return out;
  }

  bool contains(const od_vector& x, double tol = 0.0) const {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
    return true;
  }
};

/// Metamodel coefficients: scale multiplies the physical term, intercept and
/// the |Z| linear coefficients form the general-purpose correction.
struct metamodel_beta {
  double scale = 1.0;
  double intercept = 0.0;
  std::vector<double> linear;

  static metamodel_beta identity(std::size_t n_ods) {
    return metamodel_beta{1.0, 0.0, std::vector<double>(n_ods, 0.0)};
  }

  std::size_t size() const { return linear.size() + 2; }
};

/// One simulated point: where it was evaluated and the objective estimate.
struct observation {
  od_vector point;
  double objective_estimate = 0.0;
};

struct metamodel_problem {
  assignment_matrix assignment;      // measured-edge x OD probability map
  std::vector<double> field_counts;  // y, length |I|
  od_vector prior;                   // regularization anchor, length |Z|
  double delta = 1.0;
  bounds_box bounds;
  metamodel_beta beta;

  void validate() const {
    if (assignment.rows() != field_counts.size())
      throw invalid_input_error("metamodel_problem: field counts length != matrix rows");
    if (assignment.cols() != prior.size())
      throw invalid_input_error("metamodel_problem: prior length != matrix cols");
    if (beta.linear.size() != prior.size())
      throw invalid_input_error("metamodel_problem: beta length != |Z| + 2");
    if (delta < 0.0) throw invalid_input_error("metamodel_problem: delta must be >= 0");
    bounds.validate(prior.size());
  }
};

/// (1/|I|) sum_i (y_i - lambda_i)^2 with lambda = P x.
inline double f_analytic(const od_vector& x, const assignment_matrix& assignment,
                         const std::vector<double>& field_counts) {
  if (assignment.rows() != field_counts.size())
    throw invalid_input_error("f_analytic: field counts length != matrix rows");
  auto lambda = assignment.multiply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    double d = field_counts[i] - lambda[i];
    s += d * d;
  }
  return s / static_cast<double>(field_counts.size());
}

inline double regularizer(const od_vector& x, const od_vector& prior, double delta) {
  double s = 0.0;
  for (std::size_t z = 0; z < x.size(); ++z) {
    double d = x[z] - prior[z];
    s += d * d;
  }
  return delta * s / static_cast<double>(x.size());
}

inline double metamodel_value(const od_vector& x, const metamodel_problem& p) {
  if (x.size() != p.prior.size()) throw invalid_input_error("metamodel_value: x length != |Z|");
  double v = p.beta.scale * f_analytic(x, p.assignment, p.field_counts) + p.beta.intercept;
  for (std::size_t z = 0; z < x.size(); ++z) v += p.beta.linear[z] * x[z];
  return v + regularizer(x, p.prior, p.delta);
}

inline od_vector metamodel_gradient(const od_vector& x, const metamodel_problem& p) {
  if (x.size() != p.prior.size()) throw invalid_input_error("metamodel_gradient: x length != |Z|");
  const double n_i = static_cast<double>(p.field_counts.size());
  const double n_z = static_cast<double>(x.size());
  auto residual = p.assignment.multiply(x);
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= p.field_counts[i];
  od_vector grad;
  p.assignment.multiply_transpose(residual, grad);
  for (std::size_t z = 0; z < x.size(); ++z) {
    grad[z] = p.beta.scale * 2.0 / n_i * grad[z] + p.beta.linear[z] +
              2.0 * p.delta / n_z * (x[z] - p.prior[z]);
  }
  return grad;
}

namespace detail {

/// Cholesky solve of a symmetric positive definite system, in place.
inline bool cholesky_solve_in_place(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {  // L y = b
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {  // L^T x = y
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
    b[ii] = s / a[ii * n + ii];
  }
  return true;
}

/// Reduced gradient of a box-constrained problem: bound-blocked components
/// are zeroed, so a small norm is exactly the box-KKT condition.
inline od_vector projected_gradient(const od_vector& x, const od_vector& grad, const bounds_box& bounds) {
  od_vector pg(x.size());
  for (std::size_t z = 0; z < x.size(); ++z) {
    if (x[z] <= bounds.lower[z]) {
      pg[z] = std::min(grad[z], 0.0);
    } else if (x[z] >= bounds.upper[z]) {
      pg[z] = std::max(grad[z], 0.0);
    } else {
      pg[z] = grad[z];
    }
  }
  return pg;
}

}  // namespace detail

/// Distance-weighted ridge least squares for the metamodel coefficients.
///
/// Minimizes sum_j w_j (f_hat_j - m(x_j; beta))^2 + ridge * ||beta - anchor||^2
/// with w_j = 1 / (1 + ||x_j - current||) and anchor = (1, 0, ..., 0), so with
/// few observations the physical component stays dominant. The observations
/// are canonically sorted first, making the fit independent of input order.
inline metamodel_beta fit_beta(std::vector<observation> observations, const od_vector& current,
                               const metamodel_problem& problem, double ridge = 1e-3) {
  if (observations.empty()) throw invalid_input_error("fit_beta: needs at least one observation");
  if (!(ridge > 0.0)) throw invalid_input_error("fit_beta: ridge weight must be > 0");
  std::sort(observations.begin(), observations.end(), [](const observation& a, const observation& b) {
    if (a.point != b.point) return a.point < b.point;
    return a.objective_estimate < b.objective_estimate;
  });

  const std::size_t n = problem.prior.size() + 2;
  std::vector<double> normal(n * n, 0.0), rhs(n, 0.0), feature(n);
  for (const auto& obs : observations) {
    if (obs.point.size() != problem.prior.size())
      throw invalid_input_error("fit_beta: observation dimension mismatch");
    feature[0] = f_analytic(obs.point, problem.assignment, problem.field_counts);
    feature[1] = 1.0;
    for (std::size_t z = 0; z < obs.point.size(); ++z) feature[z + 2] = obs.point[z];
    double dist = 0.0;
    for (std::size_t z = 0; z < obs.point.size(); ++z) {
      double d = obs.point[z] - current[z];
      dist += d * d;
    }
    const double w = 1.0 / (1.0 + std::sqrt(dist));
    const double target = obs.objective_estimate - regularizer(obs.point, problem.prior, problem.delta);
    for (std::size_t i = 0; i < n; ++i) {
      rhs[i] += w * feature[i] * target;
      for (std::size_t j = 0; j <= i; ++j) normal[i * n + j] += w * feature[i] * feature[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) normal[i * n + j] = normal[j * n + i];
    normal[i * n + i] += ridge;
  }
  rhs[0] += ridge;  // anchor (1, 0, ..., 0)

  if (!all_finite(normal) || !all_finite(rhs)) throw numeric_error("fit_beta: non-finite normal equations");
  if (!detail::cholesky_solve_in_place(normal, rhs, n)) throw numeric_error("fit_beta: singular system");
  metamodel_beta beta;
  beta.scale = rhs[0];
  beta.intercept = rhs[1];
  beta.linear.assign(rhs.begin() + 2, rhs.end());
  return beta;
}

struct solve_result {
  od_vector x;
  double objective = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Projected (spectral) gradient descent with monotone backtracking.
///
/// Stops when the reduced-gradient norm drops below tol * (1 + |m(x)|) or at
/// the iteration cap; a cap exit leaves `converged` false (nonconvex fits).
/// The objective never increases across accepted steps.
inline solve_result solve_metamodel(const metamodel_problem& problem, const od_vector& start,
                                    double tol = 1e-6, int max_iterations = 10000) {
  problem.validate();
  if (start.size() != problem.prior.size()) throw invalid_input_error("solve_metamodel: start length != |Z|");

  solve_result res;
  od_vector x = problem.bounds.clamp(start);
  double f = metamodel_value(x, problem);
  od_vector grad = metamodel_gradient(x, problem);
  if (!std::isfinite(f) || !all_finite(grad)) throw numeric_error("solve_metamodel: non-finite objective");

  double step = 1.0;
  {
    double g_inf = 0.0;
    for (double g : detail::projected_gradient(x, grad, problem.bounds)) g_inf = std::max(g_inf, std::abs(g));
    if (g_inf > 0.0) step = std::min(1e12, std::max(1e-12, 1.0 / g_inf));
  }

  constexpr double armijo = 1e-4;
  int steps = 0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    od_vector pg = detail::projected_gradient(x, grad, problem.bounds);
    res.projected_gradient_norm = norm2(pg);
    if (res.projected_gradient_norm <= tol * (1.0 + std::abs(f))) {
      res.converged = true;
      break;
    }

    od_vector x_new(x.size());
    double f_new = 0.0, directional = 0.0;
    bool accepted = false;
    double alpha = step;
    for (int bt = 0; bt < 100; ++bt) {
      for (std::size_t z = 0; z < x.size(); ++z)
        x_new[z] = std::min(std::max(x[z] - alpha * grad[z], problem.bounds.lower[z]), problem.bounds.upper[z]);
      directional = 0.0;
      for (std::size_t z = 0; z < x.size(); ++z) directional += grad[z] * (x_new[z] - x[z]);
      if (directional == 0.0) break;  // box blocks every descent move
      f_new = metamodel_value(x_new, problem);
      if (!std::isfinite(f_new)) throw numeric_error("solve_metamodel: non-finite objective");
      if (f_new <= f + armijo * directional) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    od_vector grad_new = metamodel_gradient(x_new, problem);
    if (!all_finite(grad_new)) throw numeric_error("solve_metamodel: non-finite gradient");
    double sty = 0.0, sts = 0.0;
    for (std::size_t z = 0; z < x.size(); ++z) {
      double s = x_new[z] - x[z];
      sts += s * s;
      sty += s * (grad_new[z] - grad[z]);
    }
    step = sty > 1e-30 * sts ? std::min(1e12, std::max(1e-12, sts / sty)) : 1e12;
    x = std::move(x_new);
    f = f_new;
    grad = std::move(grad_new);
    ++steps;
  }
  if (!res.converged) {  // stall or iteration cap: report the state at the final point
    res.projected_gradient_norm = norm2(detail::projected_gradient(x, grad, problem.bounds));
    res.converged = res.projected_gradient_norm <= tol * (1.0 + std::abs(f));
  }
  res.iterations = steps;
  res.x = std::move(x);
  res.objective = f;
  return res;
}

}  // namespace odcal
