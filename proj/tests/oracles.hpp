// Independent reference computations used to pin expected test values.
// These deliberately avoid the library's closed-form code paths.
#ifndef CVARVI_TESTS_ORACLES_HPP
#define CVARVI_TESTS_ORACLES_HPP

#include <Eigen/Core>
#include <algorithm>
#include <limits>
#include <span>
#include <vector>

namespace oracles {

// Minimizes t + (N a)^-1 sum_j [z_j - t]_+ by scanning every sample point
// plus a fine grid spanning [min, max]. The objective is convex piecewise
// linear with breakpoints at the samples, so the sample scan alone is exact;
// the grid guards the claim.
inline double brute_force_cvar(std::span<const double> samples, double alpha,
                               int grid_points = 4000) {
  const double n_alpha = static_cast<double>(samples.size()) * alpha;
  auto objective = [&](double t) {
    double acc = 0.0;
    for (double z : samples) acc += std::max(0.0, z - t);
    return t + acc / n_alpha;
  };
  double lo = *std::min_element(samples.begin(), samples.end());
  double hi = *std::max_element(samples.begin(), samples.end());
  double best = std::numeric_limits<double>::infinity();
  for (double z : samples) best = std::min(best, objective(z));
  for (int i = 0; i <= grid_points; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / grid_points;
    best = std::min(best, objective(t));
  }
  return best;
}

// Exhaustive grid search of argmin ||x - y||^2 over the scaled 2-simplex
// { y >= 0, y_1 + y_2 + y_3 = total }.
inline Eigen::Vector3d grid_simplex_projection(const Eigen::Vector3d& x, double total,
                                               int divisions = 400) {
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= divisions; ++i) {
    for (int j = 0; j + i <= divisions; ++j) {
      Eigen::Vector3d y(total * i / divisions, total * j / divisions,
                        total * (divisions - i - j) / divisions);
      const double d = (x - y).squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best = y;
      }
    }
  }
  return best;
}

// All multisets of `size` drawn from `values`, as sorted vectors.
inline void enumerate_multisets(const std::vector<double>& values, int size,
                                std::vector<std::vector<double>>& out) {
  std::vector<double> current;
  auto recurse = [&](auto&& self, std::size_t start) -> void {
    if (static_cast<int>(current.size()) == size) {
      out.push_back(current);
      return;
    }
    for (std::size_t i = start; i < values.size(); ++i) {
      current.push_back(values[i]);
      self(self, i);
      current.pop_back();
    }
  };
  recurse(recurse, 0);
}

}  // namespace oracles

#endif
