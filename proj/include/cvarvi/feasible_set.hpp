#ifndef CVARVI_FEASIBLE_SET_HPP
#define CVARVI_FEASIBLE_SET_HPP

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace cvarvi {

// Axis-aligned box, componentwise lower <= upper.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double tol) const;
};

enum class SetStructure { general, product_of_simplices, box };

// One scaled simplex { h[indices] >= 0, sum over indices = demand }.
struct SimplexGroup {
  std::vector<int> indices;
  double demand;
};

// Polyhedron { h : A_ineq h - b_ineq <= 0, A_eq h - b_eq = 0 }. The two
// specialized structures keep their extra data so projections stay exact:
// product-of-simplices uses the sort-and-threshold simplex projection per
// group, boxes clamp componentwise. General sets project by dual coordinate
// ascent (Hildreth) on the least-distance problem.
class PolyhedralSet {
 public:
  static PolyhedralSet general(Eigen::MatrixXd a_ineq, Eigen::VectorXd b_ineq,
                               Eigen::MatrixXd a_eq, Eigen::VectorXd b_eq);
  static PolyhedralSet product_of_simplices(std::vector<SimplexGroup> groups, int n);
  static PolyhedralSet box(Box b);

  int dimension() const { return n_; }
  int num_inequalities() const { return static_cast<int>(a_ineq_.rows()); }
  int num_equalities() const { return static_cast<int>(a_eq_.rows()); }
  SetStructure structure() const { return structure_; }

  const Eigen::MatrixXd& ineq_matrix() const { return a_ineq_; }
  const Eigen::VectorXd& ineq_rhs() const { return b_ineq_; }
  const Eigen::MatrixXd& eq_matrix() const { return a_eq_; }
  const Eigen::VectorXd& eq_rhs() const { return b_eq_; }
  const std::vector<SimplexGroup>& simplex_groups() const { return groups_; }

  // q(h) = A_ineq h - b_ineq (feasible iff <= 0)
  Eigen::VectorXd ineq_values(const Eigen::VectorXd& h) const;
  // l(h) = A_eq h - b_eq (feasible iff = 0)
  Eigen::VectorXd eq_values(const Eigen::VectorXd& h) const;

  // Euclidean projection onto the set.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;

  // max constraint violation at h
  double violation(const Eigen::VectorXd& h) const;
  bool contains(const Eigen::VectorXd& h, double tol) const;

 private:
  PolyhedralSet() = default;

  int n_ = 0;
  SetStructure structure_ = SetStructure::general;
  Eigen::MatrixXd a_ineq_;  // s x n
  Eigen::VectorXd b_ineq_;  // s
  Eigen::MatrixXd a_eq_;    // t x n
  Eigen::VectorXd b_eq_;    // t
  std::vector<SimplexGroup> groups_;  // product_of_simplices only
  Box box_{Eigen::VectorXd(), Eigen::VectorXd()};
};

// Projection of x onto { y >= 0, sum(y) = total }, total > 0. Exact
// finite-step sort-and-threshold method.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& x, double total);

// [x]_y^+ componentwise: x_i when y_i > 0, max(0, x_i) when y_i = 0.
// y must be nonnegative.
Eigen::VectorXd clipped_max(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
double clipped_max(double x, double y);

struct KktPoint {
  Eigen::VectorXd h;
  Eigen::VectorXd lambda;  // >= 0
  Eigen::VectorXd mu;
  double stationarity_residual = 0.0;
  double primal_residual = 0.0;
  double complementarity_residual = 0.0;
};

// Residuals of the KKT system at (h, lambda, mu) given the map value at h:
//   stationarity     ||F + A_ineq^T lambda + A_eq^T mu||
//   primal           ||A_eq h - b_eq|| + ||[A_ineq h - b_ineq]_+||
//   complementarity  |lambda^T (A_ineq h - b_ineq)|
KktPoint kkt_residuals(const PolyhedralSet& set, const Eigen::VectorXd& f_value,
                       const Eigen::VectorXd& h, const Eigen::VectorXd& lambda,
                       const Eigen::VectorXd& mu);

// Linear independence of the active-inequality gradients together with all
// equality gradients, by SVD rank test at relative threshold 1e-8.
bool licq_check(const PolyhedralSet& set, const Eigen::VectorXd& h, double active_tol);

// Least-squares multipliers for the stationarity equation restricted to the
// constraints active at h (inequality multipliers clamped to >= 0).
// Returns (lambda, mu).
std::pair<Eigen::VectorXd, Eigen::VectorXd> recover_multipliers(
    const PolyhedralSet& set, const Eigen::VectorXd& f_value,
    const Eigen::VectorXd& h, double active_tol);

// Default active-constraint tolerance: 1e-7 * (1 + ||b_ineq||_inf).
double default_active_tol(const PolyhedralSet& set);

}  // namespace cvarvi

#endif
