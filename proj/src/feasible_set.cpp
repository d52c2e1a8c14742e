#include "cvarvi/feasible_set.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "cvarvi/errors.hpp"

namespace cvarvi {

Box::Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw InvalidInput("box: lower/upper size mismatch");
  if (((upper - lower).array() < 0.0).any()) {
    throw InvalidInput("box: lower must not exceed upper");
  }
}

Eigen::VectorXd Box::clamp(const Eigen::VectorXd& x) const {
  if (x.size() != lower.size()) throw InvalidInput("box clamp: dimension mismatch");
  return x.cwiseMax(lower).cwiseMin(upper);
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  return ((x - lower).array() >= -tol).all() && ((upper - x).array() >= -tol).all();
}

PolyhedralSet PolyhedralSet::general(Eigen::MatrixXd a_ineq, Eigen::VectorXd b_ineq,
                                     Eigen::MatrixXd a_eq, Eigen::VectorXd b_eq) {
  const int n = static_cast<int>(a_ineq.cols() > 0 ? a_ineq.cols() : a_eq.cols());
  if (n <= 0) throw InvalidInput("polyhedral set: ambient dimension must be positive");
  if (a_ineq.rows() != b_ineq.size() || a_eq.rows() != b_eq.size()) {
    throw InvalidInput("polyhedral set: constraint matrix/rhs size mismatch");
  }
  if ((a_ineq.size() > 0 && a_ineq.cols() != n) || (a_eq.size() > 0 && a_eq.cols() != n)) {
    throw InvalidInput("polyhedral set: inconsistent column counts");
  }
  PolyhedralSet set;
  set.n_ = n;
  set.structure_ = SetStructure::general;
  set.a_ineq_ = std::move(a_ineq);
  set.b_ineq_ = std::move(b_ineq);
  set.a_eq_ = std::move(a_eq);
  set.b_eq_ = std::move(b_eq);
  if (set.a_ineq_.rows() == 0) set.a_ineq_.resize(0, n);
  if (set.a_eq_.rows() == 0) set.a_eq_.resize(0, n);
  return set;
}

PolyhedralSet PolyhedralSet::product_of_simplices(std::vector<SimplexGroup> groups, int n) {
  if (n <= 0) throw InvalidInput("product_of_simplices: dimension must be positive");
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (const auto& g : groups) {
    if (g.indices.empty()) throw InvalidInput("product_of_simplices: empty group");
    if (!(g.demand > 0.0)) throw InvalidInput("product_of_simplices: demand must be positive");
    for (int i : g.indices) {
      if (i < 0 || i >= n) throw InvalidInput("product_of_simplices: index out of range");
      if (seen[static_cast<std::size_t>(i)]++) {
        throw InvalidInput("product_of_simplices: index appears in two groups");
      }
    }
  }
  for (int c : seen) {
    if (c != 1) throw InvalidInput("product_of_simplices: groups must partition the indices");
  }

  PolyhedralSet set;
  set.n_ = n;
  set.structure_ = SetStructure::product_of_simplices;
  set.a_ineq_ = -Eigen::MatrixXd::Identity(n, n);
  set.b_ineq_ = Eigen::VectorXd::Zero(n);
  set.a_eq_ = Eigen::MatrixXd::Zero(static_cast<int>(groups.size()), n);
  set.b_eq_ = Eigen::VectorXd(static_cast<int>(groups.size()));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int i : groups[g].indices) set.a_eq_(static_cast<int>(g), i) = 1.0;
    set.b_eq_[static_cast<int>(g)] = groups[g].demand;
  }
  set.groups_ = std::move(groups);
  return set;
}

PolyhedralSet PolyhedralSet::box(Box b) {
  const int n = static_cast<int>(b.lower.size());
  if (n <= 0) throw InvalidInput("box set: dimension must be positive");
  PolyhedralSet set;
  set.n_ = n;
  set.structure_ = SetStructure::box;
  set.a_ineq_.resize(2 * n, n);
  set.a_ineq_ << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  set.b_ineq_.resize(2 * n);
  set.b_ineq_ << b.upper, -b.lower;
  set.a_eq_.resize(0, n);
  set.b_eq_.resize(0);
  set.box_ = std::move(b);
  return set;
}

Eigen::VectorXd PolyhedralSet::ineq_values(const Eigen::VectorXd& h) const {
  if (h.size() != n_) throw InvalidInput("ineq_values: dimension mismatch");
  return a_ineq_ * h - b_ineq_;
}

Eigen::VectorXd PolyhedralSet::eq_values(const Eigen::VectorXd& h) const {
  if (h.size() != n_) throw InvalidInput("eq_values: dimension mismatch");
  return a_eq_ * h - b_eq_;
}

double PolyhedralSet::violation(const Eigen::VectorXd& h) const {
  double v = 0.0;
  if (a_eq_.rows() > 0) v = eq_values(h).cwiseAbs().maxCoeff();
  if (a_ineq_.rows() > 0) v = std::max(v, ineq_values(h).maxCoeff());
  return std::max(v, 0.0);
}

bool PolyhedralSet::contains(const Eigen::VectorXd& h, double tol) const {
  return violation(h) <= tol;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& x, double total) {
  if (!(total > 0.0)) throw InvalidInput("project_simplex: total must be positive");
  const int g = static_cast<int>(x.size());
  std::vector<double> u(x.data(), x.data() + g);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0;
  double theta = 0.0;
  for (int j = 0; j < g; ++j) {
    cum += u[static_cast<std::size_t>(j)];
    const double t = (cum - total) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (x.array() - theta).cwiseMax(0.0);
}

namespace {

// Dual coordinate ascent (Hildreth) for min ||y - x||^2 over the polyhedron.
// y is kept as x - A_ineq^T lambda - A_eq^T mu throughout, so stationarity
// holds by construction; sweeps stop once primal feasibility and
// complementary slackness are met.
Eigen::VectorXd hildreth_project(const PolyhedralSet& set, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd& a = set.ineq_matrix();
  const Eigen::VectorXd& b = set.ineq_rhs();
  const Eigen::MatrixXd& e = set.eq_matrix();
  const Eigen::VectorXd& d = set.eq_rhs();
  const int s = static_cast<int>(a.rows());
  const int t = static_cast<int>(e.rows());
  if (s == 0 && t == 0) return x;

  double scale = 1.0 + x.cwiseAbs().maxCoeff();
  if (s > 0) scale = std::max(scale, b.cwiseAbs().maxCoeff());
  if (t > 0) scale = std::max(scale, d.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;

  Eigen::VectorXd a_norm2(s), e_norm2(t);
  for (int i = 0; i < s; ++i) a_norm2[i] = a.row(i).squaredNorm();
  for (int j = 0; j < t; ++j) e_norm2[j] = e.row(j).squaredNorm();
  for (int i = 0; i < s; ++i) {
    if (a_norm2[i] == 0.0 && b[i] < -tol) {
      throw InfeasibleSet("projection: inequality row is identically infeasible");
    }
  }
  for (int j = 0; j < t; ++j) {
    if (e_norm2[j] == 0.0 && std::abs(d[j]) > tol) {
      throw InfeasibleSet("projection: equality row is identically infeasible");
    }
  }

  Eigen::VectorXd y = x;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(s);
  constexpr int kMaxSweeps = 50000;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (int j = 0; j < t; ++j) {
      if (e_norm2[j] == 0.0) continue;
      const double r = e.row(j).dot(y) - d[j];
      y.noalias() -= (r / e_norm2[j]) * e.row(j).transpose();
    }
    for (int i = 0; i < s; ++i) {
      if (a_norm2[i] == 0.0) continue;
      const double r = a.row(i).dot(y) - b[i];
      const double next = std::max(0.0, lambda[i] + r / a_norm2[i]);
      const double delta = next - lambda[i];
      if (delta != 0.0) {
        lambda[i] = next;
        y.noalias() -= delta * a.row(i).transpose();
      }
    }

    double primal = 0.0, comp = 0.0;
    for (int j = 0; j < t; ++j) primal = std::max(primal, std::abs(e.row(j).dot(y) - d[j]));
    for (int i = 0; i < s; ++i) {
      const double r = a.row(i).dot(y) - b[i];
      primal = std::max(primal, r);
      comp = std::max(comp, std::abs(lambda[i] * r));
    }
    if (primal <= tol && comp <= tol * scale) return y;
  }
  throw InfeasibleSet("projection did not converge; the set may be empty or ill conditioned");
}

}  // namespace

Eigen::VectorXd PolyhedralSet::project(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw InvalidInput("project: dimension mismatch");
  if (!x.allFinite()) throw InvalidInput("project: non-finite input");
  switch (structure_) {
    case SetStructure::box:
      return box_.clamp(x);
    case SetStructure::product_of_simplices: {
      Eigen::VectorXd y = x;
      for (const auto& g : groups_) {
        Eigen::VectorXd part(static_cast<int>(g.indices.size()));
        for (std::size_t i = 0; i < g.indices.size(); ++i) {
          part[static_cast<int>(i)] = x[g.indices[i]];
        }
        part = project_simplex(part, g.demand);
        for (std::size_t i = 0; i < g.indices.size(); ++i) {
          y[g.indices[i]] = part[static_cast<int>(i)];
        }
      }
      return y;
    }
    case SetStructure::general:
      return hildreth_project(*this, x);
  }
  throw InvalidInput("project: unknown structure");
}

Eigen::VectorXd clipped_max(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw InvalidInput("clipped_max: dimension mismatch");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = clipped_max(x[i], y[i]);
  return out;
}

double clipped_max(double x, double y) {
  if (y < 0.0) throw InvalidInput("clipped_max: y must be nonnegative");
  return y > 0.0 ? x : std::max(0.0, x);
}

KktPoint kkt_residuals(const PolyhedralSet& set, const Eigen::VectorXd& f_value,
                       const Eigen::VectorXd& h, const Eigen::VectorXd& lambda,
                       const Eigen::VectorXd& mu) {
  if (f_value.size() != set.dimension() || h.size() != set.dimension()) {
    throw InvalidInput("kkt_residuals: dimension mismatch");
  }
  if (lambda.size() != set.num_inequalities() || mu.size() != set.num_equalities()) {
    throw InvalidInput("kkt_residuals: multiplier dimension mismatch");
  }
  if ((lambda.array() < 0.0).any()) {
    throw InvalidInput("kkt_residuals: lambda must be nonnegative");
  }

  KktPoint p;
  p.h = h;
  p.lambda = lambda;
  p.mu = mu;
  p.stationarity_residual =
      (f_value + set.ineq_matrix().transpose() * lambda + set.eq_matrix().transpose() * mu).norm();
  const Eigen::VectorXd q = set.ineq_values(h);
  p.primal_residual = set.eq_values(h).norm() + q.cwiseMax(0.0).norm();
  p.complementarity_residual = std::abs(lambda.dot(q));
  return p;
}

bool licq_check(const PolyhedralSet& set, const Eigen::VectorXd& h, double active_tol) {
  const Eigen::VectorXd q = set.ineq_values(h);
  std::vector<int> active;
  for (int i = 0; i < set.num_inequalities(); ++i) {
    if (std::abs(q[i]) <= active_tol) active.push_back(i);
  }
  const int rows = static_cast<int>(active.size()) + set.num_equalities();
  if (rows == 0) return true;
  Eigen::MatrixXd g(rows, set.dimension());
  for (std::size_t i = 0; i < active.size(); ++i) {
    g.row(static_cast<int>(i)) = set.ineq_matrix().row(active[i]);
  }
  g.bottomRows(set.num_equalities()) = set.eq_matrix();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
  const double smax = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
  if (smax == 0.0) return false;  // some gradient is the zero vector
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > 1e-8 * smax) ++rank;
  }
  return rank == rows;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> recover_multipliers(
    const PolyhedralSet& set, const Eigen::VectorXd& f_value,
    const Eigen::VectorXd& h, double active_tol) {
  if (f_value.size() != set.dimension() || h.size() != set.dimension()) {
    throw InvalidInput("recover_multipliers: dimension mismatch");
  }
  const Eigen::VectorXd q = set.ineq_values(h);
  std::vector<int> active;
  for (int i = 0; i < set.num_inequalities(); ++i) {
    if (q[i] >= -active_tol) active.push_back(i);
  }
  const int t = set.num_equalities();
  const int rows = static_cast<int>(active.size()) + t;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(set.num_inequalities());
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(t);
  if (rows == 0) return {lambda, mu};

  // minimize ||F + G^T z|| over z for the active gradients G
  Eigen::MatrixXd gt(set.dimension(), rows);
  for (std::size_t i = 0; i < active.size(); ++i) {
    gt.col(static_cast<int>(i)) = set.ineq_matrix().row(active[i]).transpose();
  }
  for (int j = 0; j < t; ++j) {
    gt.col(static_cast<int>(active.size()) + j) = set.eq_matrix().row(j).transpose();
  }
  Eigen::VectorXd z = gt.completeOrthogonalDecomposition().solve(-f_value);
  for (std::size_t i = 0; i < active.size(); ++i) {
    lambda[active[i]] = std::max(0.0, z[static_cast<int>(i)]);
  }
  mu = z.tail(t);
  return {lambda, mu};
}

double default_active_tol(const PolyhedralSet& set) {
  double b_inf = 0.0;
  if (set.num_inequalities() > 0) b_inf = set.ineq_rhs().cwiseAbs().maxCoeff();
  return 1e-7 * (1.0 + b_inf);
}

}  // namespace cvarvi
