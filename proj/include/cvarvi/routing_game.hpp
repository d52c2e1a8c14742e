#ifndef CVARVI_ROUTING_GAME_HPP
#define CVARVI_ROUTING_GAME_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "cvarvi/vi_problem.hpp"

namespace cvarvi {

struct OdPair {
  std::string origin;
  std::string destination;
  double demand = 0.0;  // >= 0
};

// Affine-uniform cost of one path:
//   C_p(h, u) = flow_coeff . h + constant + noise_gain * u[noise_index]
// noise_index = -1 means no noise on this path.
struct PathCost {
  Eigen::VectorXd flow_coeff;
  double constant = 0.0;
  double noise_gain = 0.0;
  int noise_index = -1;
};

// Nonatomic routing game over abstract paths: each path belongs to one OD
// pair and carries its own uncertain cost; flows only need to meet the OD
// demands and stay nonnegative.
struct RoutingNetwork {
  std::vector<std::string> vertices;
  std::vector<OdPair> od_pairs;
  std::vector<int> path_od;     // OD index per path
  std::vector<PathCost> costs;  // one per path
  int uncertainty_dim = 0;

  int num_paths() const { return static_cast<int>(path_od.size()); }
  void validate() const;
};

struct CweTolerances {
  double used_path_tol = 0.0;
  double cost_gap_tol = 0.0;
  double demand_tol = 0.0;  // <= 0 picks 1e-9 * (1 + max demand)
};

// is_equilibrium holds iff demands are met within demand_tol, flows are
// nonnegative within demand_tol, and no used path costs more than
// cost_gap_tol above the cheapest path of its OD pair.
struct CweReport {
  bool is_equilibrium = false;
  Eigen::VectorXd demand_residual;  // one entry per OD pair
  double max_cost_gap = 0.0;
  double used_path_tol = 0.0;
  double cost_gap_tol = 0.0;
  double demand_tol = 0.0;
};

// Feasible flows as a product of scaled simplices (one demand equality per
// OD pair, flows >= 0) plus the affine-uniform cost model; the exact CVaR
// map comes along for free.
ViProblem to_vi_problem(const RoutingNetwork& net, RiskLevel alpha);

struct BenchmarkInstance {
  RoutingNetwork network;
  RiskLevel alpha;
  Eigen::VectorXd reference;      // known equilibrium flow
  Eigen::VectorXd initial_point;  // feasible start at distance 39.72 from it
};

// Two-node network with five paths, demands 260 and 170, uniform noise on
// paths 1 and 4, alpha = 0.2. The reference equilibrium is
// (89.52, 98.39, 72.09, 74.32, 95.68).
BenchmarkInstance benchmark_instance();

// Equilibrium check via the exact CVaR map.
CweReport verify_cwe(const RoutingNetwork& net, RiskLevel alpha, const Eigen::VectorXd& h,
                     const CweTolerances& tols);

// Same check with the empirical map (n_samples shared events at `h`).
CweReport verify_cwe_empirical(const RoutingNetwork& net, RiskLevel alpha,
                               const Eigen::VectorXd& h, const CweTolerances& tols,
                               long n_samples, std::uint64_t seed);

// JSON network description; see the README for the schema.
RoutingNetwork load_network_file(const std::string& path);

}  // namespace cvarvi

#endif
