#include "cvarvi/routing_game.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "cvarvi/errors.hpp"

namespace cvarvi {

void RoutingNetwork::validate() const {
  const int n = num_paths();
  if (n < 1) throw InvalidInput("routing network: at least one path is required");
  if (static_cast<int>(costs.size()) != n) {
    throw InvalidInput("routing network: one cost entry per path is required");
  }
  if (od_pairs.empty()) throw InvalidInput("routing network: at least one OD pair is required");
  std::vector<int> paths_per_od(od_pairs.size(), 0);
  for (int od : path_od) {
    if (od < 0 || od >= static_cast<int>(od_pairs.size())) {
      throw InvalidInput("routing network: path references an unknown OD pair");
    }
    ++paths_per_od[static_cast<std::size_t>(od)];
  }
  for (std::size_t w = 0; w < od_pairs.size(); ++w) {
    if (paths_per_od[w] == 0) {
      throw InvalidInput("routing network: every OD pair needs at least one path");
    }
    if (!(od_pairs[w].demand >= 0.0)) {
      throw InvalidInput("routing network: demands must be nonnegative");
    }
  }
  for (const PathCost& c : costs) {
    if (c.flow_coeff.size() != n) {
      throw InvalidInput("routing network: cost coefficient length must equal the path count");
    }
    if (c.noise_gain < 0.0) throw InvalidInput("routing network: noise gains must be nonnegative");
    if (c.noise_index < -1 || c.noise_index >= uncertainty_dim) {
      throw InvalidInput("routing network: noise index out of range");
    }
    if (c.noise_index >= 0 && uncertainty_dim < 1) {
      throw InvalidInput("routing network: noisy costs need uncertainty_dim >= 1");
    }
  }
}

namespace {

AffineNoiseStructure affine_structure(const RoutingNetwork& net) {
  const int n = net.num_paths();
  AffineNoiseStructure s;
  s.coeff.resize(n, n);
  s.offset.resize(n);
  s.noise_gain.resize(n);
  s.noise_index.resize(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    s.coeff.row(p) = net.costs[static_cast<std::size_t>(p)].flow_coeff.transpose();
    s.offset[p] = net.costs[static_cast<std::size_t>(p)].constant;
    s.noise_gain[p] = net.costs[static_cast<std::size_t>(p)].noise_gain;
    s.noise_index[static_cast<std::size_t>(p)] = net.costs[static_cast<std::size_t>(p)].noise_index;
  }
  return s;
}

Eigen::VectorXd exact_costs(const RoutingNetwork& net, RiskLevel alpha, const Eigen::VectorXd& h) {
  const AffineNoiseStructure s = affine_structure(net);
  Eigen::VectorXd f = s.coeff * h + s.offset;
  for (int p = 0; p < f.size(); ++p) {
    if (s.noise_index[static_cast<std::size_t>(p)] >= 0) {
      f[p] += exact_cvar_affine_uniform(0.0, s.noise_gain[p], alpha);
    }
  }
  return f;
}

CweReport check_cwe(const RoutingNetwork& net, const Eigen::VectorXd& h,
                    const Eigen::VectorXd& costs, const CweTolerances& tols) {
  const int n = net.num_paths();
  const int n_od = static_cast<int>(net.od_pairs.size());

  CweReport report;
  report.used_path_tol = tols.used_path_tol;
  report.cost_gap_tol = tols.cost_gap_tol;
  double max_demand = 0.0;
  for (const OdPair& od : net.od_pairs) max_demand = std::max(max_demand, od.demand);
  report.demand_tol = tols.demand_tol > 0.0 ? tols.demand_tol : 1e-9 * (1.0 + max_demand);

  report.demand_residual = Eigen::VectorXd::Zero(n_od);
  for (int p = 0; p < n; ++p) {
    report.demand_residual[net.path_od[static_cast<std::size_t>(p)]] += h[p];
  }
  for (int w = 0; w < n_od; ++w) {
    report.demand_residual[w] = std::abs(report.demand_residual[w] - net.od_pairs[static_cast<std::size_t>(w)].demand);
  }

  Eigen::VectorXd cheapest =
      Eigen::VectorXd::Constant(n_od, std::numeric_limits<double>::infinity());
  for (int p = 0; p < n; ++p) {
    const int w = net.path_od[static_cast<std::size_t>(p)];
    cheapest[w] = std::min(cheapest[w], costs[p]);
  }
  report.max_cost_gap = 0.0;
  for (int p = 0; p < n; ++p) {
    if (h[p] > tols.used_path_tol) {
      const int w = net.path_od[static_cast<std::size_t>(p)];
      report.max_cost_gap = std::max(report.max_cost_gap, costs[p] - cheapest[w]);
    }
  }

  const bool demands_met = report.demand_residual.maxCoeff() <= report.demand_tol;
  const bool nonnegative = h.minCoeff() >= -report.demand_tol;
  report.is_equilibrium =
      demands_met && nonnegative && report.max_cost_gap <= tols.cost_gap_tol;
  return report;
}

}  // namespace

ViProblem to_vi_problem(const RoutingNetwork& net, RiskLevel alpha) {
  net.validate();
  const int n = net.num_paths();

  std::vector<SimplexGroup> groups(net.od_pairs.size());
  for (int p = 0; p < n; ++p) {
    groups[static_cast<std::size_t>(net.path_od[static_cast<std::size_t>(p)])].indices.push_back(p);
  }
  for (std::size_t w = 0; w < groups.size(); ++w) {
    groups[w].demand = net.od_pairs[w].demand;
  }
  PolyhedralSet set = PolyhedralSet::product_of_simplices(std::move(groups), n);

  UncertainCostModel model = make_affine_uniform_model(affine_structure(net),
                                                       std::max(net.uncertainty_dim, 0));
  return ViProblem(std::move(model), alpha, std::move(set));
}

BenchmarkInstance benchmark_instance() {
  RoutingNetwork net;
  net.vertices = {"A", "B"};
  net.od_pairs = {{"A", "B", 260.0}, {"B", "A", 170.0}};
  net.path_od = {0, 0, 0, 1, 1};
  net.uncertainty_dim = 2;

  auto coeff = [](std::initializer_list<double> v) {
    Eigen::VectorXd c(5);
    int i = 0;
    for (double x : v) c[i++] = x;
    return c;
  };
  net.costs = {
      {coeff({40, 0, 0, 20, 0}), 1000.0, 3000.0, 0},
      {coeff({0, 60, 0, 0, 20}), 950.0, 0.0, -1},
      {coeff({0, 0, 80, 0, 0}), 3000.0, 0.0, -1},
      {coeff({8, 0, 0, 80, 0}), 1000.0, 4000.0, 1},
      {coeff({0, 4, 0, 0, 100}), 1300.0, 0.0, -1},
  };

  BenchmarkInstance bench{std::move(net), RiskLevel(0.2), Eigen::VectorXd(5), Eigen::VectorXd(5)};
  bench.reference << 89.52, 98.39, 72.09, 74.32, 95.68;
  // Feasible start at distance 39.72 from the reference: the reference plus
  // 39.72 / sqrt(8) times (1, 1, -2, 1, -1), a unit-sum-free direction, so
  // demands are preserved and the offset is the distance itself.
  bench.initial_point << 103.56314067436483, 112.43314067436484, 44.00371865127034,
      88.36314067436483, 81.63685932563517;
  return bench;
}

CweReport verify_cwe(const RoutingNetwork& net, RiskLevel alpha, const Eigen::VectorXd& h,
                     const CweTolerances& tols) {
  net.validate();
  if (h.size() != net.num_paths()) throw InvalidInput("verify_cwe: flow dimension mismatch");
  return check_cwe(net, h, exact_costs(net, alpha, h), tols);
}

CweReport verify_cwe_empirical(const RoutingNetwork& net, RiskLevel alpha,
                               const Eigen::VectorXd& h, const CweTolerances& tols,
                               long n_samples, std::uint64_t seed) {
  net.validate();
  if (h.size() != net.num_paths()) throw InvalidInput("verify_cwe: flow dimension mismatch");
  ViProblem problem = to_vi_problem(net, alpha);
  Rng rng(seed);
  EmpiricalMapWorkspace ws;
  const Eigen::VectorXd costs = empirical_map_estimate(problem, h, n_samples, rng, ws);
  return check_cwe(net, h, costs, tols);
}

RoutingNetwork load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("network file: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("network file: ") + e.what());
  }

  try {
    RoutingNetwork net;
    for (const auto& v : doc.at("vertices")) net.vertices.push_back(v.get<std::string>());
    for (const auto& od : doc.at("od_pairs")) {
      net.od_pairs.push_back({od.at("origin").get<std::string>(),
                              od.at("destination").get<std::string>(),
                              od.at("demand").get<double>()});
    }
    const auto& paths = doc.at("paths");
    const int n = static_cast<int>(paths.size());
    int max_noise_index = -1;
    for (const auto& p : paths) {
      net.path_od.push_back(p.at("od").get<int>());
      PathCost cost;
      const auto& fc = p.at("flow_coeff");
      if (static_cast<int>(fc.size()) != n) {
        throw InvalidInput("network file: flow_coeff length must equal the path count");
      }
      cost.flow_coeff.resize(n);
      for (int i = 0; i < n; ++i) cost.flow_coeff[i] = fc.at(static_cast<std::size_t>(i)).get<double>();
      cost.constant = p.at("constant").get<double>();
      cost.noise_gain = p.value("noise_gain", 0.0);
      cost.noise_index = p.value("noise_index", -1);
      max_noise_index = std::max(max_noise_index, cost.noise_index);
      net.costs.push_back(std::move(cost));
    }
    net.uncertainty_dim = doc.value("uncertainty_dim", max_noise_index + 1);
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("network file: ") + e.what());
  }
}

}  // namespace cvarvi
