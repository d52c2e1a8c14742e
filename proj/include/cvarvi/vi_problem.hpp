#ifndef CVARVI_VI_PROBLEM_HPP
#define CVARVI_VI_PROBLEM_HPP

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "cvarvi/cvar.hpp"
#include "cvarvi/feasible_set.hpp"
#include "cvarvi/rng.hpp"

namespace cvarvi {

// Declared separable structure  C(h, u) = coeff * h + offset + noise_gain_i * u[noise_index_i].
// noise_index = -1 means the component carries no noise. Declaring this
// enables the exact CVaR map, the closed-form monotonicity analysis, and a
// faster sampling path.
struct AffineNoiseStructure {
  Eigen::MatrixXd coeff;          // n x n
  Eigen::VectorXd offset;         // n
  Eigen::VectorXd noise_gain;     // n, >= 0
  std::vector<int> noise_index;   // n entries in {-1, 0..m-1}
};

// Sampling oracle for the random cost vector. `cost` must be deterministic
// given (h, u); all components of one evaluation come from the same event u.
struct UncertainCostModel {
  int n = 0;  // decision dimension
  int m = 0;  // uncertainty dimension
  std::function<void(Rng&, Eigen::VectorXd&)> sample_u;  // fills an m-vector
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> cost;
  std::optional<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>> exact_cvar_map;
  std::optional<std::pair<double, double>> cost_bounds;  // (z1, z2), checked per sample
  std::optional<AffineNoiseStructure> affine;

  // iid U(0,1)^m event sampler
  static std::function<void(Rng&, Eigen::VectorXd&)> iid_uniform(int m);
};

// Model with the declared affine-uniform structure; sample_u is iid U(0,1)^m.
UncertainCostModel make_affine_uniform_model(AffineNoiseStructure structure, int m);

// VI(F, H) with F the componentwise CVaR of the model's costs at `alpha`.
// When the model declares the affine-uniform structure and carries no exact
// map, the exact map  F(h) = coeff h + offset + (1 - alpha/2) noise_gain
// is attached automatically.
struct ViProblem {
  UncertainCostModel model;
  RiskLevel alpha;
  PolyhedralSet set;

  ViProblem(UncertainCostModel model_in, RiskLevel alpha_in, PolyhedralSet set_in);
};

enum class MonotonicityKind { not_detected, monotone, strictly_monotone, strongly_monotone };
enum class MonotonicityMethod { affine_exact, sampled_pairs };

struct MonotonicityReport {
  MonotonicityKind kind = MonotonicityKind::not_detected;
  double c_f = 0.0;  // strong monotonicity constant; 0 unless strongly monotone
  MonotonicityMethod method = MonotonicityMethod::affine_exact;
};

// Scratch buffers for repeated empirical-map evaluation.
struct EmpiricalMapWorkspace {
  Eigen::VectorXd u;
  Eigen::VectorXd base;
  std::vector<double> samples;  // component-major, n * N
};

// Draws N shared events u_1..u_N, evaluates the cost at h under each event,
// and returns the componentwise empirical CVaR of the batch (plus the batch
// itself). Consumes exactly N events from rng.
std::pair<Eigen::VectorXd, SampleBatch> empirical_map(const ViProblem& problem,
                                                      const Eigen::VectorXd& h, long n_samples,
                                                      Rng& rng);

// Estimate only, reusing workspace buffers. Identical draws and values.
Eigen::VectorXd empirical_map_estimate(const ViProblem& problem, const Eigen::VectorXd& h,
                                       long n_samples, Rng& rng, EmpiricalMapWorkspace& ws);

// Exact F(h); requires the model's exact map.
Eigen::VectorXd exact_map(const ViProblem& problem, const Eigen::VectorXd& h);

// Closed-form analysis via the smallest eigenvalue of the symmetrized
// coefficient matrix for declared-affine models; otherwise a deterministic
// sampled-pairs probe of (F(x) - F(y))^T (x - y) / ||x - y||^2 using the
// exact map.
MonotonicityReport monotonicity_report(const ViProblem& problem);

// ||h - reference||
double solution_error(const Eigen::VectorXd& h, const Eigen::VectorXd& reference);

}  // namespace cvarvi

#endif
