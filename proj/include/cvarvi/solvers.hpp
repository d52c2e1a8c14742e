#ifndef CVARVI_SOLVERS_HPP
#define CVARVI_SOLVERS_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cvarvi/feasible_set.hpp"
#include "cvarvi/vi_problem.hpp"

namespace cvarvi {

// Diminishing steps gamma_k = scale / (k + shift), k >= start_index. This
// family has divergent step sums and convergent squared sums, which is what
// every scheme here assumes.
struct StepSchedule {
  enum class Kind { harmonic, shifted_scaled };
  Kind kind = Kind::harmonic;
  double scale = 1.0;
  double shift = 0.0;
  long start_index = 1;

  double gamma(long k) const { return scale / (static_cast<double>(k) + shift); }
};

StepSchedule make_schedule(StepSchedule::Kind kind, double scale, double shift, long start_index);

// Per-iteration sample counts: constant, or a nondecreasing unbounded growth
// function of k.
struct SampleSchedule {
  enum class Kind { constant, growing };
  Kind kind = Kind::constant;
  long n0 = 1;
  std::function<long(long)> growth;  // growing only

  long samples(long k) const;

  static SampleSchedule constant(long n0);
  // N_k = n0 + floor(rate * k^power)
  static SampleSchedule growing_power(long n0, double rate, double power);
};

struct PenaltyRamp {
  double c_init = 0.0;
  double c_target = 0.0;
  long ramp_iters = 1;  // c reaches c_target after this many iterations
};

enum class Algorithm { projected, penalty, multiplier };

struct SolverConfig {
  Algorithm algorithm = Algorithm::projected;
  StepSchedule steps;
  SampleSchedule samples;
  long iterations = 0;  // K
  double penalty_c = 0.0;
  std::optional<PenaltyRamp> penalty_ramp;
  std::optional<Box> safeguard;             // clamp on h after each update
  std::optional<Box> multiplier_safeguard;  // clamp on stacked (lambda, mu)
  Eigen::VectorXd h0;
  Eigen::VectorXd lambda0;  // defaults to zeros
  Eigen::VectorXd mu0;      // defaults to zeros
  std::uint64_t seed = 0;
  long downsample_stride = 1;
};

// State after completing iteration k. gamma/n_samples are the values used by
// that iteration and f_hat_norm is ||F_hat(h^k)|| measured before the step.
struct TraceRecord {
  long k = 0;
  Eigen::VectorXd h;
  std::optional<Eigen::VectorXd> lambda;
  std::optional<Eigen::VectorXd> mu;
  double gamma = 0.0;
  long n_samples = 0;
  double f_hat_norm = 0.0;
  std::optional<double> error_to_reference;
};

struct IterateTrace {
  std::vector<TraceRecord> records;  // k strictly increasing; last record is final
  long downsample_stride = 1;

  const TraceRecord& final_record() const;
};

// diverged = the iterate norm guard (1e9) tripped or a non-finite value
// appeared; the trace holds everything recorded up to and including the
// offending iteration.
struct SolveResult {
  IterateTrace trace;
  bool diverged = false;
  std::string message;
};

// h^{k+1} = proj_H( h^k - gamma_k F_hat^{N_k}(h^k) ). h0 is projected onto H
// first; every traced iterate lies in H.
SolveResult run_projected(const ViProblem& problem, const SolverConfig& config,
                          const std::optional<Eigen::VectorXd>& reference = std::nullopt);

// h^{k+1} = h^k - gamma_k ( F_hat^{N_k}(h^k) + c_k (h^k - proj_H(h^k)) ).
// Iterates may leave H; c_k follows the ramp when configured, otherwise
// penalty_c. The safeguard box, when set, clamps after each update.
SolveResult run_penalty(const ViProblem& problem, const SolverConfig& config,
                        const std::optional<Eigen::VectorXd>& reference = std::nullopt);

// Primal-dual iteration on (h, lambda, mu); no projection of h onto H:
//   h^{k+1}      = h^k - gamma_k ( F_hat^{N_k}(h^k) + A_ineq^T lambda^k + A_eq^T mu^k )
//   lambda^{k+1} = max(0, lambda^k + gamma_k q(h^k))
//   mu^{k+1}     = mu^k + gamma_k l(h^k)
SolveResult run_multiplier(const ViProblem& problem, const SolverConfig& config,
                           const std::optional<Eigen::VectorXd>& reference = std::nullopt);

// Dispatch on config.algorithm.
SolveResult run_solver(const ViProblem& problem, const SolverConfig& config,
                       const std::optional<Eigen::VectorXd>& reference = std::nullopt);

// Penalty constant in effect at iteration k (ramp-aware).
double penalty_constant_at(const SolverConfig& config, long k);

}  // namespace cvarvi

#endif
