#include "cvarvi/solvers.hpp"

#include <cmath>

#include "cvarvi/errors.hpp"
#include "cvarvi/rng.hpp"

namespace cvarvi {

namespace {
constexpr double kDivergenceNorm = 1e9;
}

StepSchedule make_schedule(StepSchedule::Kind kind, double scale, double shift, long start_index) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidInput("step schedule: scale must be positive");
  }
  if (!(shift >= 0.0) || !std::isfinite(shift)) {
    throw InvalidInput("step schedule: shift must be nonnegative");
  }
  if (start_index < 1) throw InvalidInput("step schedule: start index must be >= 1");
  return StepSchedule{kind, scale, shift, start_index};
}

long SampleSchedule::samples(long k) const {
  if (kind == Kind::constant) return n0;
  if (!growth) throw InvalidInput("sample schedule: growing kind needs a growth function");
  const long g = growth(k);
  return g < 1 ? 1 : g;
}

SampleSchedule SampleSchedule::constant(long n0) {
  if (n0 < 1) throw InvalidInput("sample schedule: N_k must be >= 1");
  SampleSchedule s;
  s.kind = Kind::constant;
  s.n0 = n0;
  return s;
}

SampleSchedule SampleSchedule::growing_power(long n0, double rate, double power) {
  if (n0 < 1) throw InvalidInput("sample schedule: N_k must be >= 1");
  if (!(rate > 0.0) || !(power > 0.0)) {
    throw InvalidInput("sample schedule: growth rate and power must be positive");
  }
  SampleSchedule s;
  s.kind = Kind::growing;
  s.n0 = n0;
  s.growth = [n0, rate, power](long k) {
    return n0 + static_cast<long>(std::floor(rate * std::pow(static_cast<double>(k), power)));
  };
  return s;
}

const TraceRecord& IterateTrace::final_record() const {
  if (records.empty()) throw InvalidInput("trace is empty");
  return records.back();
}

double penalty_constant_at(const SolverConfig& config, long k) {
  if (config.penalty_ramp) {
    const PenaltyRamp& r = *config.penalty_ramp;
    const double progress =
        std::min(1.0, static_cast<double>(k - 1) / static_cast<double>(r.ramp_iters));
    return r.c_init + (r.c_target - r.c_init) * progress;
  }
  return config.penalty_c;
}

namespace {

struct RunContext {
  const ViProblem& problem;
  const SolverConfig& config;
  std::optional<Eigen::VectorXd> reference;
  IterateTrace trace;
  bool diverged = false;
  std::string message;

  bool record_due(long k) const {
    const long stride = config.downsample_stride;
    return k % stride == 0 || k == config.iterations;
  }

  void record(long k, const Eigen::VectorXd& h, const Eigen::VectorXd* lambda,
              const Eigen::VectorXd* mu, double gamma, long n_samples, double f_hat_norm) {
    TraceRecord rec;
    rec.k = k;
    rec.h = h;
    if (lambda) rec.lambda = *lambda;
    if (mu) rec.mu = *mu;
    rec.gamma = gamma;
    rec.n_samples = n_samples;
    rec.f_hat_norm = f_hat_norm;
    if (reference) rec.error_to_reference = (h - *reference).norm();
    trace.records.push_back(std::move(rec));
  }

  // true when the run must stop
  bool guard(long k, const Eigen::VectorXd& h) {
    const bool finite = h.allFinite();
    if (finite && h.norm() <= kDivergenceNorm) return false;
    diverged = true;
    message = finite ? "iterate norm exceeded 1e9 at iteration " + std::to_string(k)
                     : "non-finite iterate at iteration " + std::to_string(k);
    return true;
  }

  SolveResult result() && {
    return SolveResult{std::move(trace), diverged, std::move(message)};
  }
};

void validate_common(const ViProblem& problem, const SolverConfig& config, Algorithm expected) {
  if (config.algorithm != expected) {
    throw InvalidInput("solver config: algorithm does not match the entry point");
  }
  if (config.iterations < 1) throw InvalidInput("solver config: iterations must be >= 1");
  if (config.downsample_stride < 1) {
    throw InvalidInput("solver config: downsample stride must be >= 1");
  }
  if (config.h0.size() != problem.set.dimension()) {
    throw InvalidInput("solver config: h0 dimension mismatch");
  }
  if (!config.h0.allFinite()) throw InvalidInput("solver config: h0 must be finite");
  if (!(config.steps.scale > 0.0) || config.steps.shift < 0.0 || config.steps.start_index < 1) {
    throw InvalidInput("solver config: invalid step schedule");
  }
  if (config.safeguard && config.safeguard->lower.size() != problem.set.dimension()) {
    throw InvalidInput("solver config: safeguard box dimension mismatch");
  }
}

Eigen::VectorXd initial_multiplier(const Eigen::VectorXd& given, int size, const char* what) {
  if (given.size() == 0) return Eigen::VectorXd::Zero(size);
  if (given.size() != size) {
    throw InvalidInput(std::string("solver config: ") + what + " dimension mismatch");
  }
  return given;
}

}  // namespace

SolveResult run_projected(const ViProblem& problem, const SolverConfig& config,
                          const std::optional<Eigen::VectorXd>& reference) {
  validate_common(problem, config, Algorithm::projected);

  RunContext ctx{problem, config, reference, {}, false, {}};
  ctx.trace.downsample_stride = config.downsample_stride;

  Eigen::VectorXd h = problem.set.project(config.h0);
  EmpiricalMapWorkspace ws;
  const long k0 = config.steps.start_index;
  for (long k = k0; k < k0 + config.iterations; ++k) {
    const long step_number = k - k0 + 1;  // 1..K, used for stride and stream indexing
    const double gamma = config.steps.gamma(k);
    const long n_k = config.samples.samples(k);
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(step_number)));
    const Eigen::VectorXd f_hat = empirical_map_estimate(problem, h, n_k, rng, ws);
    h = problem.set.project(h - gamma * f_hat);
    const bool stop = ctx.guard(step_number, h);
    if (stop || ctx.record_due(step_number)) {
      ctx.record(step_number, h, nullptr, nullptr, gamma, n_k, f_hat.norm());
    }
    if (stop) break;
  }
  return std::move(ctx).result();
}

SolveResult run_penalty(const ViProblem& problem, const SolverConfig& config,
                        const std::optional<Eigen::VectorXd>& reference) {
  validate_common(problem, config, Algorithm::penalty);
  if (config.penalty_ramp) {
    const PenaltyRamp& r = *config.penalty_ramp;
    if (!(r.c_init > 0.0) || !(r.c_target > 0.0) || r.ramp_iters < 1) {
      throw InvalidInput("solver config: penalty ramp needs positive constants and iterations");
    }
  } else if (!(config.penalty_c > 0.0)) {
    throw InvalidInput("solver config: penalty needs penalty_c > 0 or a ramp");
  }

  RunContext ctx{problem, config, reference, {}, false, {}};
  ctx.trace.downsample_stride = config.downsample_stride;

  Eigen::VectorXd h = config.h0;
  EmpiricalMapWorkspace ws;
  const long k0 = config.steps.start_index;
  for (long k = k0; k < k0 + config.iterations; ++k) {
    const long step_number = k - k0 + 1;
    const double gamma = config.steps.gamma(k);
    const long n_k = config.samples.samples(k);
    const double c = penalty_constant_at(config, step_number);
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(step_number)));
    const Eigen::VectorXd f_hat = empirical_map_estimate(problem, h, n_k, rng, ws);
    h -= gamma * (f_hat + c * (h - problem.set.project(h)));
    if (config.safeguard) h = config.safeguard->clamp(h);
    const bool stop = ctx.guard(step_number, h);
    if (stop || ctx.record_due(step_number)) {
      ctx.record(step_number, h, nullptr, nullptr, gamma, n_k, f_hat.norm());
    }
    if (stop) break;
  }
  return std::move(ctx).result();
}

SolveResult run_multiplier(const ViProblem& problem, const SolverConfig& config,
                           const std::optional<Eigen::VectorXd>& reference) {
  validate_common(problem, config, Algorithm::multiplier);
  const int s = problem.set.num_inequalities();
  const int t = problem.set.num_equalities();
  Eigen::VectorXd lambda = initial_multiplier(config.lambda0, s, "lambda0");
  Eigen::VectorXd mu = initial_multiplier(config.mu0, t, "mu0");
  if ((lambda.array() < 0.0).any()) {
    throw InvalidInput("solver config: lambda0 must be nonnegative");
  }
  if (config.multiplier_safeguard) {
    if (config.multiplier_safeguard->lower.size() != s + t) {
      throw InvalidInput("solver config: multiplier safeguard must have dimension s + t");
    }
    if ((config.multiplier_safeguard->lower.head(s).array() < 0.0).any()) {
      throw InvalidInput("solver config: multiplier safeguard must keep lambda nonnegative");
    }
  }

  RunContext ctx{problem, config, reference, {}, false, {}};
  ctx.trace.downsample_stride = config.downsample_stride;

  Eigen::VectorXd h = config.h0;
  EmpiricalMapWorkspace ws;
  const long k0 = config.steps.start_index;
  for (long k = k0; k < k0 + config.iterations; ++k) {
    const long step_number = k - k0 + 1;
    const double gamma = config.steps.gamma(k);
    const long n_k = config.samples.samples(k);
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(step_number)));
    const Eigen::VectorXd f_hat = empirical_map_estimate(problem, h, n_k, rng, ws);

    const Eigen::VectorXd q = problem.set.ineq_values(h);
    const Eigen::VectorXd l = problem.set.eq_values(h);
    h -= gamma * (f_hat + problem.set.ineq_matrix().transpose() * lambda +
                  problem.set.eq_matrix().transpose() * mu);
    lambda = (lambda + gamma * q).cwiseMax(0.0);
    mu += gamma * l;

    if (config.safeguard) h = config.safeguard->clamp(h);
    if (config.multiplier_safeguard) {
      Eigen::VectorXd stacked(s + t);
      stacked << lambda, mu;
      stacked = config.multiplier_safeguard->clamp(stacked);
      lambda = stacked.head(s);
      mu = stacked.tail(t);
    }

    bool stop = ctx.guard(step_number, h);
    if (!stop && (!lambda.allFinite() || !mu.allFinite())) {
      ctx.diverged = true;
      ctx.message = "non-finite multiplier at iteration " + std::to_string(step_number);
      stop = true;
    }
    if (stop || ctx.record_due(step_number)) {
      ctx.record(step_number, h, &lambda, &mu, gamma, n_k, f_hat.norm());
    }
    if (stop) break;
  }
  return std::move(ctx).result();
}

SolveResult run_solver(const ViProblem& problem, const SolverConfig& config,
                       const std::optional<Eigen::VectorXd>& reference) {
  switch (config.algorithm) {
    case Algorithm::projected:
      return run_projected(problem, config, reference);
    case Algorithm::penalty:
      return run_penalty(problem, config, reference);
    case Algorithm::multiplier:
      return run_multiplier(problem, config, reference);
  }
  throw InvalidInput("solver config: unknown algorithm");
}

}  // namespace cvarvi
