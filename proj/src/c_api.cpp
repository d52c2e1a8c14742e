#include "cvarvi.h"

#include <cstring>
#include <exception>
#include <optional>
#include <string>
#include <utility>

#include "cvarvi/cvar.hpp"
#include "cvarvi/errors.hpp"
#include "cvarvi/rng.hpp"
#include "cvarvi/routing_game.hpp"
#include "cvarvi/sample_complexity.hpp"
#include "cvarvi/solvers.hpp"
#include "cvarvi/vi_problem.hpp"

struct cvarvi_problem {
  cvarvi::ViProblem problem;
  std::optional<cvarvi::RoutingNetwork> network;
  std::optional<Eigen::VectorXd> reference;
  std::optional<Eigen::VectorXd> initial_point;
};

struct cvarvi_trace {
  cvarvi::IterateTrace trace;
  int32_t n = 0;
  int32_t s = 0;
  int32_t t = 0;
  bool has_error = false;
};

namespace {

thread_local std::string g_last_error;

void set_error(const char* what) { g_last_error = what ? what : "unknown error"; }

template <typename Fn>
cvarvi_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const cvarvi::InvalidInput& e) {
    set_error(e.what());
    return CVARVI_INVALID_ARGUMENT;
  } catch (const cvarvi::Unsupported& e) {
    set_error(e.what());
    return CVARVI_UNSUPPORTED;
  } catch (const cvarvi::InfeasibleSet& e) {
    set_error(e.what());
    return CVARVI_INFEASIBLE;
  } catch (const cvarvi::ModelError& e) {
    set_error(e.what());
    return CVARVI_MODEL_ERROR;
  } catch (const std::exception& e) {
    set_error(e.what());
    return CVARVI_INTERNAL_ERROR;
  } catch (...) {
    set_error("unknown error");
    return CVARVI_INTERNAL_ERROR;
  }
}

cvarvi_status require(bool ok, const char* message) {
  if (ok) return CVARVI_OK;
  set_error(message);
  return CVARVI_INVALID_ARGUMENT;
}

Eigen::Map<const Eigen::VectorXd> map_vec(const double* data, int size) {
  return Eigen::Map<const Eigen::VectorXd>(data, size);
}

}  // namespace

extern "C" {

const char* cvarvi_last_error(void) { return g_last_error.c_str(); }

uint64_t cvarvi_derive_seed(uint64_t seed, uint64_t index) {
  return cvarvi::derive_seed(seed, index);
}

cvarvi_status cvarvi_empirical_cvar(const double* samples, size_t count, double alpha,
                                    double* value, double* minimizer_t) {
  if (require(samples != nullptr && count > 0, "empirical_cvar: no samples") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const cvarvi::CvarEstimate est =
        cvarvi::empirical_cvar({samples, count}, cvarvi::RiskLevel(alpha));
    if (value) *value = est.value;
    if (minimizer_t) *minimizer_t = est.minimizer_t;
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_exact_cvar_affine_uniform(double offset, double noise_gain, double alpha,
                                               double* value) {
  if (require(value != nullptr, "null output pointer") != CVARVI_OK) return CVARVI_INVALID_ARGUMENT;
  return guarded([&] {
    *value = cvarvi::exact_cvar_affine_uniform(offset, noise_gain, cvarvi::RiskLevel(alpha));
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_bias_bound(int32_t n, double alpha, double z1, double z2, int64_t n_samples,
                                double* out) {
  if (require(out != nullptr, "null output pointer") != CVARVI_OK) return CVARVI_INVALID_ARGUMENT;
  return guarded([&] {
    *out = cvarvi::bias_bound(n, cvarvi::RiskLevel(alpha), z1, z2, static_cast<long>(n_samples));
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_concentration_tail(double alpha, double z1, double z2, int64_t n_samples,
                                        double z, double* out) {
  if (require(out != nullptr, "null output pointer") != CVARVI_OK) return CVARVI_INVALID_ARGUMENT;
  return guarded([&] {
    *out = cvarvi::concentration_tail(cvarvi::RiskLevel(alpha), z1, z2,
                                      static_cast<long>(n_samples), z);
    return CVARVI_OK;
  });
}

namespace {

cvarvi::ComplexityInputs to_inputs(const cvarvi_complexity_inputs& in) {
  cvarvi::ComplexityInputs out{in.n, cvarvi::RiskLevel(in.alpha), in.z1, in.z2,
                               in.c_f, in.h_plus, in.c_d, in.epsilon};
  return out;
}

cvarvi::BoundVariant to_variant(cvarvi_variant v) {
  if (v == CVARVI_VARIANT_PENALTY) return cvarvi::BoundVariant::penalty;
  if (v == CVARVI_VARIANT_MULTIPLIER) return cvarvi::BoundVariant::multiplier;
  throw cvarvi::InvalidInput("unknown bound variant");
}

}  // namespace

cvarvi_status cvarvi_required_bias(cvarvi_variant variant, const cvarvi_complexity_inputs* inputs,
                                   double* out) {
  if (require(inputs != nullptr && out != nullptr, "null pointer argument") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *out = cvarvi::required_bias(to_variant(variant), to_inputs(*inputs));
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_required_samples(cvarvi_variant variant,
                                      const cvarvi_complexity_inputs* inputs, int64_t* out) {
  if (require(inputs != nullptr && out != nullptr, "null pointer argument") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *out = cvarvi::required_samples(to_variant(variant), to_inputs(*inputs));
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_problem_benchmark(cvarvi_problem** out) {
  if (require(out != nullptr, "null output pointer") != CVARVI_OK) return CVARVI_INVALID_ARGUMENT;
  return guarded([&] {
    cvarvi::BenchmarkInstance bench = cvarvi::benchmark_instance();
    auto* handle = new cvarvi_problem{
        cvarvi::to_vi_problem(bench.network, bench.alpha),
        std::move(bench.network),
        std::move(bench.reference),
        std::move(bench.initial_point),
    };
    *out = handle;
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_problem_from_network_file(const char* path, double alpha,
                                               cvarvi_problem** out) {
  if (require(path != nullptr && out != nullptr, "null pointer argument") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&] {
    cvarvi::RoutingNetwork net = cvarvi::load_network_file(path);
    auto* handle = new cvarvi_problem{
        cvarvi::to_vi_problem(net, cvarvi::RiskLevel(alpha)),
        std::move(net),
        std::nullopt,
        std::nullopt,
    };
    *out = handle;
    return CVARVI_OK;
  });
}

void cvarvi_problem_free(cvarvi_problem* problem) { delete problem; }

int32_t cvarvi_problem_dimension(const cvarvi_problem* p) {
  return p ? p->problem.set.dimension() : 0;
}

int32_t cvarvi_problem_num_inequalities(const cvarvi_problem* p) {
  return p ? p->problem.set.num_inequalities() : 0;
}

int32_t cvarvi_problem_num_equalities(const cvarvi_problem* p) {
  return p ? p->problem.set.num_equalities() : 0;
}

int32_t cvarvi_problem_num_od_pairs(const cvarvi_problem* p) {
  return p && p->network ? static_cast<int32_t>(p->network->od_pairs.size()) : 0;
}

double cvarvi_problem_alpha(const cvarvi_problem* p) {
  return p ? p->problem.alpha.alpha : 0.0;
}

int32_t cvarvi_problem_has_exact_map(const cvarvi_problem* p) {
  return p && p->problem.model.exact_cvar_map ? 1 : 0;
}

int32_t cvarvi_problem_has_reference(const cvarvi_problem* p) {
  return p && p->reference ? 1 : 0;
}

cvarvi_status cvarvi_problem_reference(const cvarvi_problem* p, double* h_out) {
  if (require(p != nullptr && h_out != nullptr, "null pointer argument") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&]() -> cvarvi_status {
    if (!p->reference) throw cvarvi::Unsupported("problem has no reference solution");
    Eigen::VectorXd::Map(h_out, p->reference->size()) = *p->reference;
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_problem_initial_point(const cvarvi_problem* p, double* h_out) {
  if (require(p != nullptr && h_out != nullptr, "null pointer argument") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&]() -> cvarvi_status {
    if (p->initial_point) {
      Eigen::VectorXd::Map(h_out, p->initial_point->size()) = *p->initial_point;
    } else {
      // reasonable default: project the origin onto the set
      Eigen::VectorXd h0 =
          p->problem.set.project(Eigen::VectorXd::Zero(p->problem.set.dimension()));
      Eigen::VectorXd::Map(h_out, h0.size()) = h0;
    }
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_problem_project(const cvarvi_problem* p, const double* x, double* out) {
  if (require(p != nullptr && x != nullptr && out != nullptr, "null pointer argument") !=
      CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const int n = p->problem.set.dimension();
    Eigen::VectorXd y = p->problem.set.project(map_vec(x, n));
    Eigen::VectorXd::Map(out, n) = y;
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_problem_exact_map(const cvarvi_problem* p, const double* h, double* f_out) {
  if (require(p != nullptr && h != nullptr && f_out != nullptr, "null pointer argument") !=
      CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const int n = p->problem.set.dimension();
    Eigen::VectorXd f = cvarvi::exact_map(p->problem, map_vec(h, n));
    Eigen::VectorXd::Map(f_out, n) = f;
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_problem_empirical_map(const cvarvi_problem* p, const double* h,
                                           int64_t n_samples, uint64_t seed, double* f_out) {
  if (require(p != nullptr && h != nullptr && f_out != nullptr, "null pointer argument") !=
      CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const int n = p->problem.set.dimension();
    cvarvi::Rng rng(seed);
    cvarvi::EmpiricalMapWorkspace ws;
    Eigen::VectorXd f = cvarvi::empirical_map_estimate(p->problem, map_vec(h, n),
                                                       static_cast<long>(n_samples), rng, ws);
    Eigen::VectorXd::Map(f_out, n) = f;
    return CVARVI_OK;
  });
}

void cvarvi_solve_options_init(cvarvi_solve_options* options) {
  if (!options) return;
  std::memset(options, 0, sizeof(*options));
  options->algorithm = CVARVI_ALG_PROJECTED;
  options->step_scale = 1.0;
  options->step_shift = 0.0;
  options->step_start_index = 1;
  options->sample_n0 = 1;
  options->sample_growing = 0;
  options->sample_rate = 1.0;
  options->sample_power = 1.0;
  options->iterations = 1000;
  options->penalty_c = 0.0;
  options->track_reference = 1;
  options->seed = 1;
  options->downsample_stride = 1;
}

namespace {

cvarvi::SolverConfig build_config(const cvarvi_problem& p, const cvarvi_solve_options& o) {
  cvarvi::SolverConfig config;
  switch (o.algorithm) {
    case CVARVI_ALG_PROJECTED:
      config.algorithm = cvarvi::Algorithm::projected;
      break;
    case CVARVI_ALG_PENALTY:
      config.algorithm = cvarvi::Algorithm::penalty;
      break;
    case CVARVI_ALG_MULTIPLIER:
      config.algorithm = cvarvi::Algorithm::multiplier;
      break;
    default:
      throw cvarvi::InvalidInput("solve options: unknown algorithm");
  }
  config.steps = cvarvi::make_schedule(o.step_shift == 0.0
                                           ? cvarvi::StepSchedule::Kind::harmonic
                                           : cvarvi::StepSchedule::Kind::shifted_scaled,
                                       o.step_scale, o.step_shift, o.step_start_index);
  config.samples = o.sample_growing
                       ? cvarvi::SampleSchedule::growing_power(o.sample_n0, o.sample_rate,
                                                               o.sample_power)
                       : cvarvi::SampleSchedule::constant(o.sample_n0);
  config.iterations = static_cast<long>(o.iterations);
  config.penalty_c = o.penalty_c;
  if (o.has_penalty_ramp) {
    config.penalty_ramp =
        cvarvi::PenaltyRamp{o.ramp_c_init, o.ramp_c_target, static_cast<long>(o.ramp_iters)};
  }

  const int n = p.problem.set.dimension();
  const int s = p.problem.set.num_inequalities();
  const int t = p.problem.set.num_equalities();
  if ((o.safeguard_lower == nullptr) != (o.safeguard_upper == nullptr)) {
    throw cvarvi::InvalidInput("solve options: safeguard needs both bounds");
  }
  if (o.safeguard_lower) {
    config.safeguard = cvarvi::Box(map_vec(o.safeguard_lower, n), map_vec(o.safeguard_upper, n));
  }
  if ((o.multiplier_safeguard_lower == nullptr) != (o.multiplier_safeguard_upper == nullptr)) {
    throw cvarvi::InvalidInput("solve options: multiplier safeguard needs both bounds");
  }
  if (o.multiplier_safeguard_lower) {
    config.multiplier_safeguard = cvarvi::Box(map_vec(o.multiplier_safeguard_lower, s + t),
                                              map_vec(o.multiplier_safeguard_upper, s + t));
  }

  if (o.h0) {
    config.h0 = map_vec(o.h0, n);
  } else if (p.initial_point) {
    config.h0 = *p.initial_point;
  } else {
    config.h0 = p.problem.set.project(Eigen::VectorXd::Zero(n));
  }
  if (o.lambda0) config.lambda0 = map_vec(o.lambda0, s);
  if (o.mu0) config.mu0 = map_vec(o.mu0, t);
  config.seed = o.seed;
  config.downsample_stride = static_cast<long>(o.downsample_stride);
  return config;
}

}  // namespace

cvarvi_status cvarvi_solve(const cvarvi_problem* problem, const cvarvi_solve_options* options,
                           cvarvi_trace** out) {
  if (require(problem != nullptr && options != nullptr && out != nullptr,
              "null pointer argument") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&]() -> cvarvi_status {
    const cvarvi::SolverConfig config = build_config(*problem, *options);

    std::optional<Eigen::VectorXd> reference;
    if (options->track_reference) {
      if (options->reference) {
        reference = map_vec(options->reference, problem->problem.set.dimension());
      } else if (problem->reference) {
        reference = *problem->reference;
      }
    }

    cvarvi::SolveResult result = cvarvi::run_solver(problem->problem, config, reference);

    auto* trace = new cvarvi_trace;
    trace->n = problem->problem.set.dimension();
    const bool has_multipliers = config.algorithm == cvarvi::Algorithm::multiplier;
    trace->s = has_multipliers ? problem->problem.set.num_inequalities() : 0;
    trace->t = has_multipliers ? problem->problem.set.num_equalities() : 0;
    trace->has_error = reference.has_value();
    trace->trace = std::move(result.trace);
    *out = trace;

    if (result.diverged) {
      set_error(result.message.c_str());
      return CVARVI_DIVERGED;
    }
    return CVARVI_OK;
  });
}

void cvarvi_trace_free(cvarvi_trace* trace) { delete trace; }

size_t cvarvi_trace_size(const cvarvi_trace* trace) {
  return trace ? trace->trace.records.size() : 0;
}

int32_t cvarvi_trace_dimension(const cvarvi_trace* trace) { return trace ? trace->n : 0; }

void cvarvi_trace_multiplier_dims(const cvarvi_trace* trace, int32_t* s, int32_t* t) {
  if (s) *s = trace ? trace->s : 0;
  if (t) *t = trace ? trace->t : 0;
}

int32_t cvarvi_trace_has_error(const cvarvi_trace* trace) {
  return trace && trace->has_error ? 1 : 0;
}

cvarvi_status cvarvi_trace_row(const cvarvi_trace* trace, size_t row, int64_t* k, double* gamma,
                               int64_t* n_samples, double* h, double* lambda, double* mu,
                               double* f_hat_norm, double* error_to_reference) {
  if (require(trace != nullptr, "null trace") != CVARVI_OK) return CVARVI_INVALID_ARGUMENT;
  if (require(row < trace->trace.records.size(), "trace row out of range") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  const cvarvi::TraceRecord& rec = trace->trace.records[row];
  if (k) *k = rec.k;
  if (gamma) *gamma = rec.gamma;
  if (n_samples) *n_samples = rec.n_samples;
  if (h) Eigen::VectorXd::Map(h, rec.h.size()) = rec.h;
  if (lambda && rec.lambda) Eigen::VectorXd::Map(lambda, rec.lambda->size()) = *rec.lambda;
  if (mu && rec.mu && rec.mu->size() > 0) Eigen::VectorXd::Map(mu, rec.mu->size()) = *rec.mu;
  if (f_hat_norm) *f_hat_norm = rec.f_hat_norm;
  if (error_to_reference) {
    *error_to_reference = rec.error_to_reference ? *rec.error_to_reference : -1.0;
  }
  return CVARVI_OK;
}

cvarvi_status cvarvi_trace_final(const cvarvi_trace* trace, int64_t* k, double* h,
                                 double* error_to_reference) {
  if (require(trace != nullptr && !trace->trace.records.empty(), "empty trace") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return cvarvi_trace_row(trace, trace->trace.records.size() - 1, k, nullptr, nullptr, h, nullptr,
                          nullptr, nullptr, error_to_reference);
}

cvarvi_status cvarvi_verify_cwe(const cvarvi_problem* problem, const double* h,
                                double used_path_tol, double cost_gap_tol,
                                int64_t empirical_samples, uint64_t seed,
                                cvarvi_cwe_report* report, double* demand_residual) {
  if (require(problem != nullptr && h != nullptr && report != nullptr,
              "null pointer argument") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&]() -> cvarvi_status {
    if (!problem->network) {
      throw cvarvi::Unsupported("equilibrium check needs a routing-game problem");
    }
    const int n = problem->problem.set.dimension();
    cvarvi::CweTolerances tols{used_path_tol, cost_gap_tol, 0.0};
    cvarvi::CweReport r =
        empirical_samples > 0
            ? cvarvi::verify_cwe_empirical(*problem->network, problem->problem.alpha,
                                           map_vec(h, n), tols,
                                           static_cast<long>(empirical_samples), seed)
            : cvarvi::verify_cwe(*problem->network, problem->problem.alpha, map_vec(h, n), tols);
    report->is_equilibrium = r.is_equilibrium ? 1 : 0;
    report->max_cost_gap = r.max_cost_gap;
    report->demand_residual_inf =
        r.demand_residual.size() > 0 ? r.demand_residual.maxCoeff() : 0.0;
    report->used_path_tol = r.used_path_tol;
    report->cost_gap_tol = r.cost_gap_tol;
    report->demand_tol = r.demand_tol;
    if (demand_residual) {
      Eigen::VectorXd::Map(demand_residual, r.demand_residual.size()) = r.demand_residual;
    }
    return CVARVI_OK;
  });
}

cvarvi_status cvarvi_kkt_residuals(const cvarvi_problem* problem, const double* h,
                                   double* stationarity, double* primal, double* complementarity) {
  if (require(problem != nullptr && h != nullptr, "null pointer argument") != CVARVI_OK) {
    return CVARVI_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const int n = problem->problem.set.dimension();
    const Eigen::VectorXd hv = map_vec(h, n);
    Eigen::VectorXd f;
    if (problem->problem.model.exact_cvar_map) {
      f = cvarvi::exact_map(problem->problem, hv);
    } else {
      cvarvi::Rng rng(cvarvi::derive_seed(0x5eed, 0));
      cvarvi::EmpiricalMapWorkspace ws;
      f = cvarvi::empirical_map_estimate(problem->problem, hv, 10000, rng, ws);
    }
    const double tol = cvarvi::default_active_tol(problem->problem.set);
    auto [lambda, mu] = cvarvi::recover_multipliers(problem->problem.set, f, hv, tol);
    const cvarvi::KktPoint point = cvarvi::kkt_residuals(problem->problem.set, f, hv, lambda, mu);
    if (stationarity) *stationarity = point.stationarity_residual;
    if (primal) *primal = point.primal_residual;
    if (complementarity) *complementarity = point.complementarity_residual;
    return CVARVI_OK;
  });
}

}  // extern "C"
