// Command-line front end: single solves, multi-seed experiments, sample-size
// bounds, and equilibrium verification, all on top of the C API.
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cvarvi.h"
#include "experiment_config.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitNotEquilibrium = 4;

struct ProblemHandle {
  cvarvi_problem* p = nullptr;
  ~ProblemHandle() { cvarvi_problem_free(p); }
};

struct TraceHandle {
  cvarvi_trace* t = nullptr;
  ~TraceHandle() { cvarvi_trace_free(t); }
};

// 17 significant digits round-trip doubles exactly
std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::string join_path(const std::string& dir, const std::string& file) {
  if (file.empty() || file.front() == '/' || dir.empty() || dir == ".") return file;
  return dir + "/" + file;
}

std::optional<std::uint64_t> env_seed() {
  const char* value = std::getenv("CVARVI_SEED");
  if (!value || !*value) return std::nullopt;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(value, &end, 10);
  if (end == value || *end != '\0') return std::nullopt;
  return static_cast<std::uint64_t>(parsed);
}

// priority: command-line flag, config file, CVARVI_SEED, then 1
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag,
                           const std::optional<std::uint64_t>& config_value) {
  if (flag) return *flag;
  if (config_value) return *config_value;
  if (const auto env = env_seed()) return *env;
  return 1;
}

int open_problem(const cli::ExperimentConfig& config, ProblemHandle& handle) {
  const cvarvi_status status =
      config.problem.builtin_benchmark
          ? cvarvi_problem_benchmark(&handle.p)
          : cvarvi_problem_from_network_file(config.problem.network_path.c_str(),
                                             config.problem.alpha, &handle.p);
  if (status != CVARVI_OK) {
    std::cerr << "error: " << cvarvi_last_error() << "\n";
    return status == CVARVI_IO_ERROR ? kExitConfigError : kExitConfigError;
  }
  return kExitOk;
}

void write_trace_csv(const std::string& path, const cvarvi_trace* trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);

  const int32_t n = cvarvi_trace_dimension(trace);
  int32_t s = 0, t = 0;
  cvarvi_trace_multiplier_dims(trace, &s, &t);
  const bool has_err = cvarvi_trace_has_error(trace) != 0;

  out << "k,gamma,N";
  for (int32_t i = 1; i <= n; ++i) out << ",h_" << i;
  for (int32_t i = 1; i <= s; ++i) out << ",lambda_" << i;
  for (int32_t i = 1; i <= t; ++i) out << ",mu_" << i;
  if (has_err) out << ",err";
  out << "\n";

  std::vector<double> h(static_cast<std::size_t>(n));
  std::vector<double> lambda(static_cast<std::size_t>(s));
  std::vector<double> mu(static_cast<std::size_t>(t));
  const std::size_t rows = cvarvi_trace_size(trace);
  for (std::size_t row = 0; row < rows; ++row) {
    int64_t k = 0, n_samples = 0;
    double gamma = 0.0, err = 0.0;
    cvarvi_trace_row(trace, row, &k, &gamma, &n_samples, h.data(),
                     s > 0 ? lambda.data() : nullptr, t > 0 ? mu.data() : nullptr, nullptr,
                     has_err ? &err : nullptr);
    out << k << ',' << format_double(gamma) << ',' << n_samples;
    for (double v : h) out << ',' << format_double(v);
    for (double v : lambda) out << ',' << format_double(v);
    for (double v : mu) out << ',' << format_double(v);
    if (has_err) out << ',' << format_double(err);
    out << "\n";
  }
}

void print_kkt(const cvarvi_problem* problem, const double* h) {
  double stationarity = 0.0, primal = 0.0, complementarity = 0.0;
  if (cvarvi_kkt_residuals(problem, h, &stationarity, &primal, &complementarity) != CVARVI_OK) {
    std::cout << "kkt residuals: unavailable (" << cvarvi_last_error() << ")\n";
    return;
  }
  std::cout << "kkt stationarity residual:    " << stationarity << "\n"
            << "kkt primal residual:          " << primal << "\n"
            << "kkt complementarity residual: " << complementarity << "\n";
}

int cmd_solve(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
              const std::string& out_dir) {
  cli::ExperimentConfig config;
  try {
    config = cli::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  ProblemHandle problem;
  if (const int rc = open_problem(config, problem); rc != kExitOk) return rc;

  cvarvi_solve_options options;
  cvarvi_solve_options_init(&options);
  try {
    cli::apply_solver_settings(config, &options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  options.seed = resolve_seed(seed_flag, config.solver.seed);

  TraceHandle trace;
  const cvarvi_status status = cvarvi_solve(problem.p, &options, &trace.t);
  if (status != CVARVI_OK && status != CVARVI_DIVERGED) {
    std::cerr << "error: " << cvarvi_last_error() << "\n";
    return kExitConfigError;
  }

  const std::string trace_path = join_path(out_dir, config.trace_csv);
  try {
    write_trace_csv(trace_path, trace.t);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  const int32_t n = cvarvi_problem_dimension(problem.p);
  std::vector<double> h(static_cast<std::size_t>(n));
  int64_t final_k = 0;
  double final_err = -1.0;
  cvarvi_trace_final(trace.t, &final_k, h.data(), &final_err);

  if (status == CVARVI_DIVERGED) {
    std::cerr << "divergence: " << cvarvi_last_error() << "\n";
    std::cerr << "partial trace written to " << trace_path << " (" << cvarvi_trace_size(trace.t)
              << " rows)\n";
    return kExitDiverged;
  }

  std::cout << "iterations: " << final_k << "\n";
  std::cout << "final h:";
  for (double v : h) std::cout << ' ' << v;
  std::cout << "\n";
  if (cvarvi_trace_has_error(trace.t)) std::cout << "final error: " << final_err << "\n";
  print_kkt(problem.p, h.data());
  std::cout << "trace written to " << trace_path << "\n";
  return kExitOk;
}

struct ReplicationResult {
  std::uint64_t seed = 0;
  double final_error = -1.0;
  double wall_seconds = 0.0;
  cvarvi_status status = CVARVI_OK;
  std::string message;
};

int cmd_experiment(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
                   const std::string& out_dir, int parallel) {
  cli::ExperimentConfig config;
  try {
    config = cli::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  ProblemHandle problem;
  if (const int rc = open_problem(config, problem); rc != kExitOk) return rc;

  cvarvi_solve_options base_options;
  cvarvi_solve_options_init(&base_options);
  try {
    cli::apply_solver_settings(config, &base_options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  // replications only need the last iterate
  base_options.downsample_stride = base_options.iterations;

  if (!cvarvi_problem_has_reference(problem.p) && config.reference.empty()) {
    std::cerr << "error: experiments need a reference (problem or config) for final errors\n";
    return kExitConfigError;
  }

  const std::uint64_t base_seed = resolve_seed(seed_flag, config.base_seed);
  const int64_t replications = config.replications;
  std::vector<ReplicationResult> results(static_cast<std::size_t>(replications));

  const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(parallel > 0 ? parallel : hardware),
                            static_cast<std::size_t>(replications));

  std::atomic<int64_t> next{0};
  auto worker = [&] {
    for (int64_t r = next.fetch_add(1); r < replications; r = next.fetch_add(1)) {
      ReplicationResult& slot = results[static_cast<std::size_t>(r)];
      cvarvi_solve_options options = base_options;
      options.seed = cvarvi_derive_seed(base_seed, static_cast<std::uint64_t>(r));
      slot.seed = options.seed;
      const auto started = std::chrono::steady_clock::now();
      TraceHandle trace;
      slot.status = cvarvi_solve(problem.p, &options, &trace.t);
      slot.wall_seconds = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - started)
                              .count();
      if (slot.status == CVARVI_OK && trace.t) {
        cvarvi_trace_final(trace.t, nullptr, nullptr, &slot.final_error);
      } else {
        slot.message = cvarvi_last_error();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  for (int64_t r = 0; r < replications; ++r) {
    const ReplicationResult& res = results[static_cast<std::size_t>(r)];
    if (res.status != CVARVI_OK) {
      std::cerr << "replication " << r << " failed: " << res.message << "\n";
      return res.status == CVARVI_DIVERGED ? kExitDiverged : kExitConfigError;
    }
  }

  const std::string summary_path = join_path(out_dir, config.summary_csv);
  {
    std::ofstream out(summary_path);
    if (!out) {
      std::cerr << "error: cannot write " << summary_path << "\n";
      return kExitConfigError;
    }
    out << "replication,seed,final_error,wall_time\n";
    for (int64_t r = 0; r < replications; ++r) {
      const ReplicationResult& res = results[static_cast<std::size_t>(r)];
      // wall time is informational; zeros keep reruns byte-identical
      const double wall = config.record_wall_time ? res.wall_seconds : 0.0;
      out << r << ',' << res.seed << ',' << format_double(res.final_error) << ','
          << format_double(wall) << "\n";
    }
  }

  std::vector<double> errors;
  errors.reserve(static_cast<std::size_t>(replications));
  for (const ReplicationResult& res : results) errors.push_back(res.final_error);
  std::sort(errors.begin(), errors.end());
  const std::string cdf_path = join_path(out_dir, config.cdf_csv);
  {
    std::ofstream out(cdf_path);
    if (!out) {
      std::cerr << "error: cannot write " << cdf_path << "\n";
      return kExitConfigError;
    }
    out << "error_level,fraction_of_runs\n";
    for (std::size_t i = 0; i < errors.size(); ++i) {
      out << format_double(errors[i]) << ','
          << format_double(static_cast<double>(i + 1) / static_cast<double>(errors.size()))
          << "\n";
    }
  }

  const double median = errors[errors.size() / 2];
  std::cout << "replications: " << replications << "\n"
            << "median final error: " << median << "\n"
            << "summary written to " << summary_path << "\n"
            << "cdf written to " << cdf_path << "\n";
  return kExitOk;
}

int cmd_bounds(const std::string& variant_name, const cvarvi_complexity_inputs& inputs) {
  cvarvi_variant variant;
  if (variant_name == "penalty") {
    variant = CVARVI_VARIANT_PENALTY;
  } else if (variant_name == "multiplier") {
    variant = CVARVI_VARIANT_MULTIPLIER;
  } else {
    std::cerr << "error: variant must be penalty or multiplier\n";
    return kExitConfigError;
  }

  double budget = 0.0;
  int64_t n_required = 0;
  if (cvarvi_required_bias(variant, &inputs, &budget) != CVARVI_OK ||
      cvarvi_required_samples(variant, &inputs, &n_required) != CVARVI_OK) {
    std::cerr << "error: " << cvarvi_last_error() << "\n";
    return kExitConfigError;
  }
  double achieved = 0.0;
  if (cvarvi_bias_bound(inputs.n, inputs.alpha, inputs.z1, inputs.z2, n_required, &achieved) !=
      CVARVI_OK) {
    std::cerr << "error: " << cvarvi_last_error() << "\n";
    return kExitConfigError;
  }

  std::cout << "required_bias: " << format_double(budget) << "\n"
            << "required_samples: " << n_required << "\n"
            << "bias_bound_at_required_samples: " << format_double(achieved) << "\n";
  return kExitOk;
}

std::vector<double> read_candidate_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> values;
  std::string token;
  while (std::getline(in, token)) {
    std::stringstream line(token);
    std::string cell;
    while (std::getline(line, cell, ',')) {
      if (cell.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      std::size_t consumed = 0;
      values.push_back(std::stod(cell, &consumed));
    }
  }
  return values;
}

int cmd_verify(const std::string& config_path, const std::string& candidate_path,
               double used_path_tol, double cost_gap_tol, int64_t empirical_samples,
               const std::optional<std::uint64_t>& seed_flag) {
  cli::ExperimentConfig config;
  try {
    config = cli::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  ProblemHandle problem;
  if (const int rc = open_problem(config, problem); rc != kExitOk) return rc;

  std::vector<double> candidate;
  try {
    candidate = read_candidate_csv(candidate_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const int32_t n = cvarvi_problem_dimension(problem.p);
  if (static_cast<int32_t>(candidate.size()) != n) {
    std::cerr << "error: candidate has " << candidate.size() << " entries, expected " << n << "\n";
    return kExitConfigError;
  }

  cvarvi_cwe_report report;
  std::vector<double> demand_residual(
      static_cast<std::size_t>(std::max(1, cvarvi_problem_num_od_pairs(problem.p))));
  const std::uint64_t seed = resolve_seed(seed_flag, config.solver.seed);
  if (cvarvi_verify_cwe(problem.p, candidate.data(), used_path_tol, cost_gap_tol,
                        empirical_samples, seed, &report, demand_residual.data()) != CVARVI_OK) {
    std::cerr << "error: " << cvarvi_last_error() << "\n";
    return kExitConfigError;
  }

  std::cout << "is_equilibrium: " << (report.is_equilibrium ? "true" : "false") << "\n"
            << "max_cost_gap: " << report.max_cost_gap << " (tol " << report.cost_gap_tol << ")\n"
            << "demand_residual_inf: " << report.demand_residual_inf << " (tol "
            << report.demand_tol << ")\n"
            << "demand_residual:";
  for (int32_t w = 0; w < cvarvi_problem_num_od_pairs(problem.p); ++w) {
    std::cout << ' ' << demand_residual[static_cast<std::size_t>(w)];
  }
  std::cout << "\nused_path_tol: " << report.used_path_tol << "\n";
  print_kkt(problem.p, candidate.data());
  return report.is_equilibrium ? kExitOk : kExitNotEquilibrium;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CVaR-based variational inequality solvers"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_flag;
  int parallel = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) {
      cmd->add_option("--config", config_path, "configuration file (JSON)")->required();
    }
    cmd->add_option("--seed", seed_flag, "seed override (highest priority)");
    cmd->add_option("--out-dir", out_dir, "directory for output files");
  };

  CLI::App* solve = app.add_subcommand("solve", "run one solve and write the iterate trace");
  add_common(solve, true);

  CLI::App* experiment =
      app.add_subcommand("experiment", "run seeded replications; write summary and CDF");
  add_common(experiment, true);
  experiment->add_option("--parallel", parallel, "worker threads (default: all cores)");

  CLI::App* bounds = app.add_subcommand("bounds", "sample-size calculator");
  std::string variant = "multiplier";
  cvarvi_complexity_inputs inputs{1, 0.2, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0};
  bounds->add_option("--variant", variant, "penalty or multiplier");
  bounds->add_option("--n", inputs.n, "map dimension")->required();
  bounds->add_option("--alpha", inputs.alpha, "risk level in (0,1]")->required();
  bounds->add_option("--z1", inputs.z1, "cost lower bound")->required();
  bounds->add_option("--z2", inputs.z2, "cost upper bound")->required();
  bounds->add_option("--cf", inputs.c_f, "strong monotonicity constant")->required();
  bounds->add_option("--h-plus", inputs.h_plus, "max iterate distance to the set")->required();
  bounds->add_option("--cd", inputs.c_d, "penalty design constant (> 1)");
  bounds->add_option("--epsilon", inputs.epsilon, "target accuracy")->required();

  CLI::App* verify = app.add_subcommand("verify", "check a candidate flow for equilibrium");
  add_common(verify, true);
  std::string candidate_path;
  double used_path_tol = 1e-6;
  double cost_gap_tol = 1.0;
  int64_t empirical_samples = 0;
  verify->add_option("--candidate", candidate_path, "CSV file with the flow vector")->required();
  verify->add_option("--used-path-tol", used_path_tol, "flow threshold for a used path");
  verify->add_option("--cost-gap-tol", cost_gap_tol, "acceptable cost excess on used paths");
  verify->add_option("--samples", empirical_samples,
                     "verify with this many samples instead of the exact map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (solve->parsed()) return cmd_solve(config_path, seed_flag, out_dir);
  if (experiment->parsed()) return cmd_experiment(config_path, seed_flag, out_dir, parallel);
  if (bounds->parsed()) return cmd_bounds(variant, inputs);
  if (verify->parsed()) {
    return cmd_verify(config_path, candidate_path, used_path_tol, cost_gap_tol, empirical_samples,
                      seed_flag);
  }
  return kExitConfigError;
}
