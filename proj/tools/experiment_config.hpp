// Experiment/solve configuration file handling for the command-line tool.
// The tool drives the solver library exclusively through the C interface,
// so a parsed config owns plain vectors and wires them into
// cvarvi_solve_options pointers on demand.
#ifndef CVARVI_TOOLS_EXPERIMENT_CONFIG_HPP
#define CVARVI_TOOLS_EXPERIMENT_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvarvi.h"

namespace cli {

struct ProblemSource {
  bool builtin_benchmark = true;
  std::string network_path;
  double alpha = 0.2;  // network files only
};

struct SolverSettings {
  int32_t algorithm = CVARVI_ALG_PROJECTED;
  double step_scale = 1.0;
  double step_shift = 0.0;
  int64_t step_start_index = 1;
  bool sample_growing = false;
  int64_t sample_n0 = 1;
  double sample_rate = 1.0;
  double sample_power = 1.0;
  int64_t iterations = 1000;
  double penalty_c = 0.0;
  bool has_penalty_ramp = false;
  double ramp_c_init = 0.0;
  double ramp_c_target = 0.0;
  int64_t ramp_iters = 1;
  std::vector<double> safeguard_lower, safeguard_upper;
  std::vector<double> multiplier_safeguard_lower, multiplier_safeguard_upper;
  std::vector<double> h0, lambda0, mu0;
  std::optional<std::uint64_t> seed;
};

struct ExperimentConfig {
  ProblemSource problem;
  SolverSettings solver;
  int64_t replications = 1;
  std::optional<std::uint64_t> base_seed;
  std::vector<double> reference;  // optional override for the error column
  bool track_reference = true;
  int64_t downsample_stride = 1;
  bool record_wall_time = false;
  std::string trace_csv = "trace.csv";
  std::string summary_csv = "summary.csv";
  std::string cdf_csv = "cdf.csv";
};

// Throws std::runtime_error with a readable message on any schema problem.
ExperimentConfig load_config(const std::string& path);

// Points `options` at the vectors held in `config` (which must outlive the
// solve call). Does not set the seed.
void apply_solver_settings(const ExperimentConfig& config, cvarvi_solve_options* options);

}  // namespace cli

#endif
