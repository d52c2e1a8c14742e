#include "experiment_config.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) {
  throw std::runtime_error("config: " + message);
}

std::vector<double> read_vector(const json& node) {
  if (!node.is_array()) fail("expected an array of numbers");
  std::vector<double> out;
  out.reserve(node.size());
  for (const auto& v : node) out.push_back(v.get<double>());
  return out;
}

int32_t parse_algorithm(const std::string& name) {
  if (name == "projected") return CVARVI_ALG_PROJECTED;
  if (name == "penalty") return CVARVI_ALG_PENALTY;
  if (name == "multiplier") return CVARVI_ALG_MULTIPLIER;
  fail("unknown algorithm '" + name + "' (expected projected, penalty, or multiplier)");
}

void parse_problem(const json& node, ProblemSource& out) {
  const std::string source = node.at("source").get<std::string>();
  if (source == "builtin_benchmark") {
    out.builtin_benchmark = true;
  } else if (source == "network_file") {
    out.builtin_benchmark = false;
    out.network_path = node.at("path").get<std::string>();
    out.alpha = node.at("alpha").get<double>();
  } else {
    fail("problem.source must be builtin_benchmark or network_file");
  }
}

void parse_solver(const json& node, SolverSettings& out) {
  out.algorithm = parse_algorithm(node.at("algorithm").get<std::string>());

  if (node.contains("steps")) {
    const json& steps = node.at("steps");
    out.step_scale = steps.value("scale", 1.0);
    out.step_shift = steps.value("shift", 0.0);
    out.step_start_index = steps.value("start_index", static_cast<int64_t>(1));
  }
  if (node.contains("samples")) {
    const json& samples = node.at("samples");
    const std::string kind = samples.value("kind", "constant");
    out.sample_n0 = samples.at("n0").get<int64_t>();
    if (kind == "growing") {
      out.sample_growing = true;
      out.sample_rate = samples.value("rate", 1.0);
      out.sample_power = samples.value("power", 1.0);
    } else if (kind != "constant") {
      fail("samples.kind must be constant or growing");
    }
  }
  out.iterations = node.at("iterations").get<int64_t>();
  out.penalty_c = node.value("penalty_c", 0.0);
  if (node.contains("penalty_ramp")) {
    const json& ramp = node.at("penalty_ramp");
    out.has_penalty_ramp = true;
    out.ramp_c_init = ramp.at("c_init").get<double>();
    out.ramp_c_target = ramp.at("c_target").get<double>();
    out.ramp_iters = ramp.at("ramp_iters").get<int64_t>();
  }
  auto read_box = [&](const char* key, std::vector<double>& lower, std::vector<double>& upper) {
    if (!node.contains(key)) return;
    lower = read_vector(node.at(key).at("lower"));
    upper = read_vector(node.at(key).at("upper"));
    if (lower.size() != upper.size()) fail(std::string(key) + ": lower/upper sizes differ");
  };
  read_box("safeguard", out.safeguard_lower, out.safeguard_upper);
  read_box("multiplier_safeguard", out.multiplier_safeguard_lower,
           out.multiplier_safeguard_upper);
  if (node.contains("h0")) out.h0 = read_vector(node.at("h0"));
  if (node.contains("lambda0")) out.lambda0 = read_vector(node.at("lambda0"));
  if (node.contains("mu0")) out.mu0 = read_vector(node.at("mu0"));
  if (node.contains("seed")) out.seed = node.at("seed").get<std::uint64_t>();
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(e.what());
  }

  try {
    ExperimentConfig config;
    parse_problem(doc.at("problem"), config.problem);
    parse_solver(doc.at("solver"), config.solver);
    config.replications = doc.value("replications", static_cast<int64_t>(1));
    if (config.replications < 1) fail("replications must be >= 1");
    if (doc.contains("base_seed")) config.base_seed = doc.at("base_seed").get<std::uint64_t>();
    if (doc.contains("reference")) config.reference = read_vector(doc.at("reference"));
    config.track_reference = doc.value("track_reference", true);
    config.downsample_stride = doc.value("downsample_stride", static_cast<int64_t>(1));
    config.record_wall_time = doc.value("record_wall_time", false);
    if (doc.contains("outputs")) {
      const json& outputs = doc.at("outputs");
      config.trace_csv = outputs.value("trace_csv", config.trace_csv);
      config.summary_csv = outputs.value("summary_csv", config.summary_csv);
      config.cdf_csv = outputs.value("cdf_csv", config.cdf_csv);
    }
    return config;
  } catch (const json::exception& e) {
    fail(e.what());
  }
}

void apply_solver_settings(const ExperimentConfig& config, cvarvi_solve_options* options) {
  const SolverSettings& s = config.solver;
  options->algorithm = s.algorithm;
  options->step_scale = s.step_scale;
  options->step_shift = s.step_shift;
  options->step_start_index = s.step_start_index;
  options->sample_n0 = s.sample_n0;
  options->sample_growing = s.sample_growing ? 1 : 0;
  options->sample_rate = s.sample_rate;
  options->sample_power = s.sample_power;
  options->iterations = s.iterations;
  options->penalty_c = s.penalty_c;
  options->has_penalty_ramp = s.has_penalty_ramp ? 1 : 0;
  options->ramp_c_init = s.ramp_c_init;
  options->ramp_c_target = s.ramp_c_target;
  options->ramp_iters = s.ramp_iters;
  if (!s.safeguard_lower.empty()) {
    options->safeguard_lower = s.safeguard_lower.data();
    options->safeguard_upper = s.safeguard_upper.data();
  }
  if (!s.multiplier_safeguard_lower.empty()) {
    options->multiplier_safeguard_lower = s.multiplier_safeguard_lower.data();
    options->multiplier_safeguard_upper = s.multiplier_safeguard_upper.data();
  }
  if (!s.h0.empty()) options->h0 = s.h0.data();
  if (!s.lambda0.empty()) options->lambda0 = s.lambda0.data();
  if (!s.mu0.empty()) options->mu0 = s.mu0.data();
  if (!config.reference.empty()) options->reference = config.reference.data();
  options->track_reference = config.track_reference ? 1 : 0;
  options->downsample_stride = config.downsample_stride;
}

}  // namespace cli
