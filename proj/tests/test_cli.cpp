// End-to-end checks of the command-line tool; each case shells out to the
// built binary (path injected by the build as CVARVI_CLI_PATH).
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CommandResult run_command(const std::string& args) {
  const std::string command = std::string(CVARVI_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 512> buffer{};
  CommandResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::fgets(buffer.data(), buffer.size(), pipe)) result.output += buffer.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << contents;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

const char* kTinySolveConfig = R"json({
  "problem": {"source": "builtin_benchmark"},
  "solver": {
    "algorithm": "projected",
    "steps": {"scale": 1.0, "shift": 0.0},
    "samples": {"kind": "constant", "n0": 10},
    "iterations": 60,
    "seed": 5
  },
  "downsample_stride": 10,
  "outputs": {"trace_csv": "cli_trace.csv"}
})json";

}  // namespace

TEST_CASE("bounds subcommand prints the pinned sample size") {
  const CommandResult r = run_command(
      "bounds --variant multiplier --n 1 --alpha 0.2 --z1 0 --z2 1 --cf 1 --h-plus 1 --epsilon 1");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("required_samples: 177") != std::string::npos);
  CHECK(r.output.find("required_bias: 1") != std::string::npos);
}

TEST_CASE("bounds subcommand rejects bad arguments") {
  CHECK(run_command("bounds --variant multiplier --n 1 --alpha 0 --z1 0 --z2 1 --cf 1 "
                    "--h-plus 1 --epsilon 1")
            .exit_code == 2);
  CHECK(run_command("bounds --variant nope --n 1 --alpha 0.2 --z1 0 --z2 1 --cf 1 --h-plus 1 "
                    "--epsilon 1")
            .exit_code == 2);
  CHECK(run_command("bounds").exit_code == 2);  // missing required options
}

TEST_CASE("solve writes a trace and reports residuals") {
  write_file("cli_solve.json", kTinySolveConfig);
  const CommandResult r = run_command("solve --config cli_solve.json");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("final error:") != std::string::npos);
  CHECK(r.output.find("kkt stationarity residual:") != std::string::npos);

  const std::string trace = read_file("cli_trace.csv");
  CHECK(trace.rfind("k,gamma,N,h_1,h_2,h_3,h_4,h_5,err\n", 0) == 0);
  // 6 recorded rows (k = 10,...,60) plus the header
  int lines = 0;
  for (char c : trace) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 7);
  std::remove("cli_solve.json");
  std::remove("cli_trace.csv");
}

TEST_CASE("malformed configs exit with code 2") {
  write_file("cli_bad.json", "{ this is not json");
  CHECK(run_command("solve --config cli_bad.json").exit_code == 2);
  CHECK(run_command("solve --config cli_missing.json").exit_code == 2);
  write_file("cli_bad_algo.json", R"json({
    "problem": {"source": "builtin_benchmark"},
    "solver": {"algorithm": "newton", "iterations": 5}
  })json");
  CHECK(run_command("solve --config cli_bad_algo.json").exit_code == 2);
  std::remove("cli_bad.json");
  std::remove("cli_bad_algo.json");
}

TEST_CASE("reckless step sizes exit with the divergence code") {
  write_file("cli_diverge.json", R"json({
    "problem": {"source": "builtin_benchmark"},
    "solver": {
      "algorithm": "penalty",
      "steps": {"scale": 1e6, "shift": 0.0},
      "samples": {"kind": "constant", "n0": 5},
      "iterations": 1000,
      "penalty_c": 1.0,
      "seed": 2
    },
    "outputs": {"trace_csv": "cli_diverge_trace.csv"}
  })json");
  const CommandResult r = run_command("solve --config cli_diverge.json");
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("divergence") != std::string::npos);
  std::remove("cli_diverge.json");
  std::remove("cli_diverge_trace.csv");
}

TEST_CASE("experiment writes summary and cdf deterministically") {
  write_file("cli_exp.json", R"json({
    "problem": {"source": "builtin_benchmark"},
    "solver": {
      "algorithm": "projected",
      "steps": {"scale": 1.0, "shift": 0.0},
      "samples": {"kind": "constant", "n0": 10},
      "iterations": 80
    },
    "replications": 6,
    "base_seed": 11,
    "outputs": {"summary_csv": "cli_summary.csv", "cdf_csv": "cli_cdf.csv"}
  })json");

  const CommandResult first = run_command("experiment --config cli_exp.json --parallel 2");
  REQUIRE(first.exit_code == 0);
  const std::string summary_a = read_file("cli_summary.csv");
  const std::string cdf_a = read_file("cli_cdf.csv");

  CHECK(summary_a.rfind("replication,seed,final_error,wall_time\n", 0) == 0);
  CHECK(cdf_a.rfind("error_level,fraction_of_runs\n", 0) == 0);

  // rerun with a different worker count: byte-identical outputs
  const CommandResult second = run_command("experiment --config cli_exp.json --parallel 1");
  REQUIRE(second.exit_code == 0);
  CHECK(read_file("cli_summary.csv") == summary_a);
  CHECK(read_file("cli_cdf.csv") == cdf_a);

  // fractions end at 1.0 and never decrease
  std::stringstream cdf(cdf_a);
  std::string line;
  std::getline(cdf, line);  // header
  double previous = 0.0, fraction = 0.0;
  int rows = 0;
  while (std::getline(cdf, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    fraction = std::stod(line.substr(comma + 1));
    CHECK(fraction >= previous);
    previous = fraction;
    ++rows;
  }
  CHECK(rows == 6);
  CHECK(fraction == 1.0);

  std::remove("cli_exp.json");
  std::remove("cli_summary.csv");
  std::remove("cli_cdf.csv");
}

TEST_CASE("single-replication experiments emit a one-step cdf") {
  write_file("cli_exp1.json", R"json({
    "problem": {"source": "builtin_benchmark"},
    "solver": {
      "algorithm": "projected",
      "samples": {"kind": "constant", "n0": 10},
      "iterations": 40
    },
    "replications": 1,
    "base_seed": 3,
    "outputs": {"summary_csv": "cli_summary1.csv", "cdf_csv": "cli_cdf1.csv"}
  })json");
  REQUIRE(run_command("experiment --config cli_exp1.json").exit_code == 0);
  const std::string cdf = read_file("cli_cdf1.csv");
  std::stringstream lines(cdf);
  std::string header, row, extra;
  REQUIRE(std::getline(lines, header));
  REQUIRE(std::getline(lines, row));
  CHECK_FALSE(std::getline(lines, extra));
  CHECK(row.substr(row.find(',') + 1) == "1");
  std::remove("cli_exp1.json");
  std::remove("cli_summary1.csv");
  std::remove("cli_cdf1.csv");
}

TEST_CASE("out-dir relocates output files") {
  write_file("cli_outdir.json", kTinySolveConfig);
  REQUIRE(run_command("solve --config cli_outdir.json --out-dir .").exit_code == 0);
  std::remove("cli_trace.csv");
  REQUIRE(system("mkdir -p cli_out") == 0);
  const CommandResult r = run_command("solve --config cli_outdir.json --out-dir cli_out");
  CHECK(r.exit_code == 0);
  CHECK(read_file("cli_out/cli_trace.csv").rfind("k,gamma,N", 0) == 0);
  std::remove("cli_outdir.json");
  std::remove("cli_out/cli_trace.csv");
  CHECK(system("rmdir cli_out") == 0);
}

TEST_CASE("seed flag overrides the config seed") {
  write_file("cli_seed.json", kTinySolveConfig);
  const CommandResult a = run_command("solve --config cli_seed.json");
  const CommandResult b = run_command("solve --config cli_seed.json --seed 5");
  const CommandResult c = run_command("solve --config cli_seed.json --seed 99");
  CHECK(a.output == b.output);  // flag equal to the config seed changes nothing
  CHECK(a.output != c.output);
  std::remove("cli_seed.json");
  std::remove("cli_trace.csv");
}

TEST_CASE("environment seed is the lowest-priority source") {
  // config without a seed: CVARVI_SEED decides, unless --seed is given
  write_file("cli_env.json", R"json({
    "problem": {"source": "builtin_benchmark"},
    "solver": {
      "algorithm": "projected",
      "samples": {"kind": "constant", "n0": 10},
      "iterations": 40
    },
    "outputs": {"trace_csv": "cli_env_trace.csv"}
  })json");

  const std::string prefix = "CVARVI_SEED=123 " + std::string(CVARVI_CLI_PATH);
  auto run_with_env = [&](const std::string& args) {
    const std::string command = prefix + " " + args + " 2>&1";
    std::array<char, 512> buffer{};
    CommandResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::fgets(buffer.data(), buffer.size(), pipe)) result.output += buffer.data();
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
  };

  const CommandResult env_run = run_with_env("solve --config cli_env.json");
  const CommandResult env_rerun = run_with_env("solve --config cli_env.json");
  const CommandResult flag_run = run_with_env("solve --config cli_env.json --seed 123");
  const CommandResult other_flag = run_with_env("solve --config cli_env.json --seed 7");
  REQUIRE(env_run.exit_code == 0);
  CHECK(env_run.output == env_rerun.output);
  CHECK(env_run.output == flag_run.output);   // flag matches the env seed
  CHECK(env_run.output != other_flag.output); // flag wins over the env

  std::remove("cli_env.json");
  std::remove("cli_env_trace.csv");
}

TEST_CASE("verify accepts the reference and rejects perturbations") {
  write_file("cli_verify.json", R"json({
    "problem": {"source": "builtin_benchmark"},
    "solver": {"algorithm": "projected", "iterations": 1, "samples": {"n0": 1}}
  })json");
  write_file("cli_candidate.csv", "89.52,98.39,72.09,74.32,95.68\n");
  const CommandResult good = run_command(
      "verify --config cli_verify.json --candidate cli_candidate.csv --cost-gap-tol 1.0");
  CHECK(good.exit_code == 0);
  CHECK(good.output.find("is_equilibrium: true") != std::string::npos);

  write_file("cli_candidate_bad.csv", "99.52,88.39,72.09,74.32,95.68\n");
  const CommandResult bad = run_command(
      "verify --config cli_verify.json --candidate cli_candidate_bad.csv --cost-gap-tol 1.0");
  CHECK(bad.exit_code == 4);
  CHECK(bad.output.find("is_equilibrium: false") != std::string::npos);

  write_file("cli_candidate_short.csv", "1.0,2.0\n");
  CHECK(run_command("verify --config cli_verify.json --candidate cli_candidate_short.csv")
            .exit_code == 2);

  std::remove("cli_verify.json");
  std::remove("cli_candidate.csv");
  std::remove("cli_candidate_bad.csv");
  std::remove("cli_candidate_short.csv");
}
