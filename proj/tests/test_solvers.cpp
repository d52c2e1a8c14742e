#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "cvarvi/errors.hpp"
#include "cvarvi/routing_game.hpp"
#include "cvarvi/solvers.hpp"

using namespace cvarvi;

namespace {

AffineNoiseStructure affine(Eigen::MatrixXd a, Eigen::VectorXd w) {
  const int n = static_cast<int>(a.rows());
  return {std::move(a), std::move(w), Eigen::VectorXd::Zero(n),
          std::vector<int>(static_cast<std::size_t>(n), -1)};
}

// deterministic F(h) = h - target over a huge box
ViProblem contraction_problem(const Eigen::VectorXd& target, double half_width = 1e6) {
  const int n = static_cast<int>(target.size());
  return ViProblem(make_affine_uniform_model(affine(Eigen::MatrixXd::Identity(n, n), -target), 0),
                   RiskLevel(0.5),
                   PolyhedralSet::box({Eigen::VectorXd::Constant(n, -half_width),
                                       Eigen::VectorXd::Constant(n, half_width)}));
}

// F(h) = h - target with uniform noise of the given gain on every component
ViProblem noisy_problem(const Eigen::VectorXd& target, double gain, PolyhedralSet set) {
  const int n = static_cast<int>(target.size());
  AffineNoiseStructure s = affine(Eigen::MatrixXd::Identity(n, n), -target);
  s.noise_gain.setConstant(gain);
  std::iota(s.noise_index.begin(), s.noise_index.end(), 0);
  return ViProblem(make_affine_uniform_model(s, n), RiskLevel(0.5), std::move(set));
}

SolverConfig base_config(Algorithm alg, const Eigen::VectorXd& h0, long iterations) {
  SolverConfig config;
  config.algorithm = alg;
  config.steps = make_schedule(StepSchedule::Kind::harmonic, 1.0, 0.0, 1);
  config.samples = SampleSchedule::constant(1);
  config.iterations = iterations;
  config.h0 = h0;
  config.seed = 7;
  config.downsample_stride = 1;
  return config;
}

bool traces_bit_identical(const IterateTrace& a, const IterateTrace& b,
                          bool compare_sample_counts = true) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const TraceRecord& x = a.records[i];
    const TraceRecord& y = b.records[i];
    if (x.k != y.k || x.gamma != y.gamma) return false;
    if (compare_sample_counts && x.n_samples != y.n_samples) return false;
    if (x.h != y.h) return false;
    if (x.lambda.has_value() != y.lambda.has_value()) return false;
    if (x.lambda && *x.lambda != *y.lambda) return false;
    if (x.mu.has_value() != y.mu.has_value()) return false;
    if (x.mu && *x.mu != *y.mu) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("step schedules") {
  const StepSchedule harmonic = make_schedule(StepSchedule::Kind::harmonic, 1.0, 0.0, 1);
  CHECK(harmonic.gamma(1) == 1.0);
  CHECK(harmonic.gamma(2) == 0.5);

  const StepSchedule shifted = make_schedule(StepSchedule::Kind::shifted_scaled, 1000.0, 1e7, 1);
  CHECK(shifted.gamma(1) == doctest::Approx(1e-4).epsilon(1e-6));

  CHECK_THROWS_AS(make_schedule(StepSchedule::Kind::harmonic, 0.0, 0.0, 1), InvalidInput);
  CHECK_THROWS_AS(make_schedule(StepSchedule::Kind::harmonic, 1.0, -1.0, 1), InvalidInput);
  CHECK_THROWS_AS(make_schedule(StepSchedule::Kind::harmonic, 1.0, 0.0, 0), InvalidInput);

  // step sums keep growing, squared sums settle
  double sum_small = 0.0, sum_large = 0.0, sq_small = 0.0, sq_large = 0.0;
  for (long k = 1; k <= 1000; ++k) {
    sum_small += harmonic.gamma(k);
    sq_small += harmonic.gamma(k) * harmonic.gamma(k);
  }
  sum_large = sum_small;
  sq_large = sq_small;
  for (long k = 1001; k <= 1000000; ++k) {
    sum_large += harmonic.gamma(k);
    sq_large += harmonic.gamma(k) * harmonic.gamma(k);
  }
  CHECK(sum_large > sum_small + 5.0);
  CHECK(sq_large - sq_small < 1e-2);
}

TEST_CASE("sample schedules") {
  const SampleSchedule constant = SampleSchedule::constant(100);
  CHECK(constant.samples(1) == 100);
  CHECK(constant.samples(1000000) == 100);
  CHECK_THROWS_AS(SampleSchedule::constant(0), InvalidInput);

  const SampleSchedule growing = SampleSchedule::growing_power(10, 0.5, 1.0);
  long previous = 0;
  for (long k : {1L, 2L, 10L, 100L, 10000L}) {
    CHECK(growing.samples(k) >= previous);
    previous = growing.samples(k);
  }
  CHECK(growing.samples(1000000) > 100000);  // unbounded growth
}

TEST_CASE("zero map leaves the iterate fixed") {
  AffineNoiseStructure zero = affine(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2));
  const ViProblem p(make_affine_uniform_model(zero, 0), RiskLevel(0.5),
                    PolyhedralSet::box({Eigen::Vector2d(-10, -10), Eigen::Vector2d(10, 10)}));
  const Eigen::Vector2d h0(3.0, -4.0);
  const SolveResult result = run_projected(p, base_config(Algorithm::projected, h0, 50));
  REQUIRE_FALSE(result.diverged);
  for (const TraceRecord& rec : result.trace.records) CHECK(rec.h == h0);
}

TEST_CASE("deterministic contraction decreases the error every step") {
  const Eigen::Vector3d target(1.0, -2.0, 0.5);
  const ViProblem p = contraction_problem(target);
  SolverConfig config = base_config(Algorithm::projected, Eigen::Vector3d(30.0, 20.0, -40.0), 200);
  const SolveResult result = run_projected(p, config, Eigen::VectorXd(target));
  REQUIRE_FALSE(result.diverged);
  REQUIRE(result.trace.records.size() == 200);
  double previous = (config.h0 - target).norm();
  for (const TraceRecord& rec : result.trace.records) {
    REQUIRE(rec.error_to_reference.has_value());
    if (rec.gamma < 2.0 && previous > 1e-15) CHECK(*rec.error_to_reference < previous);
    previous = *rec.error_to_reference;
  }
  CHECK(result.trace.final_record().error_to_reference.value() <= 1e-6);
}

TEST_CASE("projected iterates stay feasible") {
  const BenchmarkInstance bench = benchmark_instance();
  const ViProblem p = to_vi_problem(bench.network, bench.alpha);
  SolverConfig config = base_config(Algorithm::projected, bench.initial_point, 300);
  config.samples = SampleSchedule::constant(20);
  const SolveResult result = run_projected(p, config, bench.reference);
  REQUIRE_FALSE(result.diverged);
  for (const TraceRecord& rec : result.trace.records) CHECK(p.set.violation(rec.h) <= 1e-8);
}

TEST_CASE("projected supports growing sample schedules") {
  const BenchmarkInstance bench = benchmark_instance();
  const ViProblem p = to_vi_problem(bench.network, bench.alpha);
  SolverConfig config = base_config(Algorithm::projected, bench.initial_point, 400);
  config.samples = SampleSchedule::growing_power(5, 0.25, 1.0);
  const SolveResult result = run_projected(p, config, bench.reference);
  REQUIRE_FALSE(result.diverged);
  CHECK(result.trace.records.back().n_samples == 105);
  CHECK(result.trace.final_record().error_to_reference.value() < 20.0);
}

TEST_CASE("noise-free runs are identical for every sample count") {
  const Eigen::Vector2d target(0.5, 0.25);
  const ViProblem p = contraction_problem(target);
  SolverConfig config = base_config(Algorithm::projected, Eigen::Vector2d(5.0, -5.0), 60);
  const SolveResult one = run_projected(p, config);
  config.samples = SampleSchedule::constant(57);
  const SolveResult many = run_projected(p, config);
  CHECK(traces_bit_identical(one.trace, many.trace, /*compare_sample_counts=*/false));
}

TEST_CASE("identical seeds reproduce traces bit for bit") {
  const BenchmarkInstance bench = benchmark_instance();
  const ViProblem p = to_vi_problem(bench.network, bench.alpha);
  SolverConfig config = base_config(Algorithm::projected, bench.initial_point, 150);
  config.samples = SampleSchedule::constant(10);
  const SolveResult a = run_projected(p, config, bench.reference);
  const SolveResult b = run_projected(p, config, bench.reference);
  CHECK(traces_bit_identical(a.trace, b.trace));
  config.seed = 8;
  const SolveResult c = run_projected(p, config, bench.reference);
  CHECK_FALSE(traces_bit_identical(a.trace, c.trace));
}

TEST_CASE("downsampling keeps every stride-th record plus the final one") {
  const Eigen::Vector2d target(0.0, 0.0);
  const ViProblem p = contraction_problem(target);
  SolverConfig config = base_config(Algorithm::projected, Eigen::Vector2d(1.0, 1.0), 105);
  config.downsample_stride = 10;
  const SolveResult result = run_projected(p, config);
  REQUIRE(result.trace.records.size() == 11);
  for (std::size_t i = 0; i + 1 < result.trace.records.size(); ++i) {
    CHECK(result.trace.records[i].k == static_cast<long>(10 * (i + 1)));
  }
  CHECK(result.trace.records.back().k == 105);
}

TEST_CASE("penalty with zero map and feasible start is constant") {
  AffineNoiseStructure zero = affine(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2));
  const ViProblem p(make_affine_uniform_model(zero, 0), RiskLevel(0.5),
                    PolyhedralSet::box({Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)}));
  SolverConfig config = base_config(Algorithm::penalty, Eigen::Vector2d(0.5, -0.5), 40);
  config.penalty_c = 100.0;
  const SolveResult result = run_penalty(p, config);
  REQUIRE_FALSE(result.diverged);
  for (const TraceRecord& rec : result.trace.records) CHECK(rec.h == config.h0);
}

TEST_CASE("penalty ramp interpolates linearly") {
  SolverConfig config;
  config.penalty_ramp = PenaltyRamp{100.0, 500.0, 100};
  CHECK(penalty_constant_at(config, 1) == doctest::Approx(100.0));
  CHECK(penalty_constant_at(config, 51) == doctest::Approx(300.0));
  CHECK(penalty_constant_at(config, 101) == doctest::Approx(500.0));
  CHECK(penalty_constant_at(config, 100000) == doctest::Approx(500.0));
  config.penalty_ramp.reset();
  config.penalty_c = 42.0;
  CHECK(penalty_constant_at(config, 17) == 42.0);
}

TEST_CASE("larger penalty constants do not increase the limiting distance") {
  // noisy strongly monotone map over a simplex; gamma * c kept well inside
  // the stable range for both runs
  const Eigen::Vector3d target(2.0, -1.0, 0.5);
  const PolyhedralSet simplex = PolyhedralSet::product_of_simplices({{{0, 1, 2}, 3.0}}, 3);
  const ViProblem p = noisy_problem(target, 0.5, simplex);

  auto final_distance = [&](double c, std::uint64_t seed) {
    SolverConfig config = base_config(Algorithm::penalty, Eigen::Vector3d(1.0, 1.0, 1.0), 4000);
    config.steps = make_schedule(StepSchedule::Kind::shifted_scaled, 1.0, 10.0, 1);
    config.samples = SampleSchedule::constant(4);
    config.penalty_c = c;
    config.seed = seed;
    config.downsample_stride = 4000;
    const SolveResult result = run_penalty(p, config);
    REQUIRE_FALSE(result.diverged);
    const Eigen::VectorXd h = result.trace.final_record().h;
    return (h - p.set.project(h)).norm();
  };

  double dist_c = 0.0, dist_2c = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    dist_c += final_distance(4.0, seed);
    dist_2c += final_distance(8.0, seed);
  }
  CHECK(dist_2c / 20.0 <= dist_c / 20.0 + 1e-6);
}

TEST_CASE("penalty safeguard box clamps every iterate") {
  const Eigen::Vector2d target(50.0, -50.0);
  const ViProblem p = contraction_problem(target);
  SolverConfig config = base_config(Algorithm::penalty, Eigen::Vector2d(0.0, 0.0), 100);
  config.penalty_c = 1e-3;
  config.safeguard = Box{Eigen::Vector2d(-5.0, -5.0), Eigen::Vector2d(5.0, 5.0)};
  const SolveResult result = run_penalty(p, config);
  for (const TraceRecord& rec : result.trace.records) {
    CHECK(config.safeguard->contains(rec.h, 0.0));
  }
}

TEST_CASE("multiplier iteration is stationary at a planted saddle point") {
  // F(h) = h - a over { h >= 0, h_1 + h_2 = 3 }: the interior solution
  // h* = (2, 1), mu* = 1, lambda* = 0 zeroes every update direction
  const PolyhedralSet set = PolyhedralSet::product_of_simplices({{{0, 1}, 3.0}}, 2);
  const ViProblem p(
      make_affine_uniform_model(affine(Eigen::MatrixXd::Identity(2, 2), -Eigen::Vector2d(3.0, 2.0)), 0),
      RiskLevel(0.5), set);
  SolverConfig config = base_config(Algorithm::multiplier, Eigen::Vector2d(2.0, 1.0), 50);
  config.mu0 = Eigen::VectorXd::Ones(1);
  const SolveResult result = run_multiplier(p, config);
  REQUIRE_FALSE(result.diverged);
  for (const TraceRecord& rec : result.trace.records) {
    CHECK((rec.h - config.h0).norm() <= 1e-12);
    CHECK((*rec.mu - config.mu0).norm() <= 1e-12);
    CHECK(rec.lambda->norm() == 0.0);
  }
}

TEST_CASE("multiplier keeps lambda nonnegative throughout") {
  const BenchmarkInstance bench = benchmark_instance();
  const ViProblem p = to_vi_problem(bench.network, bench.alpha);
  SolverConfig config = base_config(Algorithm::multiplier, bench.initial_point, 400);
  config.steps = make_schedule(StepSchedule::Kind::shifted_scaled, 1000.0, 2e5, 1);
  config.samples = SampleSchedule::constant(10);
  const SolveResult result = run_multiplier(p, config, bench.reference);
  REQUIRE_FALSE(result.diverged);
  for (const TraceRecord& rec : result.trace.records) {
    REQUIRE(rec.lambda.has_value());
    CHECK((rec.lambda->array() >= 0.0).all());
  }
}

TEST_CASE("lambda stays zero while the inequalities stay slack") {
  const PolyhedralSet set = PolyhedralSet::product_of_simplices({{{0, 1}, 3.0}}, 2);
  const ViProblem p(
      make_affine_uniform_model(affine(Eigen::MatrixXd::Identity(2, 2), -Eigen::Vector2d(3.0, 2.0)), 0),
      RiskLevel(0.5), set);
  SolverConfig config = base_config(Algorithm::multiplier, Eigen::Vector2d(1.9, 1.1), 500);
  config.steps = make_schedule(StepSchedule::Kind::shifted_scaled, 0.1, 1.0, 1);
  config.mu0 = Eigen::VectorXd::Ones(1);
  const SolveResult result = run_multiplier(p, config);
  REQUIRE_FALSE(result.diverged);
  for (const TraceRecord& rec : result.trace.records) {
    CHECK(rec.h.minCoeff() > 0.0);  // q(h) < 0 along the whole run
    CHECK(rec.lambda->norm() == 0.0);
  }
}

TEST_CASE("multiplier safeguard boxes clamp the dual variables") {
  const PolyhedralSet set = PolyhedralSet::product_of_simplices({{{0, 1}, 3.0}}, 2);
  const ViProblem p(
      make_affine_uniform_model(affine(Eigen::MatrixXd::Identity(2, 2), -Eigen::Vector2d(3.0, 2.0)), 0),
      RiskLevel(0.5), set);
  SolverConfig config = base_config(Algorithm::multiplier, Eigen::Vector2d(0.0, 3.0), 200);
  config.steps = make_schedule(StepSchedule::Kind::shifted_scaled, 2.0, 10.0, 1);
  const int s = set.num_inequalities();
  const int t = set.num_equalities();
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(s + t);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(s + t, 0.25);
  lo.tail(t).setConstant(-0.25);
  config.multiplier_safeguard = Box{lo, hi};
  const SolveResult result = run_multiplier(p, config);
  for (const TraceRecord& rec : result.trace.records) {
    CHECK(rec.lambda->maxCoeff() <= 0.25);
    CHECK(rec.mu->cwiseAbs().maxCoeff() <= 0.25);
  }
}

TEST_CASE("divergence guard reports the failure and keeps the partial trace") {
  const BenchmarkInstance bench = benchmark_instance();
  const ViProblem p = to_vi_problem(bench.network, bench.alpha);
  SolverConfig config = base_config(Algorithm::penalty, bench.initial_point, 100000);
  config.steps = make_schedule(StepSchedule::Kind::harmonic, 1e6, 0.0, 1);
  config.penalty_c = 1.0;
  config.samples = SampleSchedule::constant(5);
  const SolveResult result = run_penalty(p, config);
  CHECK(result.diverged);
  CHECK_FALSE(result.message.empty());
  CHECK_FALSE(result.trace.records.empty());
  CHECK(result.trace.records.back().k < 100000);
}

TEST_CASE("config validation") {
  const Eigen::Vector2d target(0.0, 0.0);
  const ViProblem p = contraction_problem(target);

  SolverConfig config = base_config(Algorithm::penalty, Eigen::Vector2d(1.0, 1.0), 10);
  CHECK_THROWS_AS(run_projected(p, config), InvalidInput);  // algorithm mismatch
  CHECK_THROWS_AS(run_penalty(p, config), InvalidInput);    // penalty_c missing

  config = base_config(Algorithm::projected, Eigen::Vector3d(1.0, 1.0, 1.0), 10);
  CHECK_THROWS_AS(run_projected(p, config), InvalidInput);  // h0 dimension

  config = base_config(Algorithm::projected, Eigen::Vector2d(1.0, 1.0), 0);
  CHECK_THROWS_AS(run_projected(p, config), InvalidInput);  // iterations

  config = base_config(Algorithm::multiplier, Eigen::Vector2d(1.0, 1.0), 10);
  config.lambda0 = Eigen::VectorXd::Constant(p.set.num_inequalities(), -1.0);
  CHECK_THROWS_AS(run_multiplier(p, config), InvalidInput);  // negative lambda0
}
