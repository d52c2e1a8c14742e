#include "cvarvi/vi_problem.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <span>

#include "cvarvi/errors.hpp"

namespace cvarvi {

std::function<void(Rng&, Eigen::VectorXd&)> UncertainCostModel::iid_uniform(int m) {
  return [m](Rng& rng, Eigen::VectorXd& u) {
    u.resize(m);
    for (int i = 0; i < m; ++i) u[i] = rng.next_uniform();
  };
}

UncertainCostModel make_affine_uniform_model(AffineNoiseStructure structure, int m) {
  const int n = static_cast<int>(structure.coeff.rows());
  if (structure.coeff.cols() != n || structure.offset.size() != n ||
      structure.noise_gain.size() != n || static_cast<int>(structure.noise_index.size()) != n) {
    throw InvalidInput("affine structure: inconsistent dimensions");
  }
  if ((structure.noise_gain.array() < 0.0).any()) {
    throw InvalidInput("affine structure: noise gains must be nonnegative");
  }
  for (int idx : structure.noise_index) {
    if (idx < -1 || idx >= m) throw InvalidInput("affine structure: noise index out of range");
  }

  UncertainCostModel model;
  model.n = n;
  model.m = m;
  model.sample_u = UncertainCostModel::iid_uniform(m);
  model.affine = structure;
  model.cost = [s = std::move(structure)](const Eigen::VectorXd& h, const Eigen::VectorXd& u) {
    Eigen::VectorXd c = s.coeff * h + s.offset;
    for (int i = 0; i < c.size(); ++i) {
      if (s.noise_index[static_cast<std::size_t>(i)] >= 0) {
        c[i] += s.noise_gain[i] * u[s.noise_index[static_cast<std::size_t>(i)]];
      }
    }
    return c;
  };
  return model;
}

ViProblem::ViProblem(UncertainCostModel model_in, RiskLevel alpha_in, PolyhedralSet set_in)
    : model(std::move(model_in)), alpha(alpha_in), set(std::move(set_in)) {
  if (model.n != set.dimension()) {
    throw InvalidInput("vi problem: model dimension does not match the set");
  }
  if (!model.cost || !model.sample_u) {
    throw InvalidInput("vi problem: model must provide cost and sample_u");
  }
  if (model.cost_bounds && !(model.cost_bounds->first <= model.cost_bounds->second)) {
    throw InvalidInput("vi problem: cost bounds must satisfy z1 <= z2");
  }
  if (model.affine && !model.exact_cvar_map) {
    const AffineNoiseStructure& s = *model.affine;
    Eigen::VectorXd shift = s.offset;
    for (int i = 0; i < model.n; ++i) {
      shift[i] += exact_cvar_affine_uniform(0.0, s.noise_gain[i], alpha);
    }
    model.exact_cvar_map = [coeff = s.coeff, shift](const Eigen::VectorXd& h) {
      return Eigen::VectorXd(coeff * h + shift);
    };
  }
}

namespace {

void check_sample(const UncertainCostModel& model, double value) {
  if (!std::isfinite(value)) throw ModelError("cost model produced a non-finite value");
  if (model.cost_bounds) {
    if (value < model.cost_bounds->first || value > model.cost_bounds->second) {
      throw ModelError("cost model violated its declared cost bounds");
    }
  }
}

// Fills ws.samples (component-major) with N cost rows at h.
void draw_batch(const ViProblem& problem, const Eigen::VectorXd& h, long n_samples, Rng& rng,
                EmpiricalMapWorkspace& ws) {
  if (n_samples < 1) throw InvalidInput("empirical_map: sample count must be >= 1");
  const UncertainCostModel& model = problem.model;
  if (h.size() != model.n) throw InvalidInput("empirical_map: dimension mismatch");
  const int n = model.n;
  ws.samples.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n_samples));

  if (model.affine) {
    const AffineNoiseStructure& s = *model.affine;
    ws.base = s.coeff * h + s.offset;
    for (long j = 0; j < n_samples; ++j) {
      model.sample_u(rng, ws.u);
      for (int i = 0; i < n; ++i) {
        double v = ws.base[i];
        const int idx = s.noise_index[static_cast<std::size_t>(i)];
        if (idx >= 0) v += s.noise_gain[i] * ws.u[idx];
        check_sample(model, v);
        ws.samples[static_cast<std::size_t>(i) * n_samples + j] = v;
      }
    }
  } else {
    for (long j = 0; j < n_samples; ++j) {
      model.sample_u(rng, ws.u);
      const Eigen::VectorXd row = model.cost(h, ws.u);
      if (row.size() != n) throw ModelError("cost model returned a row of the wrong size");
      for (int i = 0; i < n; ++i) {
        check_sample(model, row[i]);
        ws.samples[static_cast<std::size_t>(i) * n_samples + j] = row[i];
      }
    }
  }
}

}  // namespace

Eigen::VectorXd empirical_map_estimate(const ViProblem& problem, const Eigen::VectorXd& h,
                                       long n_samples, Rng& rng, EmpiricalMapWorkspace& ws) {
  draw_batch(problem, h, n_samples, rng, ws);
  const int n = problem.model.n;
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    std::span<double> column(ws.samples.data() + static_cast<std::size_t>(i) * n_samples,
                             static_cast<std::size_t>(n_samples));
    out[i] = empirical_cvar_inplace(column, problem.alpha).value;
  }
  return out;
}

std::pair<Eigen::VectorXd, SampleBatch> empirical_map(const ViProblem& problem,
                                                      const Eigen::VectorXd& h, long n_samples,
                                                      Rng& rng) {
  EmpiricalMapWorkspace ws;
  draw_batch(problem, h, n_samples, rng, ws);
  const int n = problem.model.n;
  Eigen::MatrixXd values(n_samples, n);
  for (int i = 0; i < n; ++i) {
    for (long j = 0; j < n_samples; ++j) {
      values(j, i) = ws.samples[static_cast<std::size_t>(i) * n_samples + j];
    }
  }
  SampleBatch batch(std::move(values));
  return {empirical_cvar_vector(batch, problem.alpha), std::move(batch)};
}

Eigen::VectorXd exact_map(const ViProblem& problem, const Eigen::VectorXd& h) {
  if (!problem.model.exact_cvar_map) {
    throw Unsupported("exact_map: the model does not provide an exact CVaR map");
  }
  if (h.size() != problem.model.n) throw InvalidInput("exact_map: dimension mismatch");
  return (*problem.model.exact_cvar_map)(h);
}

MonotonicityReport monotonicity_report(const ViProblem& problem) {
  MonotonicityReport report;
  if (problem.model.affine) {
    report.method = MonotonicityMethod::affine_exact;
    const Eigen::MatrixXd& a = problem.model.affine->coeff;
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    const double lambda_min = eig.eigenvalues().minCoeff();
    const double tol = 1e-10 * a.norm();
    if (lambda_min > tol) {
      report.kind = MonotonicityKind::strongly_monotone;
      report.c_f = lambda_min;
    } else if (lambda_min >= -tol) {
      report.kind = MonotonicityKind::monotone;
    } else {
      report.kind = MonotonicityKind::not_detected;
    }
    return report;
  }

  if (!problem.model.exact_cvar_map) {
    throw Unsupported("monotonicity_report: sampled analysis needs the exact map");
  }
  report.method = MonotonicityMethod::sampled_pairs;

  // Probe pairs inside a box scaled to the constraint data; fixed seed so
  // the report is deterministic.
  double scale = 1.0;
  if (problem.set.num_equalities() > 0) {
    scale = std::max(scale, problem.set.eq_rhs().cwiseAbs().maxCoeff());
  }
  if (problem.set.num_inequalities() > 0) {
    scale = std::max(scale, problem.set.ineq_rhs().cwiseAbs().maxCoeff());
  }
  Rng rng(derive_seed(0x5e1fCafeULL, 0));
  const int n = problem.model.n;
  constexpr int kPairs = 64;
  double worst = std::numeric_limits<double>::infinity();
  for (int p = 0; p < kPairs; ++p) {
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) x[i] = scale * (2.0 * rng.next_uniform() - 1.0);
    for (int i = 0; i < n; ++i) y[i] = scale * (2.0 * rng.next_uniform() - 1.0);
    const double dist2 = (x - y).squaredNorm();
    if (dist2 < 1e-16) continue;
    const Eigen::VectorXd df = exact_map(problem, x) - exact_map(problem, y);
    worst = std::min(worst, df.dot(x - y) / dist2);
  }
  const double tol = 1e-10 * scale;
  if (worst > tol) {
    report.kind = MonotonicityKind::strongly_monotone;
    report.c_f = worst;
  } else if (worst > 0.0) {
    report.kind = MonotonicityKind::strictly_monotone;
  } else if (worst >= -tol) {
    report.kind = MonotonicityKind::monotone;
  } else {
    report.kind = MonotonicityKind::not_detected;
  }
  return report;
}

double solution_error(const Eigen::VectorXd& h, const Eigen::VectorXd& reference) {
  if (h.size() != reference.size()) throw InvalidInput("solution_error: dimension mismatch");
  return (h - reference).norm();
}

}  // namespace cvarvi
