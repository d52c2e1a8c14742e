#ifndef CVARVI_CVAR_HPP
#define CVARVI_CVAR_HPP

#include <Eigen/Core>
#include <span>

namespace cvarvi {

// Risk-aversion level alpha in (0, 1]. Smaller alpha averages a thinner
// (worse) tail of the cost distribution; alpha = 1 recovers the mean.
struct RiskLevel {
  double alpha;
  explicit RiskLevel(double a);
};

// N cost vectors, one row per uncertainty event. All n components of a row
// must come from the same event (shared-event contract); the estimator
// itself works column by column, but downstream consumers rely on rows
// being jointly sampled.
struct SampleBatch {
  Eigen::MatrixXd values;  // N x n

  explicit SampleBatch(Eigen::MatrixXd v);
  int count() const { return static_cast<int>(values.rows()); }       // N
  int components() const { return static_cast<int>(values.cols()); }  // n
};

struct CvarEstimate {
  double value = 0.0;
  double minimizer_t = 0.0;  // an optimal threshold of the tail objective
  int n_samples = 0;
};

// Empirical CVaR of scalar samples at level alpha: the exact infimum over t
// of  t + (N*alpha)^-1 * sum_j [Z_j - t]_+ , computed in closed form from
// the descending order statistics. With m = floor(N*alpha),
//   value = (N*alpha)^-1 * ( sum of the m largest + (N*alpha - m) * next ),
// the trailing term dropped when m = N. minimizer_t is the
// ceil(N*alpha)-th largest sample (the minimizer set can be an interval;
// this picks a canonical, reproducible endpoint). Order-invariant.
CvarEstimate empirical_cvar(std::span<const double> samples, RiskLevel level);

// Same, but sorts the caller's buffer in place. No allocation.
CvarEstimate empirical_cvar_inplace(std::span<double> samples, RiskLevel level);

// Column-wise empirical CVaR of a batch; component i is the estimate for
// cost component i.
Eigen::VectorXd empirical_cvar_vector(const SampleBatch& batch, RiskLevel level);

// Exact CVaR of  offset + noise_gain * U(0,1):
//   offset + noise_gain * (1 - alpha/2).
// Uses translation invariance and positive homogeneity, so noise_gain must
// be nonnegative.
double exact_cvar_affine_uniform(double offset, double noise_gain, RiskLevel level);

}  // namespace cvarvi

#endif
