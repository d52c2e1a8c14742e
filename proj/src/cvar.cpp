#include "cvarvi/cvar.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "cvarvi/errors.hpp"

namespace cvarvi {

RiskLevel::RiskLevel(double a) : alpha(a) {
  if (!(a > 0.0) || !(a <= 1.0) || !std::isfinite(a)) {
    throw InvalidInput("risk level alpha must lie in (0, 1]");
  }
}

SampleBatch::SampleBatch(Eigen::MatrixXd v) : values(std::move(v)) {
  if (values.rows() < 1 || values.cols() < 1) {
    throw InvalidInput("sample batch must have at least one row and one column");
  }
  if (!values.allFinite()) {
    throw InvalidInput("sample batch contains non-finite entries");
  }
}

CvarEstimate empirical_cvar_inplace(std::span<double> samples, RiskLevel level) {
  const long n = static_cast<long>(samples.size());
  if (n < 1) throw InvalidInput("empirical_cvar: empty sample list");
  for (double z : samples) {
    if (!std::isfinite(z)) throw InvalidInput("empirical_cvar: non-finite sample");
  }

  std::sort(samples.begin(), samples.end(), std::greater<double>());

  CvarEstimate est;
  est.n_samples = static_cast<int>(n);

  // Constant samples: the estimate is that constant, bit-exactly. Keeps
  // deterministic cost models exact for every sample count.
  if (samples.front() == samples.back()) {
    est.value = samples.front();
    est.minimizer_t = samples.front();
    return est;
  }

  const double na = static_cast<double>(n) * level.alpha;
  long m = static_cast<long>(std::floor(na));
  if (m > n) m = n;  // guards float overshoot at alpha = 1
  const double frac = na - static_cast<double>(m);

  double top = 0.0;
  for (long j = 0; j < m; ++j) top += samples[static_cast<std::size_t>(j)];
  if (m < n) top += frac * samples[static_cast<std::size_t>(m)];
  est.value = top / na;

  // ceil(N*alpha)-th largest; a relative snap keeps the tie-break stable
  // when N*alpha is an integer up to rounding.
  long r = (frac > 1e-9 ? m + 1 : m);
  if (r < 1) r = 1;
  if (r > n) r = n;
  est.minimizer_t = samples[static_cast<std::size_t>(r - 1)];
  return est;
}

CvarEstimate empirical_cvar(std::span<const double> samples, RiskLevel level) {
  std::vector<double> scratch(samples.begin(), samples.end());
  return empirical_cvar_inplace(scratch, level);
}

Eigen::VectorXd empirical_cvar_vector(const SampleBatch& batch, RiskLevel level) {
  const int n = batch.components();
  Eigen::VectorXd out(n);
  std::vector<double> column(static_cast<std::size_t>(batch.count()));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd::Map(column.data(), batch.count()) = batch.values.col(i);
    out[i] = empirical_cvar_inplace(column, level).value;
  }
  return out;
}

double exact_cvar_affine_uniform(double offset, double noise_gain, RiskLevel level) {
  if (!(noise_gain >= 0.0) || !std::isfinite(noise_gain) || !std::isfinite(offset)) {
    throw InvalidInput("exact_cvar_affine_uniform: noise_gain must be finite and >= 0");
  }
  return offset + noise_gain * (1.0 - level.alpha / 2.0);
}

}  // namespace cvarvi
