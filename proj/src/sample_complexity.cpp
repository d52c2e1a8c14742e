#include "cvarvi/sample_complexity.hpp"

#include <cmath>
#include <numbers>

#include "cvarvi/errors.hpp"

namespace cvarvi {

namespace {

void check_bounds(double z1, double z2) {
  if (!std::isfinite(z1) || !std::isfinite(z2) || z2 < z1) {
    throw InvalidInput("cost bounds must be finite with z1 <= z2");
  }
}

void check_inputs(BoundVariant variant, const ComplexityInputs& in) {
  check_bounds(in.z1, in.z2);
  if (in.n < 1) throw InvalidInput("dimension must be >= 1");
  if (!(in.c_f > 0.0)) throw InvalidInput("strong monotonicity constant must be positive");
  if (!(in.h_plus > 0.0)) throw InvalidInput("h_plus must be positive");
  if (!(in.epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  if (variant == BoundVariant::penalty && !(in.c_d > 1.0)) {
    throw InvalidInput("penalty variant needs c_d > 1");
  }
}

double variant_factor(BoundVariant variant, const ComplexityInputs& in) {
  return variant == BoundVariant::penalty ? 1.0 - 1.0 / in.c_d : 1.0;
}

}  // namespace

double bias_bound(int n, RiskLevel alpha, double z1, double z2, long n_samples) {
  if (n < 1) throw InvalidInput("bias_bound: dimension must be >= 1");
  if (n_samples < 1) throw InvalidInput("bias_bound: sample count must be >= 1");
  check_bounds(z1, z2);
  const double n_alpha = static_cast<double>(n_samples) * alpha.alpha;
  return 1.5 * std::sqrt(5.0 * static_cast<double>(n) * std::numbers::pi / n_alpha) * (z2 - z1);
}

double concentration_tail(RiskLevel alpha, double z1, double z2, long n_samples, double z) {
  if (n_samples < 1) throw InvalidInput("concentration_tail: sample count must be >= 1");
  if (!(z >= 0.0)) throw InvalidInput("concentration_tail: z must be nonnegative");
  check_bounds(z1, z2);
  const double width = z2 - z1;
  if (width == 0.0) return z > 0.0 ? 0.0 : 1.0;
  const double ratio = z / width;
  const double bound =
      3.0 * std::exp(-0.2 * alpha.alpha * ratio * ratio * static_cast<double>(n_samples));
  return std::min(1.0, bound);
}

double required_bias(BoundVariant variant, const ComplexityInputs& in) {
  check_inputs(variant, in);
  return variant_factor(variant, in) * in.c_f * in.epsilon * in.epsilon / in.h_plus;
}

long required_samples(BoundVariant variant, const ComplexityInputs& in) {
  check_inputs(variant, in);
  const double width = in.z2 - in.z1;
  const double denom = in.epsilon * in.epsilon * in.c_f * variant_factor(variant, in);
  const double ratio = in.h_plus * width / denom;
  const double bound =
      (45.0 * static_cast<double>(in.n) * std::numbers::pi / (4.0 * in.alpha.alpha)) * ratio * ratio;
  if (!(bound < 9.0e18)) throw InvalidInput("required_samples: bound overflows a 64-bit count");
  double n = std::ceil(bound);
  if (n == bound) n += 1.0;  // strict inequality when the bound is an exact integer
  return std::max(1L, static_cast<long>(n));
}

}  // namespace cvarvi
