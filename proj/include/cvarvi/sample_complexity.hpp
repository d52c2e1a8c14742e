#ifndef CVARVI_SAMPLE_COMPLEXITY_HPP
#define CVARVI_SAMPLE_COMPLEXITY_HPP

#include "cvarvi/cvar.hpp"

namespace cvarvi {

enum class BoundVariant { penalty, multiplier };

struct ComplexityInputs {
  int n = 1;                   // dimension of the map
  RiskLevel alpha;             // risk level
  double z1 = 0.0, z2 = 0.0;   // cost bounds, z1 <= z2
  double c_f = 0.0;            // strong monotonicity constant, > 0
  double h_plus = 0.0;         // max distance from iterates to the set, > 0
  double c_d = 0.0;            // penalty variant only, > 1
  double epsilon = 0.0;        // target accuracy, > 0
};

// Upper bound on the estimator bias norm from N shared-event samples:
//   (3/2) sqrt(5 n pi / (N alpha)) (z2 - z1)
double bias_bound(int n, RiskLevel alpha, double z1, double z2, long n_samples);

// Upper bound on P[ CVaR - empirical CVaR >= z ], capped at 1:
//   min(1, 3 exp( -(alpha/5) (z / (z2 - z1))^2 N ))
// Returns 0 when z1 = z2 and z > 0 (no deviation is possible).
double concentration_tail(RiskLevel alpha, double z1, double z2, long n_samples, double z);

// Largest admissible bias norm that still guarantees convergence to an
// epsilon neighborhood: (1 - 1/c_d) c_F eps^2 / h_+ for the penalty scheme,
// c_F eps^2 / h_+ for the multiplier scheme.
double required_bias(BoundVariant variant, const ComplexityInputs& in);

// Smallest per-iteration sample count whose bias bound meets required_bias:
//   ceil( (45 n pi / (4 alpha)) ( h_+ (z2 - z1) / (eps^2 c_F [1 - 1/c_d]) )^2 ),
// bumped by one when the bound is an exact integer, and at least 1.
long required_samples(BoundVariant variant, const ComplexityInputs& in);

}  // namespace cvarvi

#endif
