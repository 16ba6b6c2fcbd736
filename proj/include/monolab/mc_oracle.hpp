#pragma once
// Brute-force Monte-Carlo estimators for every quantity the closed-form module
// computes, built only from the data-generating definitions: draw (x1, x2) with
// per-coordinate sparsity S, label y = [x1 > x2], optionally flip the binary label
// with probability eta or add lambda * N(0,1) to each coordinate, then measure the
// conditional moments of the chosen scalar feature. Shares nothing with the
// closed-form module beyond the Moments type.

#include "monolab/moments.hpp"

#include <cstdint>

namespace monolab::mc_oracle {

struct McConfig {
  long long num_samples = 10'000'000;
  uint64_t seed = 0;
  double S = 0.2;
  double eta = 0.0;     // binary label flip probability
  double lambda = 0.0;  // gaussian input-noise strength
  int num_threads = 0;  // 0 = hardware concurrency
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct MomentsEstimate {
  Moments m;
  Moments se;  // per-field standard errors
  long long count0 = 0;
  long long count1 = 0;
};

// Conditional means/variances of the feature with standard errors. Population-form
// variance (divide by count). Throws when either class receives < 30 samples.
MomentsEstimate estimate_moments(FeatureKind kind, const McConfig& cfg);

// Empirical P(x1 - x2 <= x) on the clean pair distribution, with binomial SE.
McEstimate empirical_pair_cdf(double x, const McConfig& cfg);

// Empirical P(y = 0) on the clean pair distribution (both-zero ties are class 0).
McEstimate empirical_class0_prior(const McConfig& cfg);

struct CrossingGrid {
  double grid_min = 0.0;
  double grid_max = 0.0;
  double grid_step = 0.0;
};

// Scans the noise level over the grid, computes J = |mu1-mu0|/(sigma0*sigma1) from
// the estimated moments of both features, and returns the midpoint of the first
// sign change of J(mono) - J(poly), with a half-grid-width error bar. The same seed
// is reused across grid points (common random numbers) so the sign change is sharp.
// Throws when the grid shows no sign change.
McEstimate estimate_crossing(NoiseKind kind, double S, const CrossingGrid& grid,
                             const McConfig& cfg);

}  // namespace monolab::mc_oracle
