#pragma once
// Closed-form class-conditional moments of the two scalar features built from a
// sparse-uniform pair (x1, x2): the direct feature x1 and the antipodal difference
// x1 - x2, classified by which coordinate is larger. Includes the transforms of
// those moments under symmetric label noise and additive Gaussian input noise, the
// separability criterion J, and crossing-point finders.

#include "monolab/moments.hpp"

#include <utility>

namespace monolab::separability {

// Moments of x1 conditioned on the class y = [x1 > x2]; valid for 0 <= S < 1.
Moments mono_moments(double S);

// Moments of x1 - x2 conditioned on the same class.
Moments poly_moments(double S);

// P(x1 - x2 <= x) for the sparse-uniform pair; piecewise quadratic on [-1, 1].
double poly_cdf(double x, double S);

// P(y = 0) = (1 + S^2) / 2 for the unconditioned pair (ties at zero count as class 0).
double class0_prior(double S);

// |mu1 - mu0| / (sigma0 * sigma1); throws when either variance is zero.
double criterion_J(const Moments& m);

struct SeparabilityReport {
  FeatureKind kind = FeatureKind::mono;
  double S = 0.0;
  double eta = 0.0;
  double lambda = 0.0;
  double delta_mu = 0.0;
  double J = 0.0;
};

// Mixture transform of the class-conditional moments under symmetric label noise
// with rate eta (0 <= eta < 1/2). Returns (noisy mono, noisy poly).
std::pair<Moments, Moments> label_noise_transform(const Moments& clean_mono,
                                                  const Moments& clean_poly, double S,
                                                  double eta);

// Gaussian input noise of strength lambda leaves the means untouched and inflates
// each variance by lambda^2 (mono) or 2*lambda^2 (poly).
Moments gaussian_noise_transform(const Moments& m, FeatureKind kind, double lambda);

// Moments of one feature after applying the requested noise condition to the clean
// closed forms; eta and lambda may not both be nonzero.
Moments moments_under_noise(FeatureKind kind, double S, double eta, double lambda);

// Delta-mu and J for one feature under one noise condition.
SeparabilityReport evaluate_condition(FeatureKind kind, double S, double eta,
                                      double lambda);

// Smallest noise level at which J(mono) >= J(poly), by bisection to abs tol 1e-4.
// Throws when no crossing exists in the valid range.
double find_crossing(double S, NoiseKind kind);

}  // namespace monolab::separability
