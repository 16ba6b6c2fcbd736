#include "monolab/separability.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace monolab::separability {

namespace {

void require_sparsity(double S) {
  if (S < 0.0 || S >= 1.0)
    throw std::invalid_argument("sparsity must lie in [0,1); the S=1 distribution is degenerate");
}

}  // namespace

Moments mono_moments(double S) {
  require_sparsity(S);
  Moments m;
  m.mu0 = (1.0 / 3.0) * (1.0 - S) * (1.0 - S) / (1.0 + S * S);
  m.mu1 = (1.0 / 3.0) * (2.0 + S) / (1.0 + S);
  m.var0 = (1.0 / 6.0) * (1.0 - S) * (1.0 - S) / (1.0 + S * S) - m.mu0 * m.mu0;
  m.var1 = (1.0 / 6.0) * (3.0 + S) / (1.0 + S) - m.mu1 * m.mu1;
  return m;
}

Moments poly_moments(double S) {
  require_sparsity(S);
  Moments m;
  m.mu0 = -(1.0 / 3.0) * (1.0 - S) * (1.0 + 2.0 * S) / (1.0 + S * S);
  m.mu1 = (1.0 / 3.0) * (1.0 + 2.0 * S) / (1.0 + S);
  m.var0 = (1.0 / 6.0) * (1.0 - S) * (1.0 + 3.0 * S) / (1.0 + S * S) - m.mu0 * m.mu0;
  m.var1 = (1.0 / 6.0) * (1.0 + 3.0 * S) / (1.0 + S) - m.mu1 * m.mu1;
  return m;
}

double poly_cdf(double x, double S) {
  require_sparsity(S);
  if (x < -1.0 || x > 1.0) throw std::invalid_argument("poly_cdf requires x in [-1,1]");
  if (x >= 0.0) {
    const double t = 1.0 - (1.0 - S) * x;
    return 1.0 + S * S / 2.0 - t * t / 2.0;
  }
  const double t = (1.0 - S) * x + 1.0;
  return t * t / 2.0 - S * S / 2.0;
}

double class0_prior(double S) {
  require_sparsity(S);
  return (1.0 + S * S) / 2.0;
}

double criterion_J(const Moments& m) {
  if (m.var0 <= 0.0 || m.var1 <= 0.0)
    throw std::invalid_argument("criterion J needs strictly positive variances");
  return std::abs(m.mu1 - m.mu0) / (std::sqrt(m.var0) * std::sqrt(m.var1));
}

namespace {

// Noisy class c is a mixture of the clean classes: weight of clean class 0 in noisy
// class 0 is (1-eta)P0 / ((1-eta)P0 + eta P1), and so on, with P0 = (1+S^2)/2.
Moments mix_label_noise(const Moments& m, double S, double eta) {
  const double S2 = S * S;
  const double d0 = 1.0 + (1.0 - 2.0 * eta) * S2;
  const double d1 = 1.0 - (1.0 - 2.0 * eta) * S2;
  const double c00 = (1.0 - eta) * (1.0 + S2) / d0;
  const double c01 = eta * (1.0 - S2) / d0;
  const double c10 = eta * (1.0 + S2) / d1;
  const double c11 = (1.0 - eta) * (1.0 - S2) / d1;
  const double second0 = m.var0 + m.mu0 * m.mu0;
  const double second1 = m.var1 + m.mu1 * m.mu1;
  Moments out;
  out.mu0 = c00 * m.mu0 + c01 * m.mu1;
  out.mu1 = c10 * m.mu0 + c11 * m.mu1;
  out.var0 = c00 * second0 + c01 * second1 - out.mu0 * out.mu0;
  out.var1 = c10 * second0 + c11 * second1 - out.mu1 * out.mu1;
  return out;
}

}  // namespace

std::pair<Moments, Moments> label_noise_transform(const Moments& clean_mono,
                                                  const Moments& clean_poly, double S,
                                                  double eta) {
  require_sparsity(S);
  if (eta < 0.0 || eta >= 0.5)
    throw std::invalid_argument("label-noise rate must lie in [0, 1/2)");
  return {mix_label_noise(clean_mono, S, eta), mix_label_noise(clean_poly, S, eta)};
}

Moments gaussian_noise_transform(const Moments& m, FeatureKind kind, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("noise strength must be >= 0");
  const double bump = kind == FeatureKind::mono ? lambda * lambda : 2.0 * lambda * lambda;
  Moments out = m;  // means bit-identical by construction
  out.var0 += bump;
  out.var1 += bump;
  return out;
}

Moments moments_under_noise(FeatureKind kind, double S, double eta, double lambda) {
  if (eta > 0.0 && lambda > 0.0)
    throw std::invalid_argument("combined label and input noise is not modeled");
  if (eta < 0.0 || eta >= 0.5)
    throw std::invalid_argument("label-noise rate must lie in [0, 1/2)");
  Moments m = kind == FeatureKind::mono ? mono_moments(S) : poly_moments(S);
  if (eta > 0.0) m = mix_label_noise(m, S, eta);
  if (lambda > 0.0) m = gaussian_noise_transform(m, kind, lambda);
  return m;
}

SeparabilityReport evaluate_condition(FeatureKind kind, double S, double eta,
                                      double lambda) {
  const Moments m = moments_under_noise(kind, S, eta, lambda);
  SeparabilityReport rep;
  rep.kind = kind;
  rep.S = S;
  rep.eta = eta;
  rep.lambda = lambda;
  rep.delta_mu = std::abs(m.mu1 - m.mu0);
  rep.J = criterion_J(m);
  return rep;
}

double find_crossing(double S, NoiseKind kind) {
  require_sparsity(S);
  const bool label = kind == NoiseKind::label;
  const double lo_end = 0.0;
  const double hi_end = label ? 0.5 - 1e-9 : 3.0;
  auto diff = [&](double t) {
    const double eta = label ? t : 0.0;
    const double lambda = label ? 0.0 : t;
    return evaluate_condition(FeatureKind::mono, S, eta, lambda).J -
           evaluate_condition(FeatureKind::poly, S, eta, lambda).J;
  };

  // Validate the sign structure on a coarse grid: exactly one negative-to-nonnegative
  // change, which also brackets the bisection.
  constexpr int kGrid = 512;
  double lo = lo_end, hi = -1.0;
  int changes = 0;
  double prev = diff(lo_end);
  if (prev >= 0.0) return lo_end;  // degenerate: already crossed at zero noise
  for (int k = 1; k <= kGrid; ++k) {
    const double t = lo_end + (hi_end - lo_end) * k / kGrid;
    const double d = diff(t);
    if (prev < 0.0 && d >= 0.0) {
      ++changes;
      if (changes == 1) {
        lo = lo_end + (hi_end - lo_end) * (k - 1) / kGrid;
        hi = t;
      }
    }
    prev = d;
  }
  if (changes == 0)
    throw std::domain_error("no separability crossing in the valid noise range");
  if (changes > 1)
    throw std::domain_error("sign structure is not monotone near the crossing");

  while (hi - lo > 1e-4) {
    const double mid = 0.5 * (lo + hi);
    (diff(mid) >= 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace monolab::separability
