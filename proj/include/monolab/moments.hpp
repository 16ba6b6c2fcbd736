#pragma once
// Shared vocabulary of the two theory modules. The closed-form module and the
// Monte-Carlo oracle must not share any formulas; this header is the only thing
// they have in common.

namespace monolab {

// Class-conditional first and second moments of one scalar feature under one
// noise condition.
struct Moments {
  double mu0 = 0.0;
  double mu1 = 0.0;
  double var0 = 0.0;
  double var1 = 0.0;
};

enum class FeatureKind { mono, poly };

enum class NoiseKind { label, gaussian };

}  // namespace monolab
