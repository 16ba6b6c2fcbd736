#pragma once
// Interpretability metrics over feature activations: per-dimension semantic
// consistency, salient probe dimensions, per-sample top-dimension scores split
// by classification outcome, and exact-zero sparsity.

#include <Eigen/Core>

#include <vector>

#include "monolab/probe.hpp"

namespace monolab {

struct DimensionConsistency {
  bool defined = false;     // some sample activated this dimension
  double score = 0.0;       // modal-class fraction among activated samples
  int activated_count = 0;
  int dominant_class = -1;  // lowest index among modal classes
};

struct ConsistencyReport {
  std::vector<DimensionConsistency> dims;
  double mean_score = 0.0;     // over defined dimensions, 0 if none
  double dead_fraction = 0.0;  // dimensions no sample activates
  int num_classes = 0;
};

// Activated means feature > epsilon. Per dimension, the score is the fraction
// of activated samples whose label matches the modal class there; dimensions
// nobody activates are reported undefined and excluded from mean_score.
ConsistencyReport semantic_consistency(const Eigen::MatrixXd& features,
                                       const std::vector<int>& labels,
                                       int num_classes, double epsilon = 0.0);

// Same score, but "activated" is the top ceil(q * N) samples of each dimension
// (value descending, sample index breaking ties). Meaningful for signed dense
// features where > 0 says nothing; every dimension is defined under this rule.
ConsistencyReport semantic_consistency_quantile(const Eigen::MatrixXd& features,
                                                const std::vector<int>& labels,
                                                int num_classes, double q = 0.05);

// Index of the largest classifier weight for the class, ties to the lowest.
int salient_dimension_per_class(const ProbeModel& probe, int class_index);

struct SplitScores {
  std::vector<double> correct;
  std::vector<double> incorrect;
};

// Each sample contributes the consistency score of its own most-activated
// dimension (argmax, ties to the lowest index), routed by correct_mask.
// Samples whose top dimension is undefined in the report are skipped.
SplitScores per_sample_top_dimension_consistency(const Eigen::MatrixXd& features,
                                                 const ConsistencyReport& report,
                                                 const std::vector<bool>& correct_mask);

// Fraction of exactly-zero entries.
double activation_sparsity(const Eigen::MatrixXd& features);

}  // namespace monolab
