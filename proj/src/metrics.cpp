#include "monolab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace monolab {

namespace {

void check_inputs(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                  int num_classes) {
  if (num_classes < 1)
    throw std::invalid_argument("consistency: need at least one class");
  if (labels.size() != static_cast<size_t>(features.rows()))
    throw std::invalid_argument("consistency: labels/rows mismatch");
  for (int label : labels)
    if (label < 0 || label >= num_classes)
      throw std::invalid_argument("consistency: label out of range");
}

// Scores one dimension from the labels of its activated samples.
DimensionConsistency score_dimension(const std::vector<int>& activated_labels,
                                     int num_classes) {
  DimensionConsistency dim;
  dim.activated_count = static_cast<int>(activated_labels.size());
  if (dim.activated_count == 0) return dim;
  std::vector<int> counts(static_cast<size_t>(num_classes), 0);
  for (int label : activated_labels) ++counts[static_cast<size_t>(label)];
  int modal = 0;
  for (int c = 1; c < num_classes; ++c)
    if (counts[static_cast<size_t>(c)] > counts[static_cast<size_t>(modal)]) modal = c;
  dim.defined = true;
  dim.dominant_class = modal;
  dim.score = static_cast<double>(counts[static_cast<size_t>(modal)]) /
              static_cast<double>(dim.activated_count);
  return dim;
}

ConsistencyReport finalize(std::vector<DimensionConsistency> dims, int num_classes) {
  ConsistencyReport report;
  report.num_classes = num_classes;
  double total = 0.0;
  int defined = 0;
  for (const DimensionConsistency& dim : dims) {
    if (!dim.defined) continue;
    total += dim.score;
    ++defined;
  }
  report.mean_score = defined > 0 ? total / defined : 0.0;
  report.dead_fraction =
      dims.empty() ? 0.0
                   : static_cast<double>(dims.size() - static_cast<size_t>(defined)) /
                         static_cast<double>(dims.size());
  report.dims = std::move(dims);
  return report;
}

}  // namespace

ConsistencyReport semantic_consistency(const Eigen::MatrixXd& features,
                                       const std::vector<int>& labels,
                                       int num_classes, double epsilon) {
  check_inputs(features, labels, num_classes);
  if (epsilon < 0.0) throw std::invalid_argument("consistency: epsilon must be >= 0");
  std::vector<DimensionConsistency> dims;
  dims.reserve(static_cast<size_t>(features.cols()));
  std::vector<int> activated;
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    activated.clear();
    for (Eigen::Index i = 0; i < features.rows(); ++i)
      if (features(i, j) > epsilon) activated.push_back(labels[static_cast<size_t>(i)]);
    dims.push_back(score_dimension(activated, num_classes));
  }
  return finalize(std::move(dims), num_classes);
}

ConsistencyReport semantic_consistency_quantile(const Eigen::MatrixXd& features,
                                                const std::vector<int>& labels,
                                                int num_classes, double q) {
  check_inputs(features, labels, num_classes);
  if (q <= 0.0 || q > 1.0)
    throw std::invalid_argument("consistency: quantile must be in (0, 1]");
  const Eigen::Index num_rows = features.rows();
  if (num_rows == 0) throw std::invalid_argument("consistency: empty batch");
  const auto k = static_cast<size_t>(
      std::min<double>(static_cast<double>(num_rows),
                       std::ceil(q * static_cast<double>(num_rows))));
  std::vector<Eigen::Index> order(static_cast<size_t>(num_rows));
  std::vector<DimensionConsistency> dims;
  dims.reserve(static_cast<size_t>(features.cols()));
  std::vector<int> activated;
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        if (features(a, j) != features(b, j))
                          return features(a, j) > features(b, j);
                        return a < b;
                      });
    activated.clear();
    for (size_t t = 0; t < k; ++t)
      activated.push_back(labels[static_cast<size_t>(order[t])]);
    dims.push_back(score_dimension(activated, num_classes));
  }
  return finalize(std::move(dims), num_classes);
}

int salient_dimension_per_class(const ProbeModel& probe, int class_index) {
  if (class_index < 0 || class_index >= probe.weights.rows())
    throw std::invalid_argument("salient dimension: class out of range");
  Eigen::Index best;
  probe.weights.row(class_index).maxCoeff(&best);
  return static_cast<int>(best);
}

SplitScores per_sample_top_dimension_consistency(const Eigen::MatrixXd& features,
                                                 const ConsistencyReport& report,
                                                 const std::vector<bool>& correct_mask) {
  if (report.dims.size() != static_cast<size_t>(features.cols()))
    throw std::invalid_argument("top-dimension split: report/features mismatch");
  if (correct_mask.size() != static_cast<size_t>(features.rows()))
    throw std::invalid_argument("top-dimension split: mask/rows mismatch");
  SplitScores split;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    Eigen::Index top;
    features.row(i).maxCoeff(&top);
    const DimensionConsistency& dim = report.dims[static_cast<size_t>(top)];
    if (!dim.defined) continue;
    (correct_mask[static_cast<size_t>(i)] ? split.correct : split.incorrect)
        .push_back(dim.score);
  }
  return split;
}

double activation_sparsity(const Eigen::MatrixXd& features) {
  if (features.size() == 0)
    throw std::invalid_argument("activation sparsity: empty matrix");
  return (features.array() == 0.0).cast<double>().sum() /
         static_cast<double>(features.size());
}

}  // namespace monolab
