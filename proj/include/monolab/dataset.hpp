#pragma once
// Synthetic sparse-uniform data with argmax labels, plus the label/input noise
// models used by every experiment.

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace monolab {

struct DataSpec {
  int num_samples = 0;
  int num_features = 0;  // number of latent concepts n
  double sparsity = 0.0;  // probability a coordinate is exactly 0
  uint64_t seed = 0;
};

struct Dataset {
  Eigen::MatrixXd X;   // num_samples x num_features, entries in [0,1]
  std::vector<int> y;  // argmax labels in {0, ..., num_features-1}
  DataSpec spec;
};

struct NoiseSpec {
  enum class Kind { label_symmetric, input_gaussian, input_uniform };
  Kind kind = Kind::input_gaussian;
  double rate_or_strength = 0.0;  // eta for labels, stddev or half-width for inputs
  uint64_t seed = 0;
};

// Each coordinate is 0 with probability S, otherwise Uniform(0,1]. Rows that come
// out all-zero are resampled (argmax labels are undefined there). Ties between
// equal maxima break to the lowest index.
Dataset generate(const DataSpec& spec);

// Symmetric label noise: with probability eta, replace the label by a uniform draw
// over the other num_classes-1 classes.
std::vector<int> flip_labels(const std::vector<int>& y, int num_classes, double eta,
                             uint64_t seed);

// Additive input noise, gaussian (stddev = rate_or_strength) or uniform on
// (-w, w). Outputs are intentionally not clipped to [0,1].
Eigen::MatrixXd perturb_inputs(const Eigen::MatrixXd& X, const NoiseSpec& spec);

void save_dataset_binary(const Dataset& data, const std::string& path);
Dataset load_dataset_binary(const std::string& path);
void save_dataset_csv(const Dataset& data, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

}  // namespace monolab
