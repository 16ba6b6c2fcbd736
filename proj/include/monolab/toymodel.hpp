#pragma once
// Bottleneck autoencoder h = W^T W x trained on reconstruction MSE, the direct
// feature constructions used throughout the robustness experiments, and the
// Gram-matrix diagnostics that reveal superposition.

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

#include "monolab/dataset.hpp"
#include "monolab/optim.hpp"

namespace monolab {

struct ToyModel {
  Eigen::MatrixXd W;  // m x n, m < n
  Eigen::VectorXd b;  // n, used only by the relu_output variant
  bool relu_output = false;  // reconstruct via ReLU(W^T W x + b)
};

// How to turn raw inputs into the feature matrix a probe sees.
struct FeatureConstruction {
  enum class Kind { mono_direct, poly_antipodal, learned_hidden };
  Kind kind = Kind::mono_direct;
  std::vector<int> indices;                      // mono_direct: selected coordinates
  std::vector<std::pair<int, int>> signed_pairs; // poly_antipodal: (plus, minus)
};

// Full-batch adaptive-moment descent; the benign toy landscape needs nothing
// fancier and full batches keep runs bit-reproducible.
inline TrainConfig toy_default_train_config() {
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 5000;
  cfg.batch_size = 0;
  return cfg;
}

// Rows of X are samples; each row x maps to W^T W x (plus bias and ReLU in the
// variant). Throws on width mismatch.
Eigen::MatrixXd reconstruct(const ToyModel& model, const Eigen::MatrixXd& X);

// Mean over rows of ||reconstruct(x) - x||^2; fills analytic gradients when the
// out-pointers are given (db stays zero for the plain variant).
double reconstruction_loss(const ToyModel& model, const Eigen::MatrixXd& X,
                           Eigen::MatrixXd* dW = nullptr,
                           Eigen::VectorXd* db = nullptr);

// Minimizes mean ||reconstruct(x) - x||^2. W starts Gaussian scaled 1/sqrt(n),
// bias at zero. Loss per epoch lands in loss_history when given. Throws if the
// loss goes non-finite, naming the epoch.
ToyModel train_reconstruction(const Dataset& data, int m, const TrainConfig& cfg,
                              bool relu_variant = false,
                              std::vector<double>* loss_history = nullptr);

Eigen::MatrixXd gram(const ToyModel& model);  // W^T W exactly

// Coordinates the model actually represents: diagonal of the Gram above tau.
std::vector<int> represented_features(const Eigen::MatrixXd& gram_matrix,
                                      double tau = 0.5);

// Coordinate pairs embedded in opposite directions: off-diagonals below tau_neg.
std::vector<std::pair<int, int>> antipodal_pairs(const Eigen::MatrixXd& gram_matrix,
                                                 double tau_neg = -0.5);

// mono_direct: selected columns. poly_antipodal: one signed difference per pair.
// learned_hidden: rows map through W (model required).
Eigen::MatrixXd extract_features(const Eigen::MatrixXd& X,
                                 const FeatureConstruction& construction,
                                 const ToyModel* model = nullptr);

uint64_t toy_checksum(const ToyModel& model);

}  // namespace monolab
