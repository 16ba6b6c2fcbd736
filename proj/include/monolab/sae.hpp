#pragma once
// Top-K sparse autoencoder over frozen feature matrices. The sparse latent is
// the monosemantic feature map downstream probes consume.

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "monolab/optim.hpp"

namespace monolab {

struct SaeParams {
  Eigen::MatrixXd W_enc;  // h x d
  Eigen::MatrixXd W_dec;  // d x h
  Eigen::VectorXd b_pre;  // d
  Eigen::VectorXd b_enc;  // h
  int K = 1;
};

struct SaeTrainReport {
  std::vector<double> loss_history;     // mean squared error per epoch
  double dead_latent_fraction = 0.0;    // latents never active on the train set
};

// Keeps the K largest entries by value, zeros the rest; equal values keep the
// lower index.
Eigen::VectorXd topk(const Eigen::VectorXd& v, int K);

// z = topk(W_enc (f - b_pre) + b_enc, K); at most K nonzeros by construction.
Eigen::VectorXd encode(const SaeParams& params, const Eigen::VectorXd& f);
Eigen::MatrixXd encode_batch(const SaeParams& params, const Eigen::MatrixXd& F);

// f_hat = W_dec z + b_pre.
Eigen::VectorXd decode(const SaeParams& params, const Eigen::VectorXd& z);
Eigen::MatrixXd decode_batch(const SaeParams& params, const Eigen::MatrixXd& Z);

// Mean over rows of ||decode(encode(f)) - f||^2 with the straight-through
// convention: gradients flow only through the coordinates the top-K kept.
double sae_loss(const SaeParams& params, const Eigen::MatrixXd& F,
                Eigen::MatrixXd* dW_enc = nullptr, Eigen::MatrixXd* dW_dec = nullptr,
                Eigen::VectorXd* db_pre = nullptr, Eigen::VectorXd* db_enc = nullptr);

// Minimizes the loss above. b_pre starts at the feature mean, W_dec Gaussian
// scaled 1/sqrt(h), W_enc tied to W_dec^T at init, b_enc zero. Decoder columns
// are not norm-constrained unless unit_norm_columns is set.
SaeParams train_sae(const Eigen::MatrixXd& features, int h, int K,
                    const TrainConfig& cfg, SaeTrainReport* report = nullptr,
                    bool unit_norm_columns = false);

}  // namespace monolab
