#pragma once
// Contrastive pretraining on the synthetic data: standard InfoNCE and the
// non-negative variant that ReLUs embeddings before the similarity, which
// drives representations sparse.

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

#include "monolab/dataset.hpp"
#include "monolab/mlp.hpp"
#include "monolab/optim.hpp"

namespace monolab {

struct AugmentSpec {
  double gaussian_std = 0.0;
  double mask_prob = 0.0;
  uint64_t seed = 0;
};

// One anchor against one positive and M negatives, all d-vectors. With
// g = ReLU when nonneg (identity otherwise) and s(u) = g(anchor) . g(u):
//   loss = -log[ exp(s(pos)) / (exp(s(pos)) + (1/M) sum_i exp(s(neg_i))) ]
// computed via a stabilized log-sum-exp; analytic gradients on request.
double infonce_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                    const Eigen::MatrixXd& negatives, bool nonneg,
                    Eigen::VectorXd* d_anchor = nullptr,
                    Eigen::VectorXd* d_positive = nullptr,
                    Eigen::MatrixXd* d_negatives = nullptr);

// Batched loss where each row's negatives are the other rows of `anchors`
// (the in-batch convention pretraining uses). Gradients are with respect to
// both embedding matrices. Matches per-anchor infonce_loss averaged over rows.
double infonce_batch_loss(const Eigen::MatrixXd& anchors,
                          const Eigen::MatrixXd& positives, bool nonneg,
                          Eigen::MatrixXd* d_anchors = nullptr,
                          Eigen::MatrixXd* d_positives = nullptr);

// Two correlated views per row: independent Gaussian jitter, then independent
// coordinate masking, so mask_prob = 1 yields zero vectors. The substream
// picks an independent draw for the same spec (pretraining uses one per batch).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> augment(const Eigen::MatrixXd& X,
                                                    const AugmentSpec& spec,
                                                    uint64_t substream = 0);

struct PretrainConfig {
  MlpConfig encoder;       // dims must start at the data width
  bool nonneg = false;     // ReLU on embeddings inside the loss
  AugmentSpec augment;     // per-batch view generation (seed field ignored)
  TrainConfig train;
};

// Minibatch InfoNCE with in-batch negatives. The encoder's own nonneg_output
// flag is independent of the loss-side ReLU; pretraining with nonneg uses a
// nonneg-output encoder so downstream activations stay non-negative.
Mlp pretrain(const Dataset& data, const PretrainConfig& cfg,
             std::vector<double>* loss_history = nullptr);

}  // namespace monolab
