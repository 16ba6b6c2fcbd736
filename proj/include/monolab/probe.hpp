#pragma once
// Linear classification over feature maps: plain cross-entropy, the
// non-negative variant that routes features through ReLU, and the symmetric
// (noise-robust) cross-entropy. Probes train on frozen features or jointly
// with an encoder.

#include <Eigen/Core>

#include <vector>

#include "monolab/mlp.hpp"
#include "monolab/optim.hpp"

namespace monolab {

struct ProbeModel {
  Eigen::MatrixXd weights;  // C x d
  Eigen::VectorXd bias;     // C
  bool relu_features = false;  // forward through max(features, 0)
};

struct ProbeConfig {
  enum class Loss { ce, nce, sce };
  Loss loss = Loss::ce;
  double sce_alpha = 1.0;
  double sce_beta = 1.0;
  double sce_floor = -4.0;  // finite stand-in for log 0 in the reverse term
  enum class Mode { frozen_features, finetune };
  Mode mode = Mode::frozen_features;
  double subsample_fraction = 1.0;  // fraction of training rows actually used
  TrainConfig train;
};

// Mean over rows of -log softmax(logits)[label]; d_logits (same shape, already
// divided by the row count) filled when given.
double ce_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
               Eigen::MatrixXd* d_logits = nullptr);

// alpha * CE + beta * reverse-CE where the one-hot target's log 0 is clamped
// to floor_log, making the reverse term -floor_log * (1 - p_label).
double sce_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                double alpha, double beta, Eigen::MatrixXd* d_logits = nullptr,
                double floor_log = -4.0);

// Rows of F are samples; applies the probe's ReLU convention when set.
Eigen::MatrixXd probe_logits(const ProbeModel& probe, const Eigen::MatrixXd& F);

// Minibatch descent from a zero-initialized probe on fixed features. The nce
// loss trains (and tags the returned probe) with the ReLU forward map. Throws
// on divergence, naming the epoch.
ProbeModel train_probe(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                       int num_classes, const ProbeConfig& cfg);

// Frozen mode computes features once and never touches the encoder; finetune
// mode updates encoder and probe jointly.
ProbeModel train_probe_on_encoder(Mlp& encoder, const Eigen::MatrixXd& X,
                                  const std::vector<int>& labels, int num_classes,
                                  const ProbeConfig& cfg);

// Top-1 accuracy; ties resolve to the lowest class index.
double evaluate_probe(const ProbeModel& probe, const Eigen::MatrixXd& features,
                      const std::vector<int>& labels);

// Predicted class per row under the same tie rule.
std::vector<int> probe_predictions(const ProbeModel& probe,
                                   const Eigen::MatrixXd& features);

}  // namespace monolab
