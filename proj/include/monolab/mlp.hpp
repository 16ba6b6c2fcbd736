#pragma once
// Small fully connected network with explicit forward/backward passes. Serves
// as the contrastive encoder and as the trainable half of joint finetuning.

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace monolab {

struct Linear {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
};

struct MlpConfig {
  std::vector<int> dims;  // input, hidden..., output widths
  bool nonneg_output = false;  // ReLU on the final layer too
  uint64_t seed = 0;
};

// Per-batch activations kept for the backward pass. input holds the batch,
// pre[l] the pre-activation of layer l (rows = samples).
struct MlpTrace {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;
};

// ReLU between layers; the output layer is linear unless nonneg_output is set.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(const MlpConfig& cfg);

  // X rows are samples. Fills trace when given so backward can reuse it.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& X, MlpTrace* trace = nullptr) const;

  // d_out is dLoss/d(output), same shape as forward's result. Fills parameter
  // gradients (same shapes as layers()) and returns dLoss/d(input).
  Eigen::MatrixXd backward(const MlpTrace& trace, const Eigen::MatrixXd& d_out,
                           std::vector<Linear>* grads) const;

  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }
  bool nonneg_output() const { return nonneg_output_; }
  int in_dim() const;
  int out_dim() const;
  uint64_t checksum() const;

 private:
  std::vector<Linear> layers_;
  bool nonneg_output_ = false;
};

}  // namespace monolab
