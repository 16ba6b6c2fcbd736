#pragma once
// Low-rank adapters on dense layers: the standard additive update W0 x + A(Bx)
// and a mono variant that wraps every stage of the update in a ReLU, keeping
// the adapter's activations and its contribution non-negative. Also hosts the
// toy classifier finetuning task that tracks accuracy and adapter sparsity.

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "monolab/mlp.hpp"
#include "monolab/optim.hpp"

namespace monolab {

struct AdapterPair {
  enum class Variant { standard, mono };
  Eigen::MatrixXd W0;  // d x k, frozen base weight
  Eigen::MatrixXd A;   // d x r, zero at init so step 0 matches the base
  Eigen::MatrixXd B;   // r x k, small Gaussian
  Variant variant = Variant::standard;
  // mono only: clamp the input itself before B (the default form); when off,
  // the ReLU chain starts at Bx instead.
  bool relu_input = true;
};

// B entries ~ N(0, 1/k), A = 0. Requires 1 <= rank <= min(d, k) / 2.
AdapterPair make_adapter(const Eigen::MatrixXd& W0, int rank,
                         AdapterPair::Variant variant, uint64_t seed,
                         uint64_t substream = 0);

// standard: W0 x + A(Bx); mono: W0 x + ReLU(A ReLU(B ReLU(x))). Rows of X are
// samples; the vector overload is the single-sample form.
Eigen::MatrixXd adapter_forward_batch(const AdapterPair& adapter,
                                      const Eigen::MatrixXd& X);
Eigen::VectorXd adapter_forward(const AdapterPair& adapter, const Eigen::VectorXd& x);

// Gradients of sum(d_out .* forward) with respect to A and B; returns the
// matching gradient with respect to X (base path plus adapter branch).
Eigen::MatrixXd adapter_backward(const AdapterPair& adapter, const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& d_out, Eigen::MatrixXd* dA,
                                 Eigen::MatrixXd* dB);

// Fraction of exactly-zero entries in the stage feeding A over the batch:
// post-ReLU(B ReLU(x)) for mono, Bx for standard.
double adapter_activation_sparsity(const AdapterPair& adapter,
                                   const Eigen::MatrixXd& X);

uint64_t adapter_checksum(const AdapterPair& adapter);

// A classifier with adapters attached to some of its layers. The base network
// and every W0 stay frozen; only A and B train.
struct AdaptedModel {
  Mlp base;
  std::vector<int> layer_index;       // which base layers carry adapters
  std::vector<AdapterPair> adapters;  // parallel to layer_index
};

// layers empty means all of them. Adapter at layer l draws init substream l.
AdaptedModel attach_adapters(const Mlp& base, int rank, AdapterPair::Variant variant,
                             const std::vector<int>& layers, uint64_t seed);

// Forward pass where each adapted layer adds its adapter contribution to the
// pre-activation before the layer's own nonlinearity.
Eigen::MatrixXd adapted_forward(const AdaptedModel& model, const Eigen::MatrixXd& X);

// Mean adapter_activation_sparsity over the adapted layers, each measured at
// that adapter's own input activations.
double adapted_activation_sparsity(const AdaptedModel& model,
                                   const Eigen::MatrixXd& X);

struct FinetuneConfig {
  double alpha = 4.0;    // adapter steps use learning_rate * alpha / rank
  double dropout = 0.0;  // adapter-branch input dropout while training
  TrainConfig train;
};

struct FinetuneEpoch {
  double train_acc = 0.0;
  double val_acc = 0.0;
  double sparsity = 0.0;
};

struct FinetuneReport {
  std::vector<FinetuneEpoch> epochs;
};

// Cross-entropy finetuning of the adapters alone; the base network never
// moves. One report row per epoch, evaluated after that epoch's updates with
// dropout off.
FinetuneReport finetune_toy(AdaptedModel& model, const Eigen::MatrixXd& X_train,
                            const std::vector<int>& y_train,
                            const Eigen::MatrixXd& X_val,
                            const std::vector<int>& y_val,
                            const FinetuneConfig& cfg);

// Plain cross-entropy training of a dense classifier, used to build the bases
// that finetuning starts from.
Mlp train_toy_classifier(const Eigen::MatrixXd& X, const std::vector<int>& y,
                         const MlpConfig& arch, const TrainConfig& cfg);

}  // namespace monolab
