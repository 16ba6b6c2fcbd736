#include "monolab/mlp.hpp"

#include <stdexcept>

#include "monolab/optim.hpp"
#include "monolab/rng.hpp"

namespace monolab {

Mlp::Mlp(const MlpConfig& cfg) : nonneg_output_(cfg.nonneg_output) {
  if (cfg.dims.size() < 2) throw std::invalid_argument("mlp: need at least 2 dims");
  for (int d : cfg.dims) {
    if (d < 1) throw std::invalid_argument("mlp: nonpositive layer width");
  }
  RandomStream rng("mlp.init", cfg.seed);
  layers_.resize(cfg.dims.size() - 1);
  for (size_t l = 0; l < layers_.size(); ++l) {
    const int in = cfg.dims[l];
    const int out = cfg.dims[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    layers_[l].W.resize(out, in);
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < in; ++j) layers_[l].W(i, j) = scale * rng.next_normal();
    }
    layers_[l].b = Eigen::VectorXd::Zero(out);
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X, MlpTrace* trace) const {
  if (X.cols() != in_dim()) throw std::invalid_argument("mlp: input width mismatch");
  if (trace) {
    trace->input = X;
    trace->pre.clear();
    trace->pre.reserve(layers_.size());
  }
  Eigen::MatrixXd h = X;
  for (size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd pre =
        (h * layers_[l].W.transpose()).rowwise() + layers_[l].b.transpose();
    if (trace) trace->pre.push_back(pre);
    const bool relu = l + 1 < layers_.size() || nonneg_output_;
    h = relu ? pre.cwiseMax(0.0) : std::move(pre);
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const MlpTrace& trace, const Eigen::MatrixXd& d_out,
                              std::vector<Linear>* grads) const {
  if (trace.pre.size() != layers_.size())
    throw std::invalid_argument("mlp: trace does not match network depth");
  if (!grads) throw std::invalid_argument("mlp: grads output required");
  grads->resize(layers_.size());
  Eigen::MatrixXd d = d_out;
  for (size_t l = layers_.size(); l-- > 0;) {
    const bool relu = l + 1 < layers_.size() || nonneg_output_;
    if (relu) {
      d = d.cwiseProduct((trace.pre[l].array() > 0.0).cast<double>().matrix());
    }
    Eigen::MatrixXd below_act;
    const Eigen::MatrixXd* below = &trace.input;
    if (l > 0) {
      below_act = trace.pre[l - 1].cwiseMax(0.0);
      below = &below_act;
    }
    (*grads)[l].W = d.transpose() * (*below);
    (*grads)[l].b = d.colwise().sum().transpose();
    d = d * layers_[l].W;
  }
  return d;
}

int Mlp::in_dim() const {
  if (layers_.empty()) return 0;
  return static_cast<int>(layers_.front().W.cols());
}

int Mlp::out_dim() const {
  if (layers_.empty()) return 0;
  return static_cast<int>(layers_.back().W.rows());
}

uint64_t Mlp::checksum() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const double* p, Eigen::Index n) {
    const uint64_t part = bytes_checksum(p, sizeof(double) * static_cast<size_t>(n));
    h ^= part;
    h *= 1099511628211ull;
  };
  for (const Linear& layer : layers_) {
    mix(layer.W.data(), layer.W.size());
    mix(layer.b.data(), layer.b.size());
  }
  return h;
}

}  // namespace monolab
