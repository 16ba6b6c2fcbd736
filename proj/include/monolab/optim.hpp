#pragma once
// Shared training plumbing: the config every trainer takes, a small optimizer
// that updates parameter blocks in place, and the deterministic epoch shuffle.

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "monolab/rng.hpp"

namespace monolab {

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 1000;
  int batch_size = 0;  // 0 = full batch
  uint64_t seed = 0;
  enum class Optimizer { sgd, adam };
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Plain SGD or Adam over an arbitrary set of parameter blocks. Blocks are
// identified by the slot index the caller passes; moment buffers are sized
// lazily on first use. Call begin_step once per optimizer step, then update
// once per block.
class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& cfg) : cfg_(cfg) {}

  void begin_step() { ++step_; }

  void update(double* param, const double* grad, Eigen::Index n, int slot) {
    Eigen::Map<Eigen::ArrayXd> p(param, n);
    Eigen::Map<const Eigen::ArrayXd> g(grad, n);
    if (cfg_.optimizer == TrainConfig::Optimizer::sgd) {
      p -= cfg_.learning_rate * g;
      return;
    }
    if (slot >= static_cast<int>(m_.size())) {
      m_.resize(slot + 1);
      v_.resize(slot + 1);
    }
    if (m_[slot].size() != n) {
      m_[slot] = Eigen::ArrayXd::Zero(n);
      v_[slot] = Eigen::ArrayXd::Zero(n);
    }
    m_[slot] = cfg_.beta1 * m_[slot] + (1.0 - cfg_.beta1) * g;
    v_[slot] = cfg_.beta2 * v_[slot] + (1.0 - cfg_.beta2) * g.square();
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    p -= cfg_.learning_rate * (m_[slot] / bc1) /
         ((v_[slot] / bc2).sqrt() + cfg_.eps);
  }

 private:
  TrainConfig cfg_;
  int step_ = 0;
  std::vector<Eigen::ArrayXd> m_, v_;
};

// Fisher-Yates permutation of {0, ..., n-1} from a named stream; one substream
// per epoch so minibatch order is reproducible at any parallelism.
inline std::vector<int> shuffled_indices(int n, std::string_view stream_name,
                                         uint64_t seed, uint64_t epoch) {
  if (n < 0) throw std::invalid_argument("shuffled_indices: negative n");
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  RandomStream rng(stream_name, seed, epoch);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.next_below(static_cast<uint64_t>(i) + 1));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  return idx;
}

// FNV-1a over raw parameter bytes; used by frozen-weight tests.
inline uint64_t bytes_checksum(const void* data, size_t num_bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < num_bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace monolab
