#include "monolab/monolora.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "monolab/probe.hpp"
#include "monolab/rng.hpp"

namespace monolab {

namespace {

void check_adapter_shapes(const AdapterPair& ad, Eigen::Index input_width) {
  if (input_width != ad.W0.cols() || ad.B.cols() != ad.W0.cols() ||
      ad.A.cols() != ad.B.rows() || ad.A.rows() != ad.W0.rows())
    throw std::invalid_argument("adapter: shape mismatch");
}

// Stage values of one adapter branch on a batch (rows = samples).
struct AdapterTrace {
  Eigen::MatrixXd x;        // branch input as used (after any dropout)
  Eigen::MatrixXd xr;       // mono with relu_input: ReLU(x); otherwise x
  Eigen::MatrixXd mid_pre;  // xr B^T
  Eigen::MatrixXd mid;      // mono: ReLU(mid_pre); otherwise mid_pre
  Eigen::MatrixXd out_pre;  // mid A^T
};

Eigen::MatrixXd branch_delta(const AdapterPair& ad, const Eigen::MatrixXd& X,
                             AdapterTrace* tr) {
  check_adapter_shapes(ad, X.cols());
  const bool mono = ad.variant == AdapterPair::Variant::mono;
  Eigen::MatrixXd xr = (mono && ad.relu_input) ? X.cwiseMax(0.0) : X;
  Eigen::MatrixXd mid_pre = xr * ad.B.transpose();
  Eigen::MatrixXd mid = mono ? mid_pre.cwiseMax(0.0) : mid_pre;
  Eigen::MatrixXd out_pre = mid * ad.A.transpose();
  Eigen::MatrixXd delta = mono ? out_pre.cwiseMax(0.0) : out_pre;
  if (tr) {
    tr->x = X;
    tr->xr = std::move(xr);
    tr->mid_pre = std::move(mid_pre);
    tr->mid = std::move(mid);
    tr->out_pre = std::move(out_pre);
  }
  return delta;
}

// The adapter's ReLUs take subgradient 1 at exactly zero: the outer stage's
// preactivation is identically zero at init (A = 0), and a zero subgradient
// there would freeze A forever.
Eigen::MatrixXd branch_backward(const AdapterPair& ad, const AdapterTrace& tr,
                                const Eigen::MatrixXd& d_out, Eigen::MatrixXd* dA,
                                Eigen::MatrixXd* dB) {
  const bool mono = ad.variant == AdapterPair::Variant::mono;
  Eigen::MatrixXd g = d_out;
  if (mono)
    g = g.cwiseProduct((tr.out_pre.array() >= 0.0).cast<double>().matrix());
  *dA = g.transpose() * tr.mid;
  Eigen::MatrixXd gmid = g * ad.A;
  if (mono)
    gmid = gmid.cwiseProduct((tr.mid_pre.array() >= 0.0).cast<double>().matrix());
  *dB = gmid.transpose() * tr.xr;
  Eigen::MatrixXd dx = gmid * ad.B;
  if (mono && ad.relu_input)
    dx = dx.cwiseProduct((tr.x.array() >= 0.0).cast<double>().matrix());
  return dx;
}

double accuracy(const Eigen::MatrixXd& logits, const std::vector<int>& y) {
  int hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best;
    logits.row(i).maxCoeff(&best);
    if (static_cast<int>(best) == y[static_cast<size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

// Forward through the adapted stack; fills per-layer pre-activations and the
// adapter traces when asked. drop, when given, scales each adapter's branch
// input (inverted-dropout masks, parallel to model.adapters).
Eigen::MatrixXd forward_adapted(const AdaptedModel& model, const Eigen::MatrixXd& X,
                                std::vector<Eigen::MatrixXd>* pre_out,
                                std::vector<AdapterTrace>* traces,
                                const std::vector<Eigen::MatrixXd>* drop) {
  const auto& layers = model.base.layers();
  if (model.layer_index.size() != model.adapters.size())
    throw std::invalid_argument("adapted model: index/adapters size mismatch");
  if (pre_out) pre_out->clear();
  if (traces) traces->resize(model.adapters.size());
  Eigen::MatrixXd h = X;
  for (size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd pre =
        (h * layers[l].W.transpose()).rowwise() + layers[l].b.transpose();
    for (size_t ai = 0; ai < model.adapters.size(); ++ai) {
      if (model.layer_index[ai] != static_cast<int>(l)) continue;
      const Eigen::MatrixXd x_in =
          drop ? h.cwiseProduct((*drop)[ai]).eval() : h;
      pre += branch_delta(model.adapters[ai], x_in, traces ? &(*traces)[ai] : nullptr);
    }
    if (pre_out) pre_out->push_back(pre);
    const bool relu = l + 1 < layers.size() || model.base.nonneg_output();
    h = relu ? pre.cwiseMax(0.0) : std::move(pre);
  }
  return h;
}

}  // namespace

AdapterPair make_adapter(const Eigen::MatrixXd& W0, int rank,
                         AdapterPair::Variant variant, uint64_t seed,
                         uint64_t substream) {
  const Eigen::Index d = W0.rows();
  const Eigen::Index k = W0.cols();
  if (rank < 1 || rank > std::min(d, k) / 2)
    throw std::invalid_argument("make_adapter: rank must be in [1, min(d,k)/2]");
  AdapterPair ad;
  ad.W0 = W0;
  ad.variant = variant;
  ad.A = Eigen::MatrixXd::Zero(d, rank);
  ad.B.resize(rank, k);
  RandomStream rng("monolora.init", seed, substream);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (int i = 0; i < rank; ++i)
    for (Eigen::Index j = 0; j < k; ++j) ad.B(i, j) = scale * rng.next_normal();
  return ad;
}

Eigen::MatrixXd adapter_forward_batch(const AdapterPair& adapter,
                                      const Eigen::MatrixXd& X) {
  check_adapter_shapes(adapter, X.cols());
  return X * adapter.W0.transpose() + branch_delta(adapter, X, nullptr);
}

Eigen::VectorXd adapter_forward(const AdapterPair& adapter, const Eigen::VectorXd& x) {
  return adapter_forward_batch(adapter, x.transpose()).row(0).transpose();
}

Eigen::MatrixXd adapter_backward(const AdapterPair& adapter, const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& d_out, Eigen::MatrixXd* dA,
                                 Eigen::MatrixXd* dB) {
  if (!dA || !dB) throw std::invalid_argument("adapter_backward: outputs required");
  AdapterTrace tr;
  branch_delta(adapter, X, &tr);
  Eigen::MatrixXd dx = branch_backward(adapter, tr, d_out, dA, dB);
  return d_out * adapter.W0 + dx;
}

double adapter_activation_sparsity(const AdapterPair& adapter,
                                   const Eigen::MatrixXd& X) {
  if (X.rows() == 0) throw std::invalid_argument("adapter sparsity: empty batch");
  AdapterTrace tr;
  branch_delta(adapter, X, &tr);
  return (tr.mid.array() == 0.0).cast<double>().sum() /
         static_cast<double>(tr.mid.size());
}

uint64_t adapter_checksum(const AdapterPair& adapter) {
  constexpr uint64_t kMix = 1099511628211ULL;
  uint64_t h = bytes_checksum(adapter.W0.data(),
                              sizeof(double) * static_cast<size_t>(adapter.W0.size()));
  h = h * kMix ^ bytes_checksum(adapter.A.data(),
                                sizeof(double) * static_cast<size_t>(adapter.A.size()));
  h = h * kMix ^ bytes_checksum(adapter.B.data(),
                                sizeof(double) * static_cast<size_t>(adapter.B.size()));
  const uint64_t tags =
      (adapter.variant == AdapterPair::Variant::mono ? 2u : 0u) |
      (adapter.relu_input ? 1u : 0u);
  return h * kMix ^ tags;
}

AdaptedModel attach_adapters(const Mlp& base, int rank, AdapterPair::Variant variant,
                             const std::vector<int>& layers, uint64_t seed) {
  const int depth = static_cast<int>(base.layers().size());
  if (depth == 0) throw std::invalid_argument("attach_adapters: empty base");
  AdaptedModel model;
  model.base = base;
  model.layer_index = layers;
  if (model.layer_index.empty()) {
    for (int l = 0; l < depth; ++l) model.layer_index.push_back(l);
  }
  int prev = -1;
  for (int l : model.layer_index) {
    if (l < 0 || l >= depth || l <= prev)
      throw std::invalid_argument(
          "attach_adapters: layer indices must be strictly increasing and in range");
    prev = l;
    model.adapters.push_back(make_adapter(base.layers()[static_cast<size_t>(l)].W,
                                          rank, variant, seed,
                                          static_cast<uint64_t>(l)));
  }
  return model;
}

Eigen::MatrixXd adapted_forward(const AdaptedModel& model, const Eigen::MatrixXd& X) {
  return forward_adapted(model, X, nullptr, nullptr, nullptr);
}

double adapted_activation_sparsity(const AdaptedModel& model,
                                   const Eigen::MatrixXd& X) {
  if (model.adapters.empty())
    throw std::invalid_argument("adapted sparsity: no adapters");
  if (X.rows() == 0) throw std::invalid_argument("adapted sparsity: empty batch");
  std::vector<AdapterTrace> traces;
  forward_adapted(model, X, nullptr, &traces, nullptr);
  double total = 0.0;
  for (const AdapterTrace& tr : traces)
    total += (tr.mid.array() == 0.0).cast<double>().sum() /
             static_cast<double>(tr.mid.size());
  return total / static_cast<double>(traces.size());
}

FinetuneReport finetune_toy(AdaptedModel& model, const Eigen::MatrixXd& X_train,
                            const std::vector<int>& y_train,
                            const Eigen::MatrixXd& X_val,
                            const std::vector<int>& y_val,
                            const FinetuneConfig& cfg) {
  if (model.adapters.empty()) throw std::invalid_argument("finetune_toy: no adapters");
  if (X_train.rows() == 0 ||
      y_train.size() != static_cast<size_t>(X_train.rows()) ||
      y_val.size() != static_cast<size_t>(X_val.rows()))
    throw std::invalid_argument("finetune_toy: data/label mismatch");
  if (cfg.alpha <= 0.0) throw std::invalid_argument("finetune_toy: alpha must be > 0");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw std::invalid_argument("finetune_toy: dropout must be in [0, 1)");

  const int rank = static_cast<int>(model.adapters.front().A.cols());
  TrainConfig tc = cfg.train;
  tc.learning_rate *= cfg.alpha / static_cast<double>(rank);
  Optimizer opt(tc);

  const auto& layers = model.base.layers();
  const int num_rows = static_cast<int>(X_train.rows());
  const int batch = cfg.train.batch_size > 0
                        ? std::min(cfg.train.batch_size, num_rows)
                        : num_rows;

  FinetuneReport report;
  std::vector<Eigen::MatrixXd> pre;
  std::vector<AdapterTrace> traces;
  std::vector<Eigen::MatrixXd> dA(model.adapters.size()), dB(model.adapters.size());
  uint64_t batch_counter = 0;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    const std::vector<int> order = shuffled_indices(
        num_rows, "monolora.shuffle", cfg.train.seed, static_cast<uint64_t>(epoch));
    for (int start = 0; start < num_rows; start += batch) {
      const int count = std::min(batch, num_rows - start);
      Eigen::MatrixXd Xb(count, X_train.cols());
      std::vector<int> yb(static_cast<size_t>(count));
      for (int r = 0; r < count; ++r) {
        const int src = order[static_cast<size_t>(start + r)];
        Xb.row(r) = X_train.row(src);
        yb[static_cast<size_t>(r)] = y_train[static_cast<size_t>(src)];
      }

      std::vector<Eigen::MatrixXd> masks;
      if (cfg.dropout > 0.0) {
        RandomStream rng("monolora.dropout", cfg.train.seed, batch_counter);
        const double keep_scale = 1.0 / (1.0 - cfg.dropout);
        for (const AdapterPair& ad : model.adapters) {
          Eigen::MatrixXd m(count, ad.W0.cols());
          for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
              m(r, c) = rng.next_double() < cfg.dropout ? 0.0 : keep_scale;
          masks.push_back(std::move(m));
        }
      }
      ++batch_counter;

      const Eigen::MatrixXd logits = forward_adapted(
          model, Xb, &pre, &traces, cfg.dropout > 0.0 ? &masks : nullptr);
      Eigen::MatrixXd d;
      const double loss = ce_loss(logits, yb, &d);
      if (!std::isfinite(loss))
        throw std::runtime_error("finetune_toy: loss diverged at epoch " +
                                 std::to_string(epoch));

      // Walk layers top down; adapters only contribute parameter gradients and
      // an extra path into dX.
      for (size_t l = layers.size(); l-- > 0;) {
        const bool relu = l + 1 < layers.size() || model.base.nonneg_output();
        if (relu)
          d = d.cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
        Eigen::MatrixXd d_below = d * layers[l].W;
        for (size_t ai = 0; ai < model.adapters.size(); ++ai) {
          if (model.layer_index[ai] != static_cast<int>(l)) continue;
          Eigen::MatrixXd dx =
              branch_backward(model.adapters[ai], traces[ai], d, &dA[ai], &dB[ai]);
          if (cfg.dropout > 0.0) dx = dx.cwiseProduct(masks[ai]);
          d_below += dx;
        }
        d = std::move(d_below);
      }

      opt.begin_step();
      for (size_t ai = 0; ai < model.adapters.size(); ++ai) {
        AdapterPair& ad = model.adapters[ai];
        opt.update(ad.A.data(), dA[ai].data(), ad.A.size(), static_cast<int>(2 * ai));
        opt.update(ad.B.data(), dB[ai].data(), ad.B.size(),
                   static_cast<int>(2 * ai + 1));
      }
    }

    FinetuneEpoch row;
    row.train_acc = accuracy(adapted_forward(model, X_train), y_train);
    row.val_acc =
        X_val.rows() > 0 ? accuracy(adapted_forward(model, X_val), y_val) : 0.0;
    row.sparsity = adapted_activation_sparsity(model, X_train);
    report.epochs.push_back(row);
  }
  return report;
}

Mlp train_toy_classifier(const Eigen::MatrixXd& X, const std::vector<int>& y,
                         const MlpConfig& arch, const TrainConfig& cfg) {
  if (X.rows() == 0 || y.size() != static_cast<size_t>(X.rows()))
    throw std::invalid_argument("train_toy_classifier: data/label mismatch");
  if (arch.dims.empty() || arch.dims.front() != X.cols())
    throw std::invalid_argument("train_toy_classifier: input width mismatch");
  Mlp net(arch);
  Optimizer opt(cfg);
  const int num_rows = static_cast<int>(X.rows());
  const int batch =
      cfg.batch_size > 0 ? std::min(cfg.batch_size, num_rows) : num_rows;
  MlpTrace trace;
  std::vector<Linear> grads;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = shuffled_indices(
        num_rows, "monolora.base.shuffle", cfg.seed, static_cast<uint64_t>(epoch));
    for (int start = 0; start < num_rows; start += batch) {
      const int count = std::min(batch, num_rows - start);
      Eigen::MatrixXd Xb(count, X.cols());
      std::vector<int> yb(static_cast<size_t>(count));
      for (int r = 0; r < count; ++r) {
        const int src = order[static_cast<size_t>(start + r)];
        Xb.row(r) = X.row(src);
        yb[static_cast<size_t>(r)] = y[static_cast<size_t>(src)];
      }
      Eigen::MatrixXd d;
      const double loss = ce_loss(net.forward(Xb, &trace), yb, &d);
      if (!std::isfinite(loss))
        throw std::runtime_error("train_toy_classifier: loss diverged at epoch " +
                                 std::to_string(epoch));
      net.backward(trace, d, &grads);
      opt.begin_step();
      for (size_t l = 0; l < grads.size(); ++l) {
        Linear& layer = net.layers()[l];
        opt.update(layer.W.data(), grads[l].W.data(), layer.W.size(),
                   static_cast<int>(2 * l));
        opt.update(layer.b.data(), grads[l].b.data(), layer.b.size(),
                   static_cast<int>(2 * l + 1));
      }
    }
  }
  return net;
}

}  // namespace monolab
