#include "monolab/probe.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace monolab {

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

void check_labels(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits.rows())
    throw std::invalid_argument("loss: label count does not match rows");
  for (int y : labels) {
    if (y < 0 || y >= logits.cols())
      throw std::invalid_argument("loss: label out of range");
  }
}

}  // namespace

double ce_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
               Eigen::MatrixXd* d_logits) {
  check_labels(logits, labels);
  const auto N = static_cast<double>(logits.rows());
  const Eigen::MatrixXd p = softmax_rows(logits);
  double loss = 0.0;
  for (int i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    loss += lse - logits(i, labels[static_cast<size_t>(i)]);
  }
  if (d_logits) {
    *d_logits = p / N;
    for (int i = 0; i < logits.rows(); ++i)
      (*d_logits)(i, labels[static_cast<size_t>(i)]) -= 1.0 / N;
  }
  return loss / N;
}

double sce_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                double alpha, double beta, Eigen::MatrixXd* d_logits,
                double floor_log) {
  if (alpha < 0.0 || beta < 0.0)
    throw std::invalid_argument("sce_loss: weights must be non-negative");
  check_labels(logits, labels);
  const auto N = static_cast<double>(logits.rows());
  Eigen::MatrixXd d_ce;
  const double ce = ce_loss(logits, labels, d_logits ? &d_ce : nullptr);
  const Eigen::MatrixXd p = softmax_rows(logits);
  // Reverse term per row: -sum_c p_c log(onehot_c) with log 0 := floor_log,
  // which collapses to -floor_log * (1 - p_label).
  double rce = 0.0;
  for (int i = 0; i < logits.rows(); ++i)
    rce += -floor_log * (1.0 - p(i, labels[static_cast<size_t>(i)]));
  rce /= N;
  if (d_logits) {
    *d_logits = alpha * d_ce;
    for (int i = 0; i < logits.rows(); ++i) {
      const int y = labels[static_cast<size_t>(i)];
      const double py = p(i, y);
      for (int k = 0; k < logits.cols(); ++k) {
        const double dy = k == y ? 1.0 : 0.0;
        (*d_logits)(i, k) += beta * floor_log * py * (dy - p(i, k)) / N;
      }
    }
  }
  return alpha * ce + beta * rce;
}

Eigen::MatrixXd probe_logits(const ProbeModel& probe, const Eigen::MatrixXd& F) {
  if (F.cols() != probe.weights.cols())
    throw std::invalid_argument("probe_logits: feature width mismatch");
  if (probe.relu_features) {
    return (F.cwiseMax(0.0) * probe.weights.transpose()).rowwise() +
           probe.bias.transpose();
  }
  return (F * probe.weights.transpose()).rowwise() + probe.bias.transpose();
}

namespace {

struct BatchLoss {
  double value = 0.0;
  Eigen::MatrixXd d_logits;
};

BatchLoss loss_for(const ProbeConfig& cfg, const Eigen::MatrixXd& logits,
                   const std::vector<int>& labels) {
  BatchLoss out;
  switch (cfg.loss) {
    case ProbeConfig::Loss::ce:
    case ProbeConfig::Loss::nce:
      out.value = ce_loss(logits, labels, &out.d_logits);
      break;
    case ProbeConfig::Loss::sce:
      out.value = sce_loss(logits, labels, cfg.sce_alpha, cfg.sce_beta,
                           &out.d_logits, cfg.sce_floor);
      break;
  }
  return out;
}

std::vector<int> subsample_rows(int num_rows, double fraction, uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("train_probe: subsample_fraction outside (0,1]");
  std::vector<int> rows = shuffled_indices(num_rows, "probe.subsample", seed, 0);
  const int keep = std::max(1, static_cast<int>(std::lround(fraction * num_rows)));
  rows.resize(static_cast<size_t>(std::min(keep, num_rows)));
  return rows;
}

}  // namespace

ProbeModel train_probe(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                       int num_classes, const ProbeConfig& cfg) {
  if (static_cast<int>(labels.size()) != features.rows())
    throw std::invalid_argument("train_probe: label count mismatch");
  if (num_classes < 2) throw std::invalid_argument("train_probe: need >= 2 classes");
  const int d = static_cast<int>(features.cols());
  ProbeModel probe;
  probe.relu_features = cfg.loss == ProbeConfig::Loss::nce;
  probe.weights = Eigen::MatrixXd::Zero(num_classes, d);
  probe.bias = Eigen::VectorXd::Zero(num_classes);

  const std::vector<int> rows =
      subsample_rows(static_cast<int>(features.rows()), cfg.subsample_fraction,
                     cfg.train.seed);
  const int num_rows = static_cast<int>(rows.size());
  const int batch = cfg.train.batch_size > 0
                        ? std::min(cfg.train.batch_size, num_rows)
                        : num_rows;

  Optimizer opt(cfg.train);
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    std::vector<int> order(rows);
    if (cfg.train.batch_size > 0) {
      const std::vector<int> perm = shuffled_indices(
          num_rows, "probe.shuffle", cfg.train.seed, static_cast<uint64_t>(epoch));
      for (int i = 0; i < num_rows; ++i)
        order[static_cast<size_t>(i)] = rows[static_cast<size_t>(perm[static_cast<size_t>(i)])];
    }
    for (int start = 0; start < num_rows; start += batch) {
      const int count = std::min(batch, num_rows - start);
      Eigen::MatrixXd Fb(count, d);
      std::vector<int> yb(static_cast<size_t>(count));
      for (int r = 0; r < count; ++r) {
        const int src = order[static_cast<size_t>(start + r)];
        Fb.row(r) = features.row(src);
        yb[static_cast<size_t>(r)] = labels[static_cast<size_t>(src)];
      }
      const Eigen::MatrixXd used = probe.relu_features ? Fb.cwiseMax(0.0) : Fb;
      const Eigen::MatrixXd logits =
          (used * probe.weights.transpose()).rowwise() + probe.bias.transpose();
      BatchLoss bl = loss_for(cfg, logits, yb);
      if (!std::isfinite(bl.value))
        throw std::runtime_error("train_probe: loss diverged at epoch " +
                                 std::to_string(epoch));
      const Eigen::MatrixXd dW = bl.d_logits.transpose() * used;
      const Eigen::VectorXd db = bl.d_logits.colwise().sum().transpose();
      opt.begin_step();
      opt.update(probe.weights.data(), dW.data(), probe.weights.size(), 0);
      opt.update(probe.bias.data(), db.data(), probe.bias.size(), 1);
    }
  }
  return probe;
}

ProbeModel train_probe_on_encoder(Mlp& encoder, const Eigen::MatrixXd& X,
                                  const std::vector<int>& labels, int num_classes,
                                  const ProbeConfig& cfg) {
  if (cfg.mode == ProbeConfig::Mode::frozen_features) {
    return train_probe(encoder.forward(X), labels, num_classes, cfg);
  }
  if (static_cast<int>(labels.size()) != X.rows())
    throw std::invalid_argument("train_probe_on_encoder: label count mismatch");
  const int d = encoder.out_dim();
  ProbeModel probe;
  probe.relu_features = cfg.loss == ProbeConfig::Loss::nce;
  probe.weights = Eigen::MatrixXd::Zero(num_classes, d);
  probe.bias = Eigen::VectorXd::Zero(num_classes);

  const std::vector<int> rows = subsample_rows(static_cast<int>(X.rows()),
                                               cfg.subsample_fraction, cfg.train.seed);
  const int num_rows = static_cast<int>(rows.size());
  const int batch = cfg.train.batch_size > 0
                        ? std::min(cfg.train.batch_size, num_rows)
                        : num_rows;

  Optimizer opt(cfg.train);
  MlpTrace trace;
  std::vector<Linear> enc_grads;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    std::vector<int> order(rows);
    if (cfg.train.batch_size > 0) {
      const std::vector<int> perm = shuffled_indices(
          num_rows, "probe.shuffle", cfg.train.seed, static_cast<uint64_t>(epoch));
      for (int i = 0; i < num_rows; ++i)
        order[static_cast<size_t>(i)] = rows[static_cast<size_t>(perm[static_cast<size_t>(i)])];
    }
    for (int start = 0; start < num_rows; start += batch) {
      const int count = std::min(batch, num_rows - start);
      Eigen::MatrixXd Xb(count, X.cols());
      std::vector<int> yb(static_cast<size_t>(count));
      for (int r = 0; r < count; ++r) {
        const int src = order[static_cast<size_t>(start + r)];
        Xb.row(r) = X.row(src);
        yb[static_cast<size_t>(r)] = labels[static_cast<size_t>(src)];
      }
      const Eigen::MatrixXd F = encoder.forward(Xb, &trace);
      const Eigen::MatrixXd used = probe.relu_features ? F.cwiseMax(0.0) : F;
      const Eigen::MatrixXd logits =
          (used * probe.weights.transpose()).rowwise() + probe.bias.transpose();
      BatchLoss bl = loss_for(cfg, logits, yb);
      if (!std::isfinite(bl.value))
        throw std::runtime_error("train_probe_on_encoder: loss diverged at epoch " +
                                 std::to_string(epoch));
      const Eigen::MatrixXd dW = bl.d_logits.transpose() * used;
      const Eigen::VectorXd db = bl.d_logits.colwise().sum().transpose();
      Eigen::MatrixXd dF = bl.d_logits * probe.weights;
      if (probe.relu_features)
        dF = dF.cwiseProduct((F.array() > 0.0).cast<double>().matrix());
      encoder.backward(trace, dF, &enc_grads);
      opt.begin_step();
      opt.update(probe.weights.data(), dW.data(), probe.weights.size(), 0);
      opt.update(probe.bias.data(), db.data(), probe.bias.size(), 1);
      int slot = 2;
      for (size_t l = 0; l < enc_grads.size(); ++l) {
        Linear& layer = encoder.layers()[l];
        opt.update(layer.W.data(), enc_grads[l].W.data(), layer.W.size(), slot++);
        opt.update(layer.b.data(), enc_grads[l].b.data(), layer.b.size(), slot++);
      }
    }
  }
  return probe;
}

std::vector<int> probe_predictions(const ProbeModel& probe,
                                   const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd logits = probe_logits(probe, features);
  std::vector<int> pred(static_cast<size_t>(logits.rows()));
  for (int i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);  // first maximum wins ties
    pred[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  return pred;
}

double evaluate_probe(const ProbeModel& probe, const Eigen::MatrixXd& features,
                      const std::vector<int>& labels) {
  if (labels.empty()) throw std::invalid_argument("evaluate_probe: empty dataset");
  if (static_cast<int>(labels.size()) != features.rows())
    throw std::invalid_argument("evaluate_probe: label count mismatch");
  const std::vector<int> pred = probe_predictions(probe, features);
  int hits = 0;
  for (size_t i = 0; i < labels.size(); ++i)
    if (pred[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace monolab
