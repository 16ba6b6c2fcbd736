#include "monolab/toymodel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "monolab/rng.hpp"

namespace monolab {

Eigen::MatrixXd reconstruct(const ToyModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.W.cols())
    throw std::invalid_argument("reconstruct: input width mismatch");
  Eigen::MatrixXd out = (X * model.W.transpose()) * model.W;
  if (model.relu_output) {
    out.rowwise() += model.b.transpose();
    out = out.cwiseMax(0.0);
  }
  return out;
}

// The linear path: with E = X W^T W - X and D = (2/N) E, the weight gradient
// is W (X^T D + D^T X); the relu variant masks D by the active outputs first.
double reconstruction_loss(const ToyModel& model, const Eigen::MatrixXd& X,
                           Eigen::MatrixXd* dW, Eigen::VectorXd* db) {
  const auto N = static_cast<double>(X.rows());
  const Eigen::MatrixXd H = X * model.W.transpose();  // rows are W x
  Eigen::MatrixXd pre = H * model.W;
  if (model.relu_output) pre.rowwise() += model.b.transpose();
  const Eigen::MatrixXd out = model.relu_output ? pre.cwiseMax(0.0) : pre;
  const Eigen::MatrixXd err = out - X;
  const double loss = err.squaredNorm() / N;
  Eigen::MatrixXd D = (2.0 / N) * err;
  if (model.relu_output) {
    D = D.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    if (db) *db = D.colwise().sum().transpose();
  } else if (db) {
    db->setZero(model.b.size());
  }
  if (dW) *dW = H.transpose() * D + model.W * (D.transpose() * X);
  return loss;
}

ToyModel train_reconstruction(const Dataset& data, int m, const TrainConfig& cfg,
                              bool relu_variant, std::vector<double>* loss_history) {
  const int n = data.spec.num_features;
  if (m < 1 || m >= n)
    throw std::invalid_argument("train_reconstruction: need 1 <= m < n");
  ToyModel model;
  model.relu_output = relu_variant;
  model.W.resize(m, n);
  RandomStream init("toymodel.init", cfg.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) model.W(i, j) = scale * init.next_normal();
  }
  model.b = Eigen::VectorXd::Zero(n);

  Optimizer opt(cfg);
  if (loss_history) loss_history->clear();
  const int num_rows = static_cast<int>(data.X.rows());
  const int batch = cfg.batch_size > 0 ? cfg.batch_size : num_rows;
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    int epoch_batches = 0;
    if (cfg.batch_size > 0) {
      const std::vector<int> order = shuffled_indices(
          num_rows, "toymodel.shuffle", cfg.seed, static_cast<uint64_t>(epoch));
      for (int start = 0; start < num_rows; start += batch) {
        const int count = std::min(batch, num_rows - start);
        Eigen::MatrixXd Xb(count, n);
        for (int r = 0; r < count; ++r)
          Xb.row(r) = data.X.row(order[static_cast<size_t>(start + r)]);
        epoch_loss += reconstruction_loss(model, Xb, &dW, &db);
        ++epoch_batches;
        opt.begin_step();
        opt.update(model.W.data(), dW.data(), model.W.size(), 0);
        if (relu_variant) opt.update(model.b.data(), db.data(), model.b.size(), 1);
      }
    } else {
      epoch_loss = reconstruction_loss(model, data.X, &dW, &db);
      epoch_batches = 1;
      opt.begin_step();
      opt.update(model.W.data(), dW.data(), model.W.size(), 0);
      if (relu_variant) opt.update(model.b.data(), db.data(), model.b.size(), 1);
    }
    const double mean_loss = epoch_loss / epoch_batches;
    if (!std::isfinite(mean_loss))
      throw std::runtime_error("train_reconstruction: loss diverged at epoch " +
                               std::to_string(epoch));
    if (loss_history) loss_history->push_back(mean_loss);
  }
  return model;
}

Eigen::MatrixXd gram(const ToyModel& model) {
  return model.W.transpose() * model.W;
}

std::vector<int> represented_features(const Eigen::MatrixXd& gram_matrix, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("represented_features: tau must be > 0");
  std::vector<int> out;
  for (int i = 0; i < gram_matrix.rows(); ++i) {
    if (gram_matrix(i, i) > tau) out.push_back(i);
  }
  return out;
}

std::vector<std::pair<int, int>> antipodal_pairs(const Eigen::MatrixXd& gram_matrix,
                                                 double tau_neg) {
  if (tau_neg >= 0.0) throw std::invalid_argument("antipodal_pairs: tau_neg must be < 0");
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < gram_matrix.rows(); ++i) {
    for (int j = i + 1; j < gram_matrix.cols(); ++j) {
      if (gram_matrix(i, j) < tau_neg) out.emplace_back(i, j);
    }
  }
  return out;
}

Eigen::MatrixXd extract_features(const Eigen::MatrixXd& X,
                                 const FeatureConstruction& construction,
                                 const ToyModel* model) {
  const int n = static_cast<int>(X.cols());
  switch (construction.kind) {
    case FeatureConstruction::Kind::mono_direct: {
      Eigen::MatrixXd F(X.rows(), construction.indices.size());
      for (size_t k = 0; k < construction.indices.size(); ++k) {
        const int idx = construction.indices[k];
        if (idx < 0 || idx >= n)
          throw std::out_of_range("extract_features: coordinate index out of range");
        F.col(static_cast<Eigen::Index>(k)) = X.col(idx);
      }
      return F;
    }
    case FeatureConstruction::Kind::poly_antipodal: {
      Eigen::MatrixXd F(X.rows(), construction.signed_pairs.size());
      for (size_t k = 0; k < construction.signed_pairs.size(); ++k) {
        const auto [plus, minus] = construction.signed_pairs[k];
        if (plus < 0 || plus >= n || minus < 0 || minus >= n)
          throw std::out_of_range("extract_features: pair index out of range");
        F.col(static_cast<Eigen::Index>(k)) = X.col(plus) - X.col(minus);
      }
      return F;
    }
    case FeatureConstruction::Kind::learned_hidden: {
      if (!model)
        throw std::invalid_argument("extract_features: learned_hidden needs a model");
      if (X.cols() != model->W.cols())
        throw std::invalid_argument("extract_features: input width mismatch");
      return X * model->W.transpose();
    }
  }
  throw std::invalid_argument("extract_features: unknown construction kind");
}

uint64_t toy_checksum(const ToyModel& model) {
  uint64_t h = bytes_checksum(model.W.data(),
                              sizeof(double) * static_cast<size_t>(model.W.size()));
  h ^= bytes_checksum(model.b.data(),
                      sizeof(double) * static_cast<size_t>(model.b.size()));
  return h;
}

}  // namespace monolab
