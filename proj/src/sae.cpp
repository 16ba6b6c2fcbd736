#include "monolab/sae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "monolab/rng.hpp"

namespace monolab {

namespace {

// Indices the top-K rule keeps, sorted for cache-friendly scatter later.
std::vector<int> topk_support(const Eigen::VectorXd& v, int K) {
  const int h = static_cast<int>(v.size());
  if (K < 1 || K > h) throw std::invalid_argument("topk: K out of range");
  std::vector<int> idx(static_cast<size_t>(h));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + K, idx.end(), [&v](int a, int b) {
    if (v(a) != v(b)) return v(a) > v(b);
    return a < b;  // equal values keep the lower index
  });
  idx.resize(static_cast<size_t>(K));
  std::sort(idx.begin(), idx.end());
  return idx;
}

void check_shapes(const SaeParams& p) {
  const auto h = p.W_enc.rows();
  const auto d = p.W_enc.cols();
  if (p.W_dec.rows() != d || p.W_dec.cols() != h || p.b_pre.size() != d ||
      p.b_enc.size() != h)
    throw std::invalid_argument("sae: inconsistent parameter shapes");
  if (p.K < 1 || p.K > h) throw std::invalid_argument("sae: K out of range");
}

}  // namespace

Eigen::VectorXd topk(const Eigen::VectorXd& v, int K) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (int i : topk_support(v, K)) out(i) = v(i);
  return out;
}

Eigen::VectorXd encode(const SaeParams& params, const Eigen::VectorXd& f) {
  check_shapes(params);
  if (f.size() != params.b_pre.size())
    throw std::invalid_argument("encode: feature width mismatch");
  return topk(params.W_enc * (f - params.b_pre) + params.b_enc, params.K);
}

Eigen::MatrixXd encode_batch(const SaeParams& params, const Eigen::MatrixXd& F) {
  check_shapes(params);
  if (F.cols() != params.b_pre.size())
    throw std::invalid_argument("encode: feature width mismatch");
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(F.rows(), params.W_enc.rows());
  const Eigen::MatrixXd pre =
      ((F.rowwise() - params.b_pre.transpose()) * params.W_enc.transpose())
          .rowwise() +
      params.b_enc.transpose();
  for (int r = 0; r < F.rows(); ++r) {
    const Eigen::VectorXd row = pre.row(r).transpose();
    for (int i : topk_support(row, params.K)) Z(r, i) = row(i);
  }
  return Z;
}

Eigen::VectorXd decode(const SaeParams& params, const Eigen::VectorXd& z) {
  check_shapes(params);
  if (z.size() != params.W_dec.cols())
    throw std::invalid_argument("decode: latent width mismatch");
  return params.W_dec * z + params.b_pre;
}

Eigen::MatrixXd decode_batch(const SaeParams& params, const Eigen::MatrixXd& Z) {
  check_shapes(params);
  if (Z.cols() != params.W_dec.cols())
    throw std::invalid_argument("decode: latent width mismatch");
  return (Z * params.W_dec.transpose()).rowwise() + params.b_pre.transpose();
}

double sae_loss(const SaeParams& params, const Eigen::MatrixXd& F,
                Eigen::MatrixXd* dW_enc, Eigen::MatrixXd* dW_dec,
                Eigen::VectorXd* db_pre, Eigen::VectorXd* db_enc) {
  check_shapes(params);
  if (F.cols() != params.b_pre.size())
    throw std::invalid_argument("sae_loss: feature width mismatch");
  const auto N = static_cast<double>(F.rows());
  const auto d = params.W_enc.cols();
  const auto h = params.W_enc.rows();
  if (dW_enc) dW_enc->setZero(h, d);
  if (dW_dec) dW_dec->setZero(d, h);
  if (db_pre) db_pre->setZero(d);
  if (db_enc) db_enc->setZero(h);

  double loss = 0.0;
  for (int r = 0; r < F.rows(); ++r) {
    const Eigen::VectorXd f = F.row(r).transpose();
    const Eigen::VectorXd centered = f - params.b_pre;
    const Eigen::VectorXd pre = params.W_enc * centered + params.b_enc;
    const std::vector<int> support = topk_support(pre, params.K);
    Eigen::VectorXd f_hat = params.b_pre;
    for (int t : support) f_hat += pre(t) * params.W_dec.col(t);
    const Eigen::VectorXd err = f_hat - f;
    loss += err.squaredNorm();
    if (!dW_enc && !dW_dec && !db_pre && !db_enc) continue;
    const Eigen::VectorXd g_out = (2.0 / N) * err;
    if (db_pre) *db_pre += g_out;
    for (int t : support) {
      const double dz = params.W_dec.col(t).dot(g_out);  // kept coordinates only
      if (dW_dec) dW_dec->col(t) += pre(t) * g_out;
      if (dW_enc) dW_enc->row(t) += dz * centered.transpose();
      if (db_enc) (*db_enc)(t) += dz;
      if (db_pre) *db_pre -= dz * params.W_enc.row(t).transpose();
    }
  }
  return loss / N;
}

SaeParams train_sae(const Eigen::MatrixXd& features, int h, int K,
                    const TrainConfig& cfg, SaeTrainReport* report,
                    bool unit_norm_columns) {
  const int d = static_cast<int>(features.cols());
  if (h < 1 || K < 1 || K > h) throw std::invalid_argument("train_sae: need 1 <= K <= h");
  if (features.rows() < 1) throw std::invalid_argument("train_sae: empty features");
  SaeParams params;
  params.K = K;
  params.b_pre = features.colwise().mean().transpose();
  params.b_enc = Eigen::VectorXd::Zero(h);
  params.W_dec.resize(d, h);
  RandomStream init("sae.init", cfg.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < h; ++j) params.W_dec(i, j) = scale * init.next_normal();
  params.W_enc = params.W_dec.transpose();

  const int num_rows = static_cast<int>(features.rows());
  const int batch = cfg.batch_size > 0 ? std::min(cfg.batch_size, num_rows) : num_rows;
  Optimizer opt(cfg);
  if (report) {
    report->loss_history.clear();
    report->loss_history.reserve(static_cast<size_t>(cfg.epochs));
  }
  Eigen::MatrixXd dW_enc, dW_dec;
  Eigen::VectorXd db_pre, db_enc;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    int batches = 0;
    std::vector<int> order;
    if (cfg.batch_size > 0)
      order = shuffled_indices(num_rows, "sae.shuffle", cfg.seed,
                               static_cast<uint64_t>(epoch));
    for (int start = 0; start < num_rows; start += batch) {
      const int count = std::min(batch, num_rows - start);
      Eigen::MatrixXd Fb;
      if (cfg.batch_size > 0) {
        Fb.resize(count, d);
        for (int r = 0; r < count; ++r)
          Fb.row(r) = features.row(order[static_cast<size_t>(start + r)]);
      } else {
        Fb = features;
      }
      epoch_loss += sae_loss(params, Fb, &dW_enc, &dW_dec, &db_pre, &db_enc);
      ++batches;
      opt.begin_step();
      opt.update(params.W_enc.data(), dW_enc.data(), params.W_enc.size(), 0);
      opt.update(params.W_dec.data(), dW_dec.data(), params.W_dec.size(), 1);
      opt.update(params.b_pre.data(), db_pre.data(), params.b_pre.size(), 2);
      opt.update(params.b_enc.data(), db_enc.data(), params.b_enc.size(), 3);
      if (unit_norm_columns) {
        for (int j = 0; j < h; ++j) {
          const double norm = params.W_dec.col(j).norm();
          if (norm > 0.0) params.W_dec.col(j) /= norm;
        }
      }
    }
    const double mean_loss = epoch_loss / batches;
    if (!std::isfinite(mean_loss))
      throw std::runtime_error("train_sae: loss diverged at epoch " +
                               std::to_string(epoch));
    if (report) report->loss_history.push_back(mean_loss);
  }
  if (report) {
    const Eigen::MatrixXd Z = encode_batch(params, features);
    int dead = 0;
    for (int j = 0; j < h; ++j) {
      if ((Z.col(j).array() != 0.0).count() == 0) ++dead;
    }
    report->dead_latent_fraction = static_cast<double>(dead) / h;
  }
  return params;
}

}  // namespace monolab
