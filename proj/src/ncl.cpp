#include "monolab/ncl.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "monolab/rng.hpp"

namespace monolab {

double infonce_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                    const Eigen::MatrixXd& negatives, bool nonneg,
                    Eigen::VectorXd* d_anchor, Eigen::VectorXd* d_positive,
                    Eigen::MatrixXd* d_negatives) {
  const auto d = anchor.size();
  if (positive.size() != d || negatives.cols() != d)
    throw std::invalid_argument("infonce_loss: embedding width mismatch");
  const auto M = negatives.rows();
  if (M < 1) throw std::invalid_argument("infonce_loss: need at least one negative");

  const Eigen::VectorXd a = nonneg ? anchor.cwiseMax(0.0) : anchor;
  const Eigen::VectorXd p = nonneg ? positive.cwiseMax(0.0) : positive;
  const Eigen::MatrixXd n = nonneg ? negatives.cwiseMax(0.0) : negatives;

  const double sp = a.dot(p);
  const Eigen::VectorXd sn = n * a;
  const double ln_m = std::log(static_cast<double>(M));
  // loss = -sp + log( exp(sp) + sum_i exp(sn_i - ln_m) ), shifted for safety.
  double top = sp;
  for (Eigen::Index i = 0; i < M; ++i) top = std::max(top, sn(i) - ln_m);
  double z = std::exp(sp - top);
  for (Eigen::Index i = 0; i < M; ++i) z += std::exp(sn(i) - ln_m - top);
  const double loss = -sp + top + std::log(z);

  if (d_anchor || d_positive || d_negatives) {
    const double wp = std::exp(sp - top) / z;
    Eigen::VectorXd wn(M);
    for (Eigen::Index i = 0; i < M; ++i) wn(i) = std::exp(sn(i) - ln_m - top) / z;
    Eigen::VectorXd da = (wp - 1.0) * p + n.transpose() * wn;
    Eigen::VectorXd dp = (wp - 1.0) * a;
    if (nonneg) {
      da = da.cwiseProduct((anchor.array() > 0.0).cast<double>().matrix());
      dp = dp.cwiseProduct((positive.array() > 0.0).cast<double>().matrix());
    }
    if (d_anchor) *d_anchor = da;
    if (d_positive) *d_positive = dp;
    if (d_negatives) {
      *d_negatives = wn * a.transpose();
      if (nonneg)
        *d_negatives = d_negatives->cwiseProduct(
            (negatives.array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

double infonce_batch_loss(const Eigen::MatrixXd& anchors,
                          const Eigen::MatrixXd& positives, bool nonneg,
                          Eigen::MatrixXd* d_anchors, Eigen::MatrixXd* d_positives) {
  const auto B = anchors.rows();
  if (positives.rows() != B || positives.cols() != anchors.cols())
    throw std::invalid_argument("infonce_batch_loss: shape mismatch");
  if (B < 2) throw std::invalid_argument("infonce_batch_loss: need batch >= 2");

  const Eigen::MatrixXd A = nonneg ? anchors.cwiseMax(0.0) : anchors;
  const Eigen::MatrixXd P = nonneg ? positives.cwiseMax(0.0) : positives;
  const Eigen::MatrixXd S = A * A.transpose();
  const Eigen::VectorXd sp = (A.cwiseProduct(P)).rowwise().sum();
  const double ln_m = std::log(static_cast<double>(B - 1));

  double loss = 0.0;
  Eigen::VectorXd dsp(B);
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(B, B);
  for (Eigen::Index i = 0; i < B; ++i) {
    double top = sp(i);
    for (Eigen::Index j = 0; j < B; ++j)
      if (j != i) top = std::max(top, S(i, j) - ln_m);
    double z = std::exp(sp(i) - top);
    for (Eigen::Index j = 0; j < B; ++j)
      if (j != i) z += std::exp(S(i, j) - ln_m - top);
    loss += -sp(i) + top + std::log(z);
    const double wp = std::exp(sp(i) - top) / z;
    dsp(i) = (wp - 1.0) / B;
    for (Eigen::Index j = 0; j < B; ++j)
      if (j != i) N(i, j) = std::exp(S(i, j) - ln_m - top) / z / B;
  }
  loss /= B;

  if (d_anchors || d_positives) {
    // Row i of A appears in its own positive score, and as a negative for
    // every other anchor; the similarity matrix is A A^T, hence N + N^T.
    Eigen::MatrixXd dA = dsp.asDiagonal() * P + (N + N.transpose()) * A;
    Eigen::MatrixXd dP = dsp.asDiagonal() * A;
    if (nonneg) {
      dA = dA.cwiseProduct((anchors.array() > 0.0).cast<double>().matrix());
      dP = dP.cwiseProduct((positives.array() > 0.0).cast<double>().matrix());
    }
    if (d_anchors) *d_anchors = dA;
    if (d_positives) *d_positives = dP;
  }
  return loss;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> augment(const Eigen::MatrixXd& X,
                                                    const AugmentSpec& spec,
                                                    uint64_t substream) {
  if (spec.gaussian_std < 0.0 || spec.mask_prob < 0.0 || spec.mask_prob > 1.0)
    throw std::invalid_argument("augment: invalid spec");
  RandomStream rng("ncl.augment", spec.seed, substream);
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> views{
      Eigen::MatrixXd(X.rows(), X.cols()), Eigen::MatrixXd(X.rows(), X.cols())};
  for (Eigen::MatrixXd* view : {&views.first, &views.second}) {
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      for (Eigen::Index c = 0; c < X.cols(); ++c) {
        const double jittered = X(r, c) + spec.gaussian_std * rng.next_normal();
        const bool masked = rng.next_double() < spec.mask_prob;
        (*view)(r, c) = masked ? 0.0 : jittered;
      }
    }
  }
  return views;
}

Mlp pretrain(const Dataset& data, const PretrainConfig& cfg,
             std::vector<double>* loss_history) {
  MlpConfig enc_cfg = cfg.encoder;
  if (enc_cfg.dims.empty() || enc_cfg.dims.front() != data.spec.num_features)
    throw std::invalid_argument("pretrain: encoder input width must match data");
  enc_cfg.nonneg_output = cfg.nonneg;  // the loss-side ReLU lives in the encoder
  Mlp encoder(enc_cfg);

  const int num_rows = static_cast<int>(data.X.rows());
  const int batch = cfg.train.batch_size > 0
                        ? std::min(cfg.train.batch_size, num_rows)
                        : num_rows;
  if (batch < 2) throw std::invalid_argument("pretrain: need batches of >= 2");

  Optimizer opt(cfg.train);
  if (loss_history) loss_history->clear();
  MlpTrace trace_a, trace_p;
  std::vector<Linear> grads_a, grads_p;
  uint64_t batch_counter = 0;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    const std::vector<int> order = shuffled_indices(
        num_rows, "ncl.shuffle", cfg.train.seed, static_cast<uint64_t>(epoch));
    double epoch_loss = 0.0;
    int batches = 0;
    for (int start = 0; start + 2 <= num_rows; start += batch) {
      const int count = std::min(batch, num_rows - start);
      if (count < 2) break;  // a lone trailing sample has no in-batch negative
      Eigen::MatrixXd Xb(count, data.X.cols());
      for (int r = 0; r < count; ++r)
        Xb.row(r) = data.X.row(order[static_cast<size_t>(start + r)]);
      AugmentSpec aug = cfg.augment;
      aug.seed = cfg.train.seed;
      const auto [va, vp] = augment(Xb, aug, batch_counter++);

      const Eigen::MatrixXd Za = encoder.forward(va, &trace_a);
      const Eigen::MatrixXd Zp = encoder.forward(vp, &trace_p);
      Eigen::MatrixXd dZa, dZp;
      const double loss = infonce_batch_loss(Za, Zp, false, &dZa, &dZp);
      if (!std::isfinite(loss))
        throw std::runtime_error("pretrain: loss diverged at epoch " +
                                 std::to_string(epoch));
      epoch_loss += loss;
      ++batches;
      encoder.backward(trace_a, dZa, &grads_a);
      encoder.backward(trace_p, dZp, &grads_p);
      opt.begin_step();
      int slot = 0;
      for (size_t l = 0; l < grads_a.size(); ++l) {
        Linear& layer = encoder.layers()[l];
        const Eigen::MatrixXd dW = grads_a[l].W + grads_p[l].W;
        const Eigen::VectorXd db = grads_a[l].b + grads_p[l].b;
        opt.update(layer.W.data(), dW.data(), layer.W.size(), slot++);
        opt.update(layer.b.data(), db.data(), layer.b.size(), slot++);
      }
    }
    if (loss_history) loss_history->push_back(epoch_loss / std::max(batches, 1));
  }
  return encoder;
}

}  // namespace monolab
