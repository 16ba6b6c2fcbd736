#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "monolab/rng.hpp"
#include "monolab/sae.hpp"

using namespace monolab;

namespace {

SaeParams random_params(int h, int d, int K, uint64_t seed) {
  SaeParams p;
  p.K = K;
  RandomStream rng("test.sae", seed);
  p.W_enc.resize(h, d);
  p.W_dec.resize(d, h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < d; ++j) p.W_enc(i, j) = rng.next_normal();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < h; ++j) p.W_dec(i, j) = rng.next_normal();
  p.b_pre = Eigen::VectorXd::NullaryExpr(d, [&](Eigen::Index) { return rng.next_normal(); });
  p.b_enc = Eigen::VectorXd::NullaryExpr(h, [&](Eigen::Index) { return rng.next_normal(); });
  return p;
}

Eigen::MatrixXd random_features(int rows, int d, uint64_t seed) {
  Eigen::MatrixXd F(rows, d);
  RandomStream rng("test.sae.features", seed);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j) F(i, j) = rng.next_normal();
  return F;
}

// Explicit-loop encode: matmul by hand, stable sort by value descending.
Eigen::VectorXd naive_encode(const SaeParams& p, const Eigen::VectorXd& f) {
  const int h = static_cast<int>(p.W_enc.rows());
  const int d = static_cast<int>(p.W_enc.cols());
  std::vector<std::pair<double, int>> pre(static_cast<size_t>(h));
  for (int i = 0; i < h; ++i) {
    double v = p.b_enc(i);
    for (int j = 0; j < d; ++j) v += p.W_enc(i, j) * (f(j) - p.b_pre(j));
    pre[static_cast<size_t>(i)] = {v, i};
  }
  std::stable_sort(pre.begin(), pre.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  Eigen::VectorXd z = Eigen::VectorXd::Zero(h);
  for (int k = 0; k < p.K; ++k) z(pre[static_cast<size_t>(k)].second) = pre[static_cast<size_t>(k)].first;
  return z;
}

// K-sparse combinations of a planted orthonormal dictionary plus a fixed
// offset. Orthonormal atoms keep exact recovery within reach of a linear
// encoder; correlated overcomplete atoms would put a few-percent floor on it.
Eigen::MatrixXd planted_features(int rows, int d, int atoms, int k, uint64_t seed) {
  RandomStream rng("test.sae.dict", seed);
  Eigen::MatrixXd G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = rng.next_normal();
  const Eigen::MatrixXd Q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
  const Eigen::MatrixXd D = Q.leftCols(atoms);
  Eigen::MatrixXd F(rows, d);
  for (int r = 0; r < rows; ++r) {
    Eigen::VectorXd f = Eigen::VectorXd::Constant(d, 0.3);
    std::vector<int> chosen;
    while (static_cast<int>(chosen.size()) < k) {
      const int a = static_cast<int>(rng.next_below(static_cast<uint64_t>(atoms)));
      if (std::find(chosen.begin(), chosen.end(), a) == chosen.end()) chosen.push_back(a);
    }
    for (int a : chosen) f += (0.5 + rng.next_double()) * D.col(a);
    F.row(r) = f.transpose();
  }
  return F;
}

double total_variance(const Eigen::MatrixXd& F) {
  const Eigen::RowVectorXd mean = F.colwise().mean();
  return (F.rowwise() - mean).squaredNorm() / F.rows();
}

uint64_t params_checksum(const SaeParams& p) {
  uint64_t h = bytes_checksum(p.W_enc.data(), sizeof(double) * static_cast<size_t>(p.W_enc.size()));
  h ^= bytes_checksum(p.W_dec.data(), sizeof(double) * static_cast<size_t>(p.W_dec.size()));
  h ^= bytes_checksum(p.b_pre.data(), sizeof(double) * static_cast<size_t>(p.b_pre.size()));
  h ^= bytes_checksum(p.b_enc.data(), sizeof(double) * static_cast<size_t>(p.b_enc.size()));
  return h;
}

}  // namespace

TEST_CASE("topk keeps the largest values and breaks ties low") {
  Eigen::VectorXd v(4);
  v << 0.5, -0.2, 0.9, 0.1;
  Eigen::VectorXd expect(4);
  expect << 0.5, 0.0, 0.9, 0.0;
  CHECK((topk(v, 2) - expect).cwiseAbs().maxCoeff() == 0.0);

  CHECK((topk(v, 4) - v).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd ties = Eigen::VectorXd::Ones(3);
  const Eigen::VectorXd kept = topk(ties, 1);
  CHECK(kept(0) == 1.0);
  CHECK(kept(1) == 0.0);
  CHECK(kept(2) == 0.0);

  CHECK_THROWS_AS(topk(v, 0), std::invalid_argument);
  CHECK_THROWS_AS(topk(v, 5), std::invalid_argument);
}

TEST_CASE("encode handles the degenerate parameter settings") {
  SaeParams p = random_params(5, 3, 2, 1);
  const Eigen::VectorXd f = random_features(1, 3, 2).row(0).transpose();

  SaeParams centered = p;
  centered.b_pre = f;
  CHECK((encode(centered, f) - topk(p.b_enc, 2)).cwiseAbs().maxCoeff() == 0.0);

  SaeParams zeroed = p;
  zeroed.W_enc.setZero();
  zeroed.b_enc.setZero();
  CHECK(encode(zeroed, f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encode and decode agree with naive oracles") {
  const SaeParams p = random_params(7, 4, 3, 3);
  for (uint64_t s = 0; s < 5; ++s) {
    const Eigen::VectorXd f = random_features(1, 4, 10 + s).row(0).transpose();
    CHECK((encode(p, f) - naive_encode(p, f)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK((decode(p, Eigen::VectorXd::Zero(7)) - p.b_pre).cwiseAbs().maxCoeff() == 0.0);

  SaeParams ident = random_params(4, 4, 2, 4);
  ident.W_dec = Eigen::MatrixXd::Identity(4, 4);
  ident.b_pre.setZero();
  const Eigen::VectorXd z = random_features(1, 4, 20).row(0).transpose();
  CHECK((decode(ident, z) - z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("every encode output has at most K nonzeros") {
  const SaeParams p = random_params(12, 6, 4, 5);
  const Eigen::MatrixXd F = random_features(200, 6, 6);
  const Eigen::MatrixXd Z = encode_batch(p, F);
  for (int r = 0; r < Z.rows(); ++r) {
    CHECK((Z.row(r).array() != 0.0).count() <= 4);
  }
  // Batch and single encodes are the same function.
  for (int r = 0; r < 5; ++r) {
    CHECK((Z.row(r).transpose() - encode(p, F.row(r).transpose())).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("loss gradients match finite differences on a fixed support") {
  SaeParams p = random_params(6, 4, 2, 7);
  const Eigen::MatrixXd F = random_features(5, 4, 8);
  // The support must not change under the probe steps: require a clear gap
  // between the kept and dropped pre-activations of every row.
  for (int r = 0; r < F.rows(); ++r) {
    Eigen::VectorXd pre = p.W_enc * (F.row(r).transpose() - p.b_pre) + p.b_enc;
    std::vector<double> vals(pre.data(), pre.data() + pre.size());
    std::sort(vals.begin(), vals.end(), std::greater<>());
    REQUIRE(vals[1] - vals[2] > 1e-3);
  }

  Eigen::MatrixXd dW_enc, dW_dec;
  Eigen::VectorXd db_pre, db_enc;
  sae_loss(p, F, &dW_enc, &dW_dec, &db_pre, &db_enc);

  const double h = 1e-6;
  auto rel = [](double fd, double an) {
    return std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
  };
  double worst = 0.0;
  auto probe_matrix = [&](Eigen::MatrixXd& M, const Eigen::MatrixXd& analytic) {
    for (int i = 0; i < M.rows(); ++i) {
      for (int j = 0; j < M.cols(); ++j) {
        const double keep = M(i, j);
        M(i, j) = keep + h;
        const double up = sae_loss(p, F);
        M(i, j) = keep - h;
        const double down = sae_loss(p, F);
        M(i, j) = keep;
        worst = std::max(worst, rel((up - down) / (2 * h), analytic(i, j)));
      }
    }
  };
  probe_matrix(p.W_enc, dW_enc);
  probe_matrix(p.W_dec, dW_dec);
  for (int j = 0; j < p.b_pre.size(); ++j) {
    const double keep = p.b_pre(j);
    p.b_pre(j) = keep + h;
    const double up = sae_loss(p, F);
    p.b_pre(j) = keep - h;
    const double down = sae_loss(p, F);
    p.b_pre(j) = keep;
    worst = std::max(worst, rel((up - down) / (2 * h), db_pre(j)));
  }
  for (int j = 0; j < p.b_enc.size(); ++j) {
    const double keep = p.b_enc(j);
    p.b_enc(j) = keep + h;
    const double up = sae_loss(p, F);
    p.b_enc(j) = keep - h;
    const double down = sae_loss(p, F);
    p.b_enc(j) = keep;
    worst = std::max(worst, rel((up - down) / (2 * h), db_enc(j)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("training recovers a planted sparse dictionary") {
  const Eigen::MatrixXd F = planted_features(2000, 8, 6, 3, 9);
  TrainConfig cfg;
  cfg.epochs = 2500;
  cfg.seed = 1;
  SaeTrainReport report;
  const SaeParams p = train_sae(F, 16, 3, cfg, &report);
  const double var = total_variance(F);
  const double mse = report.loss_history.back();
  CHECK(mse < 0.01 * var);
  CHECK(report.dead_latent_fraction >= 0.0);
  CHECK(report.dead_latent_fraction <= 1.0);

  // Reconstructions re-encode to nearly themselves once trained: a second
  // encode/decode pass moves the signal by a sliver of its variance.
  const Eigen::MatrixXd F_hat = decode_batch(p, encode_batch(p, F));
  const Eigen::MatrixXd F_hat2 = decode_batch(p, encode_batch(p, F_hat));
  const double drift = (F_hat2 - F_hat).squaredNorm() / F_hat.rows();
  CHECK(drift < 0.01 * var);
}

TEST_CASE("full-width affine autoencoder reaches near-zero error") {
  const Eigen::MatrixXd F = random_features(400, 4, 30);
  TrainConfig cfg;
  cfg.epochs = 3000;
  cfg.seed = 2;
  SaeTrainReport report;
  train_sae(F, 4, 4, cfg, &report);
  CHECK(report.loss_history.back() < 1e-3 * total_variance(F));
}

TEST_CASE("training is deterministic per seed") {
  const Eigen::MatrixXd F = random_features(100, 5, 31);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 3;
  const SaeParams a = train_sae(F, 8, 2, cfg);
  const SaeParams b = train_sae(F, 8, 2, cfg);
  CHECK(params_checksum(a) == params_checksum(b));
  cfg.seed = 4;
  CHECK(params_checksum(train_sae(F, 8, 2, cfg)) != params_checksum(a));
}

TEST_CASE("invalid shapes and ranks are rejected") {
  const Eigen::MatrixXd F = random_features(10, 3, 32);
  TrainConfig cfg;
  CHECK_THROWS_AS(train_sae(F, 4, 5, cfg), std::invalid_argument);
  CHECK_THROWS_AS(train_sae(F, 0, 0, cfg), std::invalid_argument);
  const SaeParams p = random_params(5, 3, 2, 33);
  CHECK_THROWS_AS(encode(p, Eigen::VectorXd::Zero(4)), std::invalid_argument);
  CHECK_THROWS_AS(decode(p, Eigen::VectorXd::Zero(4)), std::invalid_argument);
}
