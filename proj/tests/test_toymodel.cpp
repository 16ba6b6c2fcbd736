#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstring>

#include "monolab/dataset.hpp"
#include "monolab/rng.hpp"
#include "monolab/toymodel.hpp"

using namespace monolab;

namespace {

ToyModel random_model(int m, int n, bool relu, uint64_t seed) {
  ToyModel model;
  model.relu_output = relu;
  model.W.resize(m, n);
  model.b = Eigen::VectorXd::Zero(n);
  RandomStream rng("test.toymodel", seed);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) model.W(i, j) = rng.next_normal();
  if (relu) {
    for (int j = 0; j < n; ++j) model.b(j) = 0.3 * rng.next_normal();
  }
  return model;
}

Eigen::MatrixXd random_inputs(int rows, int n, uint64_t seed) {
  Eigen::MatrixXd X(rows, n);
  RandomStream rng("test.toymodel.inputs", seed);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < n; ++j) X(i, j) = rng.next_double();
  return X;
}

// Triple-loop reconstruction of W^T W x per row, no matrix algebra.
Eigen::MatrixXd naive_reconstruct(const ToyModel& model, const Eigen::MatrixXd& X) {
  const int m = static_cast<int>(model.W.rows());
  const int n = static_cast<int>(model.W.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), n);
  for (int r = 0; r < X.rows(); ++r) {
    std::vector<double> h(static_cast<size_t>(m), 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) h[static_cast<size_t>(i)] += model.W(i, j) * X(r, j);
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int i = 0; i < m; ++i) v += model.W(i, j) * h[static_cast<size_t>(i)];
      if (model.relu_output) v = std::max(v + model.b(j), 0.0);
      out(r, j) = v;
    }
  }
  return out;
}

double max_rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      const double denom = std::max({std::abs(a(i, j)), std::abs(b(i, j)), 1e-6});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("reconstruct matches hand-checkable weight matrices") {
  const int n = 5, m = 2;
  ToyModel slice;
  slice.W = Eigen::MatrixXd::Zero(m, n);
  slice.W(0, 0) = 1.0;
  slice.W(1, 1) = 1.0;
  slice.b = Eigen::VectorXd::Zero(n);
  const Eigen::MatrixXd X = random_inputs(7, n, 1);
  const Eigen::MatrixXd out = reconstruct(slice, X);
  CHECK((out.leftCols(2) - X.leftCols(2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(out.rightCols(3).cwiseAbs().maxCoeff() == 0.0);

  ToyModel zero;
  zero.W = Eigen::MatrixXd::Zero(m, n);
  zero.b = Eigen::VectorXd::Zero(n);
  CHECK(reconstruct(zero, X).cwiseAbs().maxCoeff() == 0.0);

  ToyModel bad = slice;
  CHECK_THROWS_AS(reconstruct(bad, random_inputs(3, n + 1, 2)), std::invalid_argument);
}

TEST_CASE("reconstruct agrees with a triple-loop oracle, both variants") {
  for (const bool relu : {false, true}) {
    const ToyModel model = random_model(3, 6, relu, relu ? 11u : 12u);
    const Eigen::MatrixXd X = random_inputs(9, 6, 21);
    CHECK(max_rel_err(reconstruct(model, X), naive_reconstruct(model, X)) < 1e-12);
  }
}

TEST_CASE("plain reconstruction is linear in the input") {
  const ToyModel model = random_model(2, 5, false, 3);
  const Eigen::MatrixXd A = random_inputs(4, 5, 31);
  const Eigen::MatrixXd B = random_inputs(4, 5, 32);
  const Eigen::MatrixXd lhs = reconstruct(model, 0.7 * A + (-1.3) * B);
  const Eigen::MatrixXd rhs = 0.7 * reconstruct(model, A) - 1.3 * reconstruct(model, B);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gram is the exact W^T W with its spectral properties") {
  const ToyModel model = random_model(3, 7, false, 4);
  const Eigen::MatrixXd G = gram(model);
  CHECK((G - G.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);
  int rank = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 1e-10) ++rank;
  CHECK(rank <= 3);

  ToyModel slice;
  slice.W = Eigen::MatrixXd::Zero(2, 4);
  slice.W(0, 0) = 1.0;
  slice.W(1, 2) = 1.0;
  slice.b = Eigen::VectorXd::Zero(4);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(4, 4);
  D(0, 0) = 1.0;
  D(2, 2) = 1.0;
  CHECK((gram(slice) - D).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("represented_features and antipodal_pairs read the gram as documented") {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(4, 4);
  G(0, 0) = 1.0;
  G(2, 2) = 0.9;
  CHECK(represented_features(G) == std::vector<int>{0, 2});
  CHECK(represented_features(Eigen::MatrixXd::Zero(3, 3)).empty());
  CHECK_THROWS_AS(represented_features(G, 0.0), std::invalid_argument);

  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  CHECK(antipodal_pairs(A).empty());
  A(0, 2) = A(2, 0) = -1.0;
  const auto pairs = antipodal_pairs(A);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0] == std::pair<int, int>(0, 2));
  CHECK_THROWS_AS(antipodal_pairs(A, 0.5), std::invalid_argument);
}

TEST_CASE("extract_features produces the documented selections") {
  Eigen::MatrixXd X(1, 2);
  X << 0.7, 0.2;
  FeatureConstruction mono;
  mono.kind = FeatureConstruction::Kind::mono_direct;
  mono.indices = {0};
  CHECK(extract_features(X, mono)(0, 0) == 0.7);

  FeatureConstruction poly;
  poly.kind = FeatureConstruction::Kind::poly_antipodal;
  poly.signed_pairs = {{0, 1}};
  CHECK(std::abs(extract_features(X, poly)(0, 0) - 0.5) < 1e-15);

  ToyModel slice;
  slice.W = Eigen::MatrixXd::Zero(1, 2);
  slice.W(0, 0) = 1.0;
  slice.b = Eigen::VectorXd::Zero(2);
  FeatureConstruction hidden;
  hidden.kind = FeatureConstruction::Kind::learned_hidden;
  CHECK(extract_features(X, hidden, &slice)(0, 0) == 0.7);
  CHECK_THROWS_AS(extract_features(X, hidden), std::invalid_argument);

  mono.indices = {5};
  CHECK_THROWS_AS(extract_features(X, mono), std::out_of_range);
}

TEST_CASE("analytic reconstruction gradients match central finite differences") {
  for (const bool relu : {false, true}) {
    const int n = 6, m = 3;
    ToyModel model = random_model(m, n, relu, relu ? 101u : 102u);
    const Eigen::MatrixXd X = random_inputs(5, n, 41);
    if (relu) {
      // FD only makes sense away from the ReLU kinks.
      const Eigen::MatrixXd pre =
          ((X * model.W.transpose()) * model.W).rowwise() + model.b.transpose();
      REQUIRE(pre.cwiseAbs().minCoeff() > 1e-3);
    }
    Eigen::MatrixXd dW;
    Eigen::VectorXd db;
    reconstruction_loss(model, X, &dW, &db);
    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        ToyModel p = model, q = model;
        p.W(i, j) += h;
        q.W(i, j) -= h;
        const double fd = (reconstruction_loss(p, X) - reconstruction_loss(q, X)) / (2 * h);
        worst = std::max(worst, std::abs(fd - dW(i, j)) /
                                    std::max({std::abs(fd), std::abs(dW(i, j)), 1e-6}));
      }
    }
    if (relu) {
      for (int j = 0; j < n; ++j) {
        ToyModel p = model, q = model;
        p.b(j) += h;
        q.b(j) -= h;
        const double fd = (reconstruction_loss(p, X) - reconstruction_loss(q, X)) / (2 * h);
        worst = std::max(worst, std::abs(fd - db(j)) /
                                    std::max({std::abs(fd), std::abs(db(j)), 1e-6}));
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("dense n=2 bottleneck training recovers the top principal direction") {
  // With S=0 the optimum of min E||W^T W x - x||^2 over rank-1 W^T W is the
  // projector onto the top eigenvector of the empirical second-moment matrix
  // X^T X / N, computed here by an independent eigensolver.
  DataSpec spec;
  spec.num_samples = 20000;
  spec.num_features = 2;
  spec.sparsity = 0.0;
  spec.seed = 7;
  const Dataset data = generate(spec);

  TrainConfig cfg = toy_default_train_config();
  cfg.epochs = 3000;
  cfg.seed = 1;
  std::vector<double> history;
  const ToyModel model = train_reconstruction(data, 1, cfg, false, &history);

  const Eigen::MatrixXd M = data.X.transpose() * data.X / data.X.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const Eigen::VectorXd v = es.eigenvectors().col(1);  // eigenvalues ascending
  const Eigen::MatrixXd target = v * v.transpose();
  CHECK((gram(model) - target).cwiseAbs().maxCoeff() < 0.01);
  // Residual equals the discarded eigenvalue at the optimum.
  CHECK(std::abs(history.back() - es.eigenvalues()(0)) < 0.005);
}

TEST_CASE("training loss is monotone after a smoothing window") {
  DataSpec spec;
  spec.num_samples = 1000;
  spec.num_features = 40;
  spec.sparsity = 0.2;
  spec.seed = 17;
  const Dataset data = generate(spec);
  TrainConfig cfg = toy_default_train_config();
  cfg.epochs = 250;
  cfg.seed = 2;
  std::vector<double> history;
  train_reconstruction(data, 20, cfg, false, &history);
  REQUIRE(history.size() == 250);
  const int window = 10;
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (size_t start = 0; start + window <= history.size(); start += window) {
    double mean = 0.0;
    for (int k = 0; k < window; ++k) mean += history[start + static_cast<size_t>(k)];
    mean /= window;
    if (mean > prev * (1.0 + 1e-6)) monotone = false;
    prev = mean;
  }
  CHECK(monotone);
}

TEST_CASE("high sparsity with the relu variant packs more concepts than dimensions") {
  DataSpec spec;
  spec.num_samples = 2048;
  spec.num_features = 16;
  spec.sparsity = 0.95;
  spec.seed = 23;
  const Dataset data = generate(spec);
  TrainConfig cfg = toy_default_train_config();
  cfg.epochs = 3000;
  cfg.seed = 3;
  const ToyModel model = train_reconstruction(data, 6, cfg, true);
  const Eigen::MatrixXd G = gram(model);
  CHECK(represented_features(G).size() > 6);
  CHECK(!antipodal_pairs(G).empty());
}

TEST_CASE("training is bit-reproducible per seed") {
  DataSpec spec;
  spec.num_samples = 256;
  spec.num_features = 8;
  spec.sparsity = 0.5;
  spec.seed = 5;
  const Dataset data = generate(spec);
  TrainConfig cfg = toy_default_train_config();
  cfg.epochs = 50;
  cfg.seed = 9;
  const ToyModel a = train_reconstruction(data, 3, cfg);
  const ToyModel b = train_reconstruction(data, 3, cfg);
  CHECK(toy_checksum(a) == toy_checksum(b));
  CHECK(std::memcmp(a.W.data(), b.W.data(),
                    sizeof(double) * static_cast<size_t>(a.W.size())) == 0);
  cfg.seed = 10;
  CHECK(toy_checksum(train_reconstruction(data, 3, cfg)) != toy_checksum(a));
}

TEST_CASE("divergence is reported with the epoch index") {
  DataSpec spec;
  spec.num_samples = 64;
  spec.num_features = 6;
  spec.sparsity = 0.2;
  spec.seed = 6;
  const Dataset data = generate(spec);
  TrainConfig cfg;
  cfg.optimizer = TrainConfig::Optimizer::sgd;
  cfg.learning_rate = 1e9;
  cfg.epochs = 50;
  cfg.seed = 1;
  CHECK_THROWS_WITH_AS(train_reconstruction(data, 2, cfg),
                       doctest::Contains("epoch"), std::runtime_error);
}

TEST_CASE("minibatch training also runs deterministically") {
  DataSpec spec;
  spec.num_samples = 300;
  spec.num_features = 10;
  spec.sparsity = 0.3;
  spec.seed = 8;
  const Dataset data = generate(spec);
  TrainConfig cfg = toy_default_train_config();
  cfg.epochs = 20;
  cfg.batch_size = 64;
  cfg.seed = 4;
  const ToyModel a = train_reconstruction(data, 4, cfg);
  const ToyModel b = train_reconstruction(data, 4, cfg);
  CHECK(toy_checksum(a) == toy_checksum(b));
}
