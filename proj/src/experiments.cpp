#include "monolab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "monolab/metrics.hpp"
#include "monolab/optim.hpp"
#include "monolab/sae.hpp"

namespace monolab {

namespace {

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

Dataset subset(const Dataset& data, const std::vector<int>& rows) {
  Dataset out;
  out.X = select_rows(data.X, rows);
  out.y = select_labels(data.y, rows);
  out.spec = data.spec;
  out.spec.num_samples = static_cast<int>(rows.size());
  return out;
}

}  // namespace

Split train_val_split(int num_samples, double val_fraction, uint64_t seed) {
  if (num_samples < 2)
    throw std::invalid_argument("train_val_split: need at least 2 samples");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("train_val_split: val_fraction must lie in (0, 1)");
  const std::vector<int> order =
      shuffled_indices(num_samples, "experiments.split", seed, 0);
  const int val_count = std::clamp(
      static_cast<int>(std::lround(val_fraction * num_samples)), 1, num_samples - 1);
  Split split;
  split.val.assign(order.begin(), order.begin() + val_count);
  split.train.assign(order.begin() + val_count, order.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= X.rows())
      throw std::out_of_range("select_rows: row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  }
  return out;
}

std::vector<int> select_labels(const std::vector<int>& y, const std::vector<int>& rows) {
  std::vector<int> out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<size_t>(rows[i]) >= y.size())
      throw std::out_of_range("select_labels: row index out of range");
    out[i] = y[static_cast<size_t>(rows[i])];
  }
  return out;
}

ToyModel ideal_mono_model(int n, int m) {
  if (m < 1 || m > n)
    throw std::invalid_argument("ideal_mono_model: need 1 <= m <= n");
  ToyModel model;
  model.W = Eigen::MatrixXd::Zero(m, n);
  for (int k = 0; k < m; ++k) model.W(k, k) = 1.0;
  model.b = Eigen::VectorXd::Zero(n);
  return model;
}

ToyModel ideal_poly_model(int n, int m) {
  if (m < 1 || 2 * m > n)
    throw std::invalid_argument("ideal_poly_model: need 1 <= 2m <= n");
  ToyModel model;
  model.W = Eigen::MatrixXd::Zero(m, n);
  for (int k = 0; k < m; ++k) {
    model.W(k, 2 * k) = 1.0;
    model.W(k, 2 * k + 1) = -1.0;
  }
  model.b = Eigen::VectorXd::Zero(n);
  return model;
}

FeatureConstruction mono_construction(int m) {
  if (m < 1) throw std::invalid_argument("mono_construction: need m >= 1");
  FeatureConstruction c;
  c.kind = FeatureConstruction::Kind::mono_direct;
  c.indices.resize(static_cast<size_t>(m));
  std::iota(c.indices.begin(), c.indices.end(), 0);
  return c;
}

FeatureConstruction poly_construction(int m) {
  if (m < 1) throw std::invalid_argument("poly_construction: need m >= 1");
  FeatureConstruction c;
  c.kind = FeatureConstruction::Kind::poly_antipodal;
  for (int k = 0; k < m; ++k) c.signed_pairs.emplace_back(2 * k, 2 * k + 1);
  return c;
}

ProbeConfig Fig4Config::fig4_probe_defaults() {
  ProbeConfig cfg;
  cfg.loss = ProbeConfig::Loss::ce;
  cfg.train.learning_rate = 0.05;
  cfg.train.epochs = 400;
  cfg.train.batch_size = 0;
  return cfg;
}

AccuracyPair probe_feature_accuracy(const FeatureConstruction& features,
                                    NoiseCondition condition, const Fig4Config& cfg,
                                    uint64_t seed) {
  DataSpec spec;
  spec.num_samples = cfg.num_samples;
  spec.num_features = cfg.n;
  spec.sparsity = 1.0 - cfg.active_prob;
  spec.seed = seed;
  const Dataset data = generate(spec);
  const Split split = train_val_split(cfg.num_samples, cfg.val_fraction, seed);

  const Eigen::MatrixXd X_train = select_rows(data.X, split.train);
  Eigen::MatrixXd X_val = select_rows(data.X, split.val);
  std::vector<int> y_train = select_labels(data.y, split.train);
  const std::vector<int> y_val = select_labels(data.y, split.val);

  // Label noise corrupts only training labels; input noise perturbs only
  // validation inputs (the probe itself trains clean in both conditions).
  if (condition == NoiseCondition::label_noise) {
    y_train = flip_labels(y_train, cfg.n, cfg.label_eta, 2 * seed);
  } else if (condition == NoiseCondition::input_gaussian) {
    NoiseSpec noise;
    noise.kind = NoiseSpec::Kind::input_gaussian;
    noise.rate_or_strength = cfg.input_lambda;
    noise.seed = 2 * seed + 1;
    X_val = perturb_inputs(X_val, noise);
  }

  const Eigen::MatrixXd F_train = extract_features(X_train, features);
  const Eigen::MatrixXd F_val = extract_features(X_val, features);

  ProbeConfig probe_cfg = cfg.probe;
  probe_cfg.train.seed = seed;
  const ProbeModel probe = train_probe(F_train, y_train, cfg.n, probe_cfg);

  AccuracyPair out;
  out.train_acc = evaluate_probe(probe, F_train, y_train);
  out.val_acc = evaluate_probe(probe, F_val, y_val);
  return out;
}

std::vector<Fig4SeedResult> fig4b_replica(const Fig4Config& cfg,
                                          const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("fig4b_replica: no seeds");
  const FeatureConstruction mono = mono_construction(cfg.m);
  const FeatureConstruction poly = poly_construction(cfg.m);
  std::vector<Fig4SeedResult> rows;
  rows.reserve(seeds.size());
  for (uint64_t seed : seeds) {
    Fig4SeedResult row;
    row.seed = seed;
    row.mono_clean = probe_feature_accuracy(mono, NoiseCondition::clean, cfg, seed);
    row.poly_clean = probe_feature_accuracy(poly, NoiseCondition::clean, cfg, seed);
    row.mono_label = probe_feature_accuracy(mono, NoiseCondition::label_noise, cfg, seed);
    row.poly_label = probe_feature_accuracy(poly, NoiseCondition::label_noise, cfg, seed);
    row.mono_gauss =
        probe_feature_accuracy(mono, NoiseCondition::input_gaussian, cfg, seed);
    row.poly_gauss =
        probe_feature_accuracy(poly, NoiseCondition::input_gaussian, cfg, seed);
    rows.push_back(row);
  }
  return rows;
}

ContrastiveConsistency ncl_vs_cl_consistency(const ContrastiveConsistencyConfig& cfg,
                                             uint64_t seed) {
  DataSpec spec = cfg.data;
  spec.seed = seed;
  const Dataset data = generate(spec);

  PretrainConfig pre;
  pre.encoder.dims = cfg.encoder_dims;
  pre.encoder.seed = seed;
  pre.augment = cfg.augment;
  pre.train = cfg.train;
  pre.train.seed = seed;

  // Same data, same encoder init; the only difference is the non-negative
  // activation.
  pre.nonneg = true;
  const Mlp ncl = pretrain(data, pre);
  pre.nonneg = false;
  const Mlp cl = pretrain(data, pre);

  const Eigen::MatrixXd f_ncl = ncl.forward(data.X);
  const Eigen::MatrixXd f_cl = cl.forward(data.X);
  ContrastiveConsistency out;
  out.nonneg_mean =
      semantic_consistency_quantile(f_ncl, data.y, spec.num_features, cfg.q).mean_score;
  out.standard_mean =
      semantic_consistency_quantile(f_cl, data.y, spec.num_features, cfg.q).mean_score;
  out.nonneg_sparsity = activation_sparsity(f_ncl);
  out.standard_sparsity = activation_sparsity(f_cl);
  return out;
}

ProbeConfig SaeVsRawConfig::robust_probe_defaults() {
  ProbeConfig cfg;
  cfg.loss = ProbeConfig::Loss::ce;
  cfg.train.learning_rate = 0.05;
  cfg.train.epochs = 400;
  cfg.train.batch_size = 0;
  return cfg;
}

SaeVsRaw sae_vs_raw_label_noise(const SaeVsRawConfig& cfg, uint64_t seed) {
  DataSpec spec = cfg.data;
  spec.seed = seed;
  const Dataset data = generate(spec);
  const Split split = train_val_split(spec.num_samples, cfg.val_fraction, seed);

  const Eigen::MatrixXd F_all = extract_features(data.X, poly_construction(cfg.m));
  const Eigen::MatrixXd F_train = select_rows(F_all, split.train);
  const Eigen::MatrixXd F_val = select_rows(F_all, split.val);
  std::vector<int> y_train = select_labels(data.y, split.train);
  const std::vector<int> y_val = select_labels(data.y, split.val);
  y_train = flip_labels(y_train, spec.num_features, cfg.label_eta, 2 * seed);

  TrainConfig sae_cfg = cfg.sae_train;
  sae_cfg.seed = seed;
  const SaeParams sae = train_sae(F_train, cfg.h, cfg.K, sae_cfg);
  const Eigen::MatrixXd Z_train = encode_batch(sae, F_train);
  const Eigen::MatrixXd Z_val = encode_batch(sae, F_val);

  ProbeConfig probe_cfg = cfg.probe;
  probe_cfg.train.seed = seed;
  const ProbeModel sae_probe = train_probe(Z_train, y_train, spec.num_features, probe_cfg);
  const ProbeModel raw_probe = train_probe(F_train, y_train, spec.num_features, probe_cfg);

  SaeVsRaw out;
  out.sae_val_acc = evaluate_probe(sae_probe, Z_val, y_val);
  out.raw_val_acc = evaluate_probe(raw_probe, F_val, y_val);
  return out;
}

NceVsCe nce_vs_ce_subsample(const NceVsCeConfig& cfg, uint64_t seed) {
  DataSpec spec = cfg.data;
  spec.seed = seed;
  const Dataset data = generate(spec);
  const Split split = train_val_split(spec.num_samples, cfg.val_fraction, seed);
  const Dataset train_data = subset(data, split.train);
  const Eigen::MatrixXd X_val = select_rows(data.X, split.val);
  const std::vector<int> y_val = select_labels(data.y, split.val);

  PretrainConfig pre;
  pre.encoder.dims = cfg.encoder_dims;
  pre.encoder.seed = seed;
  pre.augment = cfg.augment;
  pre.train = cfg.pretrain;
  pre.train.seed = seed;

  ProbeConfig probe_cfg;
  probe_cfg.mode = ProbeConfig::Mode::finetune;
  probe_cfg.subsample_fraction = cfg.subsample_fraction;
  probe_cfg.train = cfg.finetune;
  probe_cfg.train.seed = seed;

  // Two complete pipelines from the same initialization: non-negative
  // pretraining with the non-negative head against plain contrastive
  // pretraining with the plain head.
  NceVsCe out;
  {
    pre.nonneg = true;
    Mlp enc = pretrain(train_data, pre);
    probe_cfg.loss = ProbeConfig::Loss::nce;
    const ProbeModel probe = train_probe_on_encoder(enc, train_data.X, train_data.y,
                                                    spec.num_features, probe_cfg);
    out.nce_val_acc = evaluate_probe(probe, enc.forward(X_val), y_val);
  }
  {
    pre.nonneg = false;
    Mlp enc = pretrain(train_data, pre);
    probe_cfg.loss = ProbeConfig::Loss::ce;
    const ProbeModel probe = train_probe_on_encoder(enc, train_data.X, train_data.y,
                                                    spec.num_features, probe_cfg);
    out.ce_val_acc = evaluate_probe(probe, enc.forward(X_val), y_val);
  }
  return out;
}

OutcomeConsistency consistency_by_outcome(const OutcomeConsistencyConfig& cfg,
                                          uint64_t seed) {
  DataSpec spec = cfg.data;
  spec.seed = seed;
  const Dataset data = generate(spec);
  const Split split = train_val_split(spec.num_samples, cfg.val_fraction, seed);

  PretrainConfig pre;
  pre.encoder.dims = cfg.encoder_dims;
  pre.encoder.seed = seed;
  pre.nonneg = true;
  pre.augment = cfg.augment;
  pre.train = cfg.pretrain;
  pre.train.seed = seed;
  const Mlp encoder = pretrain(data, pre);

  const Eigen::MatrixXd F_train = encoder.forward(select_rows(data.X, split.train));
  const Eigen::MatrixXd F_val = encoder.forward(select_rows(data.X, split.val));
  std::vector<int> y_train = select_labels(data.y, split.train);
  const std::vector<int> y_val = select_labels(data.y, split.val);
  y_train = flip_labels(y_train, spec.num_features, cfg.label_eta, 2 * seed);

  ProbeConfig probe_cfg;
  probe_cfg.train = cfg.probe_train;
  probe_cfg.train.seed = seed;
  const ProbeModel probe = train_probe(F_train, y_train, spec.num_features, probe_cfg);

  const std::vector<int> pred = probe_predictions(probe, F_val);
  std::vector<bool> correct(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) correct[i] = pred[i] == y_val[i];

  const ConsistencyReport report =
      semantic_consistency_quantile(F_val, y_val, spec.num_features, cfg.q);
  const SplitScores scores = per_sample_top_dimension_consistency(F_val, report, correct);

  OutcomeConsistency out;
  out.correct_count = static_cast<int>(scores.correct.size());
  out.incorrect_count = static_cast<int>(scores.incorrect.size());
  out.correct_mean = mean_of(scores.correct);
  out.incorrect_mean = mean_of(scores.incorrect);
  return out;
}

}  // namespace monolab
