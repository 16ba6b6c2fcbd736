// Experiment driver. Every subcommand resolves its options (command line over
// config file over defaults), runs one pipeline, and leaves its artifacts in a
// run directory together with a manifest that is sufficient to re-execute the
// run exactly. Usage and config errors exit 2 before anything is written;
// pipeline errors exit 1 with a one-line JSON description on stderr.

#include <CLI11.hpp>

#include <Eigen/Core>

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "monolab/dataset.hpp"
#include "monolab/experiments.hpp"
#include "monolab/io.hpp"
#include "monolab/mc_oracle.hpp"
#include "monolab/metrics.hpp"
#include "monolab/mlp.hpp"
#include "monolab/monolora.hpp"
#include "monolab/ncl.hpp"
#include "monolab/optim.hpp"
#include "monolab/probe.hpp"
#include "monolab/sae.hpp"
#include "monolab/separability.hpp"
#include "monolab/svg.hpp"
#include "monolab/sweep.hpp"
#include "monolab/toymodel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace monolab;

namespace {

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return std::string(buf);
}

// Collects artifacts as they are written so the manifest can list them.
struct RunDir {
  fs::path dir;
  std::vector<std::string> artifacts;

  void text(const std::string& name, const std::string& content) {
    io::write_text((dir / name).string(), content);
    artifacts.push_back(name);
  }
  void tensor(const std::string& name, const Eigen::MatrixXd& m) {
    io::write_tensor((dir / name).string(), m);
    artifacts.push_back(name);
  }
  void matrix_csv(const std::string& name, const Eigen::MatrixXd& m) {
    std::vector<std::string> header;
    header.reserve(static_cast<size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) header.push_back("c" + std::to_string(c));
    io::write_matrix_csv((dir / name).string(), m, header);
    artifacts.push_back(name);
  }
};

std::string loss_csv(const std::vector<double>& history) {
  std::string out = "# monolab loss csv v1\nepoch,loss\n";
  for (size_t i = 0; i < history.size(); ++i)
    out += std::to_string(i) + "," + io::format_double(history[i]) + "\n";
  return out;
}

FeatureKind parse_kind(const std::string& s) {
  if (s == "mono") return FeatureKind::mono;
  if (s == "poly") return FeatureKind::poly;
  throw std::invalid_argument("unknown feature kind: " + s);
}

void write_manifest(const RunDir& run, const std::string& subcommand,
                    const std::string& config_text,
                    const std::vector<uint64_t>& seeds) {
  json m;
  m["subcommand"] = subcommand;
  m["config"] = config_text;
  m["config_hash"] = hex64(bytes_checksum(config_text.data(), config_text.size()));
  m["seeds"] = seeds;
  m["artifacts"] = run.artifacts;
  io::write_text((run.dir / "manifest.json").string(), m.dump(2) + "\n");
}

// ---- theory ----------------------------------------------------------------

std::string theory_csv(const std::vector<double>& S_values,
                       const std::vector<double>& etas,
                       const std::vector<double>& lambdas) {
  // One condition per grid entry: label-noise rows carry lambda 0, input-noise
  // rows carry eta 0. A zero lambda adds nothing the eta grid lacks.
  std::vector<std::pair<double, double>> conditions;
  for (double eta : etas) conditions.emplace_back(eta, 0.0);
  for (double lam : lambdas)
    if (lam != 0.0) conditions.emplace_back(0.0, lam);

  std::string out = "# monolab theory csv v1\nkind,S,eta,lambda,mu0,mu1,var0,var1,delta_mu,J\n";
  for (double S : S_values)
    for (const auto& [eta, lam] : conditions)
      for (FeatureKind kind : {FeatureKind::mono, FeatureKind::poly}) {
        const Moments m = separability::moments_under_noise(kind, S, eta, lam);
        const separability::SeparabilityReport rep =
            separability::evaluate_condition(kind, S, eta, lam);
        out += std::string(kind == FeatureKind::mono ? "mono" : "poly") + "," +
               io::format_double(S) + "," + io::format_double(eta) + "," +
               io::format_double(lam) + "," + io::format_double(m.mu0) + "," +
               io::format_double(m.mu1) + "," + io::format_double(m.var0) + "," +
               io::format_double(m.var1) + "," + io::format_double(rep.delta_mu) + "," +
               io::format_double(rep.J) + "\n";
      }
  return out;
}

// ---- sweep cell functions ----------------------------------------------------

std::vector<MetricValue> theory_j_cell(const CellSpec& cell) {
  const separability::SeparabilityReport rep =
      separability::evaluate_condition(parse_kind(cell.method), cell.S, cell.eta,
                                       cell.lambda);
  return {{"delta_mu", rep.delta_mu}, {"J", rep.J}};
}

struct ProbeCellParams {
  int num_samples = 600;
  int n = 8;
  int probe_epochs = 150;
};

std::vector<MetricValue> probe_cell(const CellSpec& cell, const ProbeCellParams& p) {
  const DataSpec spec{p.num_samples, p.n, cell.S, cell.seed};
  const Dataset data = generate(spec);
  const Split split = train_val_split(spec.num_samples, 0.2, cell.seed);

  const FeatureConstruction construction =
      cell.method == "poly" ? poly_construction(p.n / 2)
                            : mono_construction(p.n);
  if (cell.method != "mono" && cell.method != "poly")
    throw std::invalid_argument("unknown method: " + cell.method);

  Eigen::MatrixXd X_val = select_rows(data.X, split.val);
  std::vector<int> y_train = select_labels(data.y, split.train);
  if (cell.eta > 0.0) y_train = flip_labels(y_train, p.n, cell.eta, 2 * cell.seed);
  if (cell.lambda > 0.0)
    X_val = perturb_inputs(
        X_val, NoiseSpec{NoiseSpec::Kind::input_gaussian, cell.lambda, 2 * cell.seed + 1});

  const Eigen::MatrixXd F_train =
      extract_features(select_rows(data.X, split.train), construction);
  const Eigen::MatrixXd F_val = extract_features(X_val, construction);

  ProbeConfig cfg;
  cfg.subsample_fraction = cell.fraction;
  cfg.train.learning_rate = 0.05;
  cfg.train.epochs = p.probe_epochs;
  cfg.train.seed = cell.seed;
  const ProbeModel probe = train_probe(F_train, y_train, p.n, cfg);
  return {{"train_acc", evaluate_probe(probe, F_train, y_train)},
          {"val_acc", evaluate_probe(probe, F_val,
                                     select_labels(data.y, split.val))}};
}

// ---- figure -----------------------------------------------------------------

void run_toy_robustness_figure(RunDir& run, const Fig4Config& cfg,
                               const std::vector<uint64_t>& seeds) {
  const ToyModel mono = ideal_mono_model(cfg.n, cfg.m);
  const ToyModel poly = ideal_poly_model(cfg.n, cfg.m);
  run.text("gram_mono.svg", svg::heatmap(gram(mono), "direct embedding gram"));
  run.text("gram_poly.svg", svg::heatmap(gram(poly), "antipodal embedding gram"));
  run.matrix_csv("gram_mono.csv", gram(mono));
  run.matrix_csv("gram_poly.csv", gram(poly));

  const std::vector<Fig4SeedResult> rows = fig4b_replica(cfg, seeds);

  std::string csv =
      "# monolab robustness csv v1\nseed,condition,method,train_acc,val_acc\n";
  double mono_mean[3] = {0, 0, 0};
  double poly_mean[3] = {0, 0, 0};
  const char* names[3] = {"clean", "label_noise", "input_gaussian"};
  for (const Fig4SeedResult& r : rows) {
    const AccuracyPair mono_cells[3] = {r.mono_clean, r.mono_label, r.mono_gauss};
    const AccuracyPair poly_cells[3] = {r.poly_clean, r.poly_label, r.poly_gauss};
    for (int c = 0; c < 3; ++c) {
      csv += std::to_string(r.seed) + "," + names[c] + ",mono," +
             io::format_double(mono_cells[c].train_acc) + "," +
             io::format_double(mono_cells[c].val_acc) + "\n";
      csv += std::to_string(r.seed) + "," + names[c] + ",poly," +
             io::format_double(poly_cells[c].train_acc) + "," +
             io::format_double(poly_cells[c].val_acc) + "\n";
      mono_mean[c] += mono_cells[c].val_acc / static_cast<double>(rows.size());
      poly_mean[c] += poly_cells[c].val_acc / static_cast<double>(rows.size());
    }
  }
  run.text("robustness_bars.csv", csv);

  std::vector<svg::BarSeries> series(2);
  series[0].label = "mono";
  series[0].values = {mono_mean[0], mono_mean[1], mono_mean[2]};
  series[1].label = "poly";
  series[1].values = {poly_mean[0], poly_mean[1], poly_mean[2]};
  run.text("robustness_bars.svg",
           svg::bar_chart(series, {names[0], names[1], names[2]},
                          "probe accuracy under training-label and input noise",
                          "validation accuracy"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"monolab: sparse-feature robustness experiments"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Key-value config file with [subcommand] sections");
  app.allow_config_extras(CLI::config_extras_mode::error);

  std::string out_root = "runs";
  std::string run_name;
  std::vector<uint64_t> seeds{1};
  int jobs = 1;
  app.add_option("--out", out_root, "Output root directory")->envname("MONOLAB_OUT");
  app.add_option("--name", run_name, "Run directory name (default: subcommand)");
  app.add_option("--seeds", seeds, "Seed list for multi-seed subcommands")->delimiter(',');
  app.add_option("--jobs", jobs, "Worker threads for sweep")->check(CLI::Range(1, 256));

  // theory
  auto* cmd_theory = app.add_subcommand("theory", "Closed-form moments and J over grids");
  std::vector<double> th_S{0.2}, th_eta{0.0}, th_lambda{0.0};
  cmd_theory->add_option("--S", th_S, "Sparsity grid, P(coordinate = 0)")->delimiter(',');
  cmd_theory->add_option("--eta", th_eta, "Label-noise grid")->delimiter(',');
  cmd_theory->add_option("--lambda", th_lambda, "Input-noise grid")->delimiter(',');

  // mc
  auto* cmd_mc = app.add_subcommand("mc", "Monte-Carlo estimates of the same moments");
  std::string mc_kind = "mono";
  double mc_S = 0.2, mc_eta = 0.0, mc_lambda = 0.0;
  long long mc_samples = 1'000'000;
  int mc_threads = 1;
  cmd_mc->add_option("--kind", mc_kind)->check(CLI::IsMember({"mono", "poly"}));
  cmd_mc->add_option("--S", mc_S);
  cmd_mc->add_option("--eta", mc_eta);
  cmd_mc->add_option("--lambda", mc_lambda);
  cmd_mc->add_option("--samples", mc_samples)->check(CLI::PositiveNumber);
  cmd_mc->add_option("--threads", mc_threads)->check(CLI::Range(1, 256));

  // toy-train
  auto* cmd_toy = app.add_subcommand("toy-train", "Train the bottleneck reconstruction model");
  int toy_n = 40, toy_m = 20, toy_samples = 4096, toy_epochs = 2000;
  double toy_S = 0.2, toy_lr = 1e-2;
  bool toy_relu = false;
  cmd_toy->add_option("--n", toy_n)->check(CLI::PositiveNumber);
  cmd_toy->add_option("--m", toy_m)->check(CLI::PositiveNumber);
  cmd_toy->add_option("--S", toy_S);
  cmd_toy->add_option("--samples", toy_samples)->check(CLI::PositiveNumber);
  cmd_toy->add_option("--epochs", toy_epochs)->check(CLI::PositiveNumber);
  cmd_toy->add_option("--lr", toy_lr);
  cmd_toy->add_flag("--relu", toy_relu, "Reconstruct through ReLU(W^T W x + b)");

  // probe
  auto* cmd_probe = app.add_subcommand("probe", "Linear probe over a feature construction");
  int pr_n = 8, pr_m = 0, pr_samples = 2000, pr_epochs = 300, pr_batch = 0;
  double pr_sparsity = 0.7, pr_rate = 0.0, pr_fraction = 1.0, pr_lr = 0.05,
         pr_val_fraction = 0.2;
  std::string pr_construction = "mono", pr_loss = "ce", pr_noise = "none";
  cmd_probe->add_option("--n", pr_n)->check(CLI::PositiveNumber);
  cmd_probe->add_option("--m", pr_m, "Construction width, 0 = automatic");
  cmd_probe->add_option("--samples", pr_samples)->check(CLI::PositiveNumber);
  cmd_probe->add_option("--sparsity", pr_sparsity, "P(coordinate = 0)");
  cmd_probe->add_option("--construction", pr_construction)
      ->check(CLI::IsMember({"mono", "poly"}));
  cmd_probe->add_option("--loss", pr_loss)->check(CLI::IsMember({"ce", "nce", "sce"}));
  cmd_probe->add_option("--noise", pr_noise)
      ->check(CLI::IsMember({"none", "label", "gaussian"}));
  cmd_probe->add_option("--rate", pr_rate, "eta for label noise, stddev for gaussian");
  cmd_probe->add_option("--fraction", pr_fraction, "Training subsample fraction");
  cmd_probe->add_option("--epochs", pr_epochs)->check(CLI::PositiveNumber);
  cmd_probe->add_option("--lr", pr_lr);
  cmd_probe->add_option("--batch", pr_batch);
  cmd_probe->add_option("--val-fraction", pr_val_fraction);

  // sae
  auto* cmd_sae = app.add_subcommand("sae", "Top-K sparse autoencoder on poly features");
  int sae_n = 20, sae_m = 10, sae_samples = 4000, sae_h = 40, sae_K = 6,
      sae_epochs = 300, sae_batch = 256;
  double sae_sparsity = 0.8, sae_lr = 1e-2;
  cmd_sae->add_option("--n", sae_n)->check(CLI::PositiveNumber);
  cmd_sae->add_option("--m", sae_m, "Antipodal construction width")->check(CLI::PositiveNumber);
  cmd_sae->add_option("--samples", sae_samples)->check(CLI::PositiveNumber);
  cmd_sae->add_option("--sparsity", sae_sparsity);
  cmd_sae->add_option("--latents", sae_h, "Latent width")->check(CLI::PositiveNumber);
  cmd_sae->add_option("--K", sae_K, "Active latents per sample")->check(CLI::PositiveNumber);
  cmd_sae->add_option("--epochs", sae_epochs)->check(CLI::PositiveNumber);
  cmd_sae->add_option("--lr", sae_lr);
  cmd_sae->add_option("--batch", sae_batch);

  // ncl
  auto* cmd_ncl = app.add_subcommand("ncl", "Contrastive pretraining on synthetic data");
  int ncl_n = 8, ncl_samples = 2000, ncl_epochs = 60, ncl_batch = 128;
  double ncl_sparsity = 0.7, ncl_lr = 5e-3, ncl_aug_std = 0.05, ncl_mask = 0.2,
         ncl_q = 0.05;
  bool ncl_nonneg = false;
  std::vector<int> ncl_dims;
  cmd_ncl->add_option("--n", ncl_n)->check(CLI::PositiveNumber);
  cmd_ncl->add_option("--samples", ncl_samples)->check(CLI::PositiveNumber);
  cmd_ncl->add_option("--sparsity", ncl_sparsity);
  cmd_ncl->add_option("--dims", ncl_dims, "Encoder widths, empty = n,32,16")->delimiter(',');
  cmd_ncl->add_flag("--nonneg", ncl_nonneg, "ReLU embeddings inside the loss");
  cmd_ncl->add_option("--aug-std", ncl_aug_std);
  cmd_ncl->add_option("--mask-prob", ncl_mask);
  cmd_ncl->add_option("--epochs", ncl_epochs)->check(CLI::PositiveNumber);
  cmd_ncl->add_option("--lr", ncl_lr);
  cmd_ncl->add_option("--batch", ncl_batch);
  cmd_ncl->add_option("--q", ncl_q, "Consistency quantile");

  // monolora
  auto* cmd_lora = app.add_subcommand("monolora", "Low-rank adapter finetuning");
  int lo_n = 8, lo_samples = 2000, lo_base_epochs = 200, lo_epochs = 100, lo_rank = 4,
      lo_batch = 64;
  double lo_sparsity = 0.7, lo_lr = 1e-2, lo_alpha = 4.0, lo_dropout = 0.0,
         lo_val_fraction = 0.25, lo_label_eta = 0.0;
  std::string lo_variant = "mono";
  std::vector<int> lo_dims;
  cmd_lora->add_option("--n", lo_n)->check(CLI::PositiveNumber);
  cmd_lora->add_option("--samples", lo_samples)->check(CLI::PositiveNumber);
  cmd_lora->add_option("--sparsity", lo_sparsity);
  cmd_lora->add_option("--dims", lo_dims, "Base classifier widths, empty = n,32,32,n")->delimiter(',');
  cmd_lora->add_option("--base-epochs", lo_base_epochs)->check(CLI::PositiveNumber);
  cmd_lora->add_option("--rank", lo_rank)->check(CLI::PositiveNumber);
  cmd_lora->add_option("--variant", lo_variant)->check(CLI::IsMember({"standard", "mono"}));
  cmd_lora->add_option("--epochs", lo_epochs)->check(CLI::PositiveNumber);
  cmd_lora->add_option("--lr", lo_lr);
  cmd_lora->add_option("--alpha", lo_alpha);
  cmd_lora->add_option("--dropout", lo_dropout);
  cmd_lora->add_option("--batch", lo_batch);
  cmd_lora->add_option("--val-fraction", lo_val_fraction);
  cmd_lora->add_option("--label-eta", lo_label_eta, "Training-label corruption rate");

  // sweep
  auto* cmd_sweep = app.add_subcommand("sweep", "Grid of cells merged into one CSV");
  std::string sw_experiment = "theory-j";
  std::vector<std::string> sw_methods{"mono", "poly"};
  std::vector<double> sw_S{0.2}, sw_eta{0.0}, sw_lambda{0.0}, sw_fractions{1.0};
  ProbeCellParams sw_probe;
  cmd_sweep->add_option("--experiment", sw_experiment)
      ->check(CLI::IsMember({"theory-j", "probe"}));
  cmd_sweep->add_option("--methods", sw_methods)->delimiter(',');
  cmd_sweep->add_option("--S", sw_S)->delimiter(',');
  cmd_sweep->add_option("--eta", sw_eta)->delimiter(',');
  cmd_sweep->add_option("--lambda", sw_lambda)->delimiter(',');
  cmd_sweep->add_option("--fractions", sw_fractions)->delimiter(',');
  cmd_sweep->add_option("--samples", sw_probe.num_samples)->check(CLI::PositiveNumber);
  cmd_sweep->add_option("--n", sw_probe.n)->check(CLI::PositiveNumber);
  cmd_sweep->add_option("--probe-epochs", sw_probe.probe_epochs)->check(CLI::PositiveNumber);

  // figure
  auto* cmd_figure = app.add_subcommand("figure", "One-command desk-scale figure replicas");
  std::string fig_name;
  Fig4Config fig_cfg;
  cmd_figure->add_option("figure-name", fig_name, "Which figure to build")
      ->required()
      ->check(CLI::IsMember({"toy-fig4"}));
  cmd_figure->add_option("--samples", fig_cfg.num_samples)->check(CLI::PositiveNumber);
  cmd_figure->add_option("--epochs", fig_cfg.probe.train.epochs)->check(CLI::PositiveNumber);

  // Global options (--out, --seeds, --jobs, --name) stay valid after the
  // subcommand name.
  for (CLI::App* sc : app.get_subcommands([](CLI::App*) { return true; }))
    sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    json err;
    err["error"] = {{"kind", "usage"}, {"message", e.what()}, {"code", 2}};
    std::cerr << err.dump() << "\n";
    return 2;
  }

  CLI::App* active = app.get_subcommands().front();
  const std::string sub = active->get_name();
  if (run_name.empty()) run_name = sub;

  try {
    if (seeds.empty()) throw std::invalid_argument("seed list is empty");

    RunDir run;
    run.dir = fs::path(out_root) / run_name;
    fs::create_directories(run.dir);

    if (active == cmd_theory) {
      const std::string csv = theory_csv(th_S, th_eta, th_lambda);
      run.text("theory.csv", csv);
      std::cout << csv;
    } else if (active == cmd_mc) {
      mc_oracle::McConfig cfg;
      cfg.num_samples = mc_samples;
      cfg.seed = seeds[0];
      cfg.S = mc_S;
      cfg.eta = mc_eta;
      cfg.lambda = mc_lambda;
      cfg.num_threads = mc_threads;
      const mc_oracle::MomentsEstimate est =
          mc_oracle::estimate_moments(parse_kind(mc_kind), cfg);
      const mc_oracle::McEstimate prior = mc_oracle::empirical_class0_prior(cfg);

      std::string csv = "# monolab mc csv v1\nquantity,kind,S,eta,lambda,value,std_error\n";
      const std::string prefix = "," + mc_kind + "," + io::format_double(mc_S) + "," +
                                 io::format_double(mc_eta) + "," +
                                 io::format_double(mc_lambda) + ",";
      csv += "mu0" + prefix + io::format_double(est.m.mu0) + "," +
             io::format_double(est.se.mu0) + "\n";
      csv += "mu1" + prefix + io::format_double(est.m.mu1) + "," +
             io::format_double(est.se.mu1) + "\n";
      csv += "var0" + prefix + io::format_double(est.m.var0) + "," +
             io::format_double(est.se.var0) + "\n";
      csv += "var1" + prefix + io::format_double(est.m.var1) + "," +
             io::format_double(est.se.var1) + "\n";
      csv += "class0_prior,pair," + io::format_double(mc_S) + ",0,0," +
             io::format_double(prior.value) + "," + io::format_double(prior.std_error) +
             "\n";
      run.text("mc.csv", csv);
      std::cout << csv;
    } else if (active == cmd_toy) {
      DataSpec spec{toy_samples, toy_n, toy_S, seeds[0]};
      const Dataset data = generate(spec);
      TrainConfig cfg;
      cfg.learning_rate = toy_lr;
      cfg.epochs = toy_epochs;
      cfg.seed = seeds[0];
      std::vector<double> history;
      const ToyModel model = train_reconstruction(data, toy_m, cfg, toy_relu, &history);
      const Eigen::MatrixXd g = gram(model);

      run.tensor("w.tensor", model.W);
      run.matrix_csv("gram.csv", g);
      run.text("gram.svg", svg::heatmap(g, "learned embedding gram"));
      run.text("loss.csv", loss_csv(history));
      json summary;
      summary["final_loss"] = history.empty() ? 0.0 : history.back();
      summary["represented_count"] = represented_features(g).size();
      summary["antipodal_pair_count"] = antipodal_pairs(g).size();
      summary["checksum"] = hex64(toy_checksum(model));
      run.text("summary.json", summary.dump(2) + "\n");
    } else if (active == cmd_probe) {
      if (pr_m == 0) pr_m = pr_construction == "poly" ? pr_n / 2 : pr_n;
      const FeatureConstruction construction =
          pr_construction == "poly" ? poly_construction(pr_m) : mono_construction(pr_m);

      std::string csv = "# monolab probe csv v1\nseed,eta,lambda,fraction,train_acc,val_acc\n";
      for (uint64_t seed : seeds) {
        const DataSpec spec{pr_samples, pr_n, pr_sparsity, seed};
        const Dataset data = generate(spec);
        const Split split = train_val_split(pr_samples, pr_val_fraction, seed);
        std::vector<int> y_train = select_labels(data.y, split.train);
        Eigen::MatrixXd X_val = select_rows(data.X, split.val);
        double eta = 0.0, lambda = 0.0;
        if (pr_noise == "label") {
          eta = pr_rate;
          y_train = flip_labels(y_train, pr_n, eta, 2 * seed);
        } else if (pr_noise == "gaussian") {
          lambda = pr_rate;
          X_val = perturb_inputs(
              X_val, NoiseSpec{NoiseSpec::Kind::input_gaussian, lambda, 2 * seed + 1});
        }

        ProbeConfig cfg;
        cfg.loss = pr_loss == "nce"   ? ProbeConfig::Loss::nce
                   : pr_loss == "sce" ? ProbeConfig::Loss::sce
                                      : ProbeConfig::Loss::ce;
        cfg.subsample_fraction = pr_fraction;
        cfg.train.learning_rate = pr_lr;
        cfg.train.epochs = pr_epochs;
        cfg.train.batch_size = pr_batch;
        cfg.train.seed = seed;

        const Eigen::MatrixXd F_train =
            extract_features(select_rows(data.X, split.train), construction);
        const ProbeModel probe = train_probe(F_train, y_train, pr_n, cfg);
        csv += std::to_string(seed) + "," + io::format_double(eta) + "," +
               io::format_double(lambda) + "," + io::format_double(pr_fraction) + "," +
               io::format_double(evaluate_probe(probe, F_train, y_train)) + "," +
               io::format_double(evaluate_probe(probe, extract_features(X_val, construction),
                                                select_labels(data.y, split.val))) +
               "\n";
      }
      run.text("probe.csv", csv);
      std::cout << csv;
    } else if (active == cmd_sae) {
      const DataSpec spec{sae_samples, sae_n, sae_sparsity, seeds[0]};
      const Dataset data = generate(spec);
      const Eigen::MatrixXd F = extract_features(data.X, poly_construction(sae_m));
      TrainConfig cfg;
      cfg.learning_rate = sae_lr;
      cfg.epochs = sae_epochs;
      cfg.batch_size = sae_batch;
      cfg.seed = seeds[0];
      SaeTrainReport report;
      const SaeParams params = train_sae(F, sae_h, sae_K, cfg, &report);

      run.tensor("w_enc.tensor", params.W_enc);
      run.tensor("w_dec.tensor", params.W_dec);
      run.tensor("b_pre.tensor", params.b_pre);
      run.tensor("b_enc.tensor", params.b_enc);
      run.text("loss.csv", loss_csv(report.loss_history));
      json summary;
      summary["final_mse"] =
          report.loss_history.empty() ? 0.0 : report.loss_history.back();
      summary["dead_latent_fraction"] = report.dead_latent_fraction;
      summary["h"] = sae_h;
      summary["K"] = sae_K;
      run.text("summary.json", summary.dump(2) + "\n");
    } else if (active == cmd_ncl) {
      if (ncl_dims.empty()) ncl_dims = {ncl_n, 32, 16};
      const DataSpec spec{ncl_samples, ncl_n, ncl_sparsity, seeds[0]};
      const Dataset data = generate(spec);
      PretrainConfig cfg;
      cfg.encoder.dims = ncl_dims;
      cfg.encoder.seed = seeds[0];
      cfg.nonneg = ncl_nonneg;
      cfg.augment = AugmentSpec{ncl_aug_std, ncl_mask, 0};
      cfg.train.learning_rate = ncl_lr;
      cfg.train.epochs = ncl_epochs;
      cfg.train.batch_size = ncl_batch;
      cfg.train.seed = seeds[0];
      std::vector<double> history;
      const Mlp encoder = pretrain(data, cfg, &history);

      for (size_t l = 0; l < encoder.layers().size(); ++l) {
        run.tensor("encoder_l" + std::to_string(l) + "_W.tensor", encoder.layers()[l].W);
        run.tensor("encoder_l" + std::to_string(l) + "_b.tensor", encoder.layers()[l].b);
      }
      run.text("loss.csv", loss_csv(history));
      const Eigen::MatrixXd Z = encoder.forward(data.X);
      const ConsistencyReport consistency =
          semantic_consistency_quantile(Z, data.y, ncl_n, ncl_q);
      json summary;
      summary["mean_consistency"] = consistency.mean_score;
      summary["activation_sparsity"] = activation_sparsity(Z);
      summary["checksum"] = hex64(encoder.checksum());
      run.text("summary.json", summary.dump(2) + "\n");
    } else if (active == cmd_lora) {
      if (lo_dims.empty()) lo_dims = {lo_n, 32, 32, lo_n};
      const DataSpec spec{lo_samples, lo_n, lo_sparsity, seeds[0]};
      const Dataset data = generate(spec);
      const Split split = train_val_split(lo_samples, lo_val_fraction, seeds[0]);
      const Eigen::MatrixXd X_train = select_rows(data.X, split.train);
      const Eigen::MatrixXd X_val = select_rows(data.X, split.val);
      std::vector<int> y_train = select_labels(data.y, split.train);
      const std::vector<int> y_val = select_labels(data.y, split.val);
      if (lo_label_eta > 0.0)
        y_train = flip_labels(y_train, lo_n, lo_label_eta, 2 * seeds[0]);

      MlpConfig arch;
      arch.dims = lo_dims;
      arch.seed = seeds[0];
      TrainConfig base_cfg;
      base_cfg.epochs = lo_base_epochs;
      base_cfg.batch_size = lo_batch;
      base_cfg.seed = seeds[0];
      const Mlp base = train_toy_classifier(X_train, y_train, arch, base_cfg);

      AdaptedModel model = attach_adapters(
          base, lo_rank,
          lo_variant == "mono" ? AdapterPair::Variant::mono
                               : AdapterPair::Variant::standard,
          {}, seeds[0]);
      FinetuneConfig ft;
      ft.alpha = lo_alpha;
      ft.dropout = lo_dropout;
      ft.train.learning_rate = lo_lr;
      ft.train.epochs = lo_epochs;
      ft.train.batch_size = lo_batch;
      ft.train.seed = seeds[0];
      const FinetuneReport report = finetune_toy(model, X_train, y_train, X_val, y_val, ft);

      std::string csv = "# monolab monolora csv v1\nepoch,train_acc,val_acc,sparsity\n";
      for (size_t e = 0; e < report.epochs.size(); ++e)
        csv += std::to_string(e) + "," + io::format_double(report.epochs[e].train_acc) +
               "," + io::format_double(report.epochs[e].val_acc) + "," +
               io::format_double(report.epochs[e].sparsity) + "\n";
      run.text("finetune.csv", csv);
      json summary;
      if (!report.epochs.empty()) {
        summary["final_train_acc"] = report.epochs.back().train_acc;
        summary["final_val_acc"] = report.epochs.back().val_acc;
        summary["final_sparsity"] = report.epochs.back().sparsity;
      }
      summary["rank"] = lo_rank;
      summary["variant"] = lo_variant;
      run.text("summary.json", summary.dump(2) + "\n");
    } else if (active == cmd_sweep) {
      SweepGrid grid;
      grid.experiment = sw_experiment;
      grid.methods = sw_methods;
      grid.S_values = sw_S;
      grid.eta_values = sw_eta;
      grid.lambda_values = sw_lambda;
      grid.fractions = sw_fractions;
      grid.seeds = seeds;
      const std::vector<CellSpec> cells = expand_grid(grid);

      CellFn fn;
      if (sw_experiment == "theory-j")
        fn = theory_j_cell;
      else
        fn = [&sw_probe](const CellSpec& cell) { return probe_cell(cell, sw_probe); };
      const SweepResult result = run_sweep(cells, fn, jobs);
      run.text("sweep.csv", result.csv);
      json summary;
      summary["cells"] = cells.size();
      summary["failed_cells"] = result.failed_cells;
      summary["jobs"] = jobs;
      run.text("summary.json", summary.dump(2) + "\n");
    } else if (active == cmd_figure) {
      // The three-seed default matches the smallest multi-seed replica that
      // shows the orderings; a single --seeds flag overrides it.
      std::vector<uint64_t> fig_seeds = seeds;
      if (app.get_option("--seeds")->count() == 0) fig_seeds = {1, 2, 3};
      run_toy_robustness_figure(run, fig_cfg, fig_seeds);
      write_manifest(run, sub, app.config_to_str(true, false), fig_seeds);
      std::cout << "wrote " << run.dir.string() << " (" << run.artifacts.size()
                << " artifacts)\n";
      return 0;
    }

    write_manifest(run, sub, app.config_to_str(true, false), seeds);
    std::cout << "wrote " << run.dir.string() << " (" << run.artifacts.size()
              << " artifacts)\n";
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"kind", "runtime"}, {"message", e.what()}, {"code", 1},
                    {"subcommand", sub}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
