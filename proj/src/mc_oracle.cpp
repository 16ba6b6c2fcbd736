#include "monolab/mc_oracle.hpp"

#include "monolab/rng.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace monolab::mc_oracle {

namespace {

constexpr long long kBlockSize = 1 << 20;

struct Acc {
  long long n = 0;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;

  void add(double v) {
    ++n;
    double p = v;
    s1 += p;
    p *= v;
    s2 += p;
    p *= v;
    s3 += p;
    p *= v;
    s4 += p;
  }

  void merge(const Acc& o) {
    n += o.n;
    s1 += o.s1;
    s2 += o.s2;
    s3 += o.s3;
    s4 += o.s4;
  }
};

void validate(const McConfig& cfg) {
  if (cfg.num_samples < 1000) throw std::invalid_argument("num_samples must be >= 1000");
  if (cfg.S < 0.0 || cfg.S >= 1.0) throw std::invalid_argument("S must lie in [0,1)");
  if (cfg.eta < 0.0 || cfg.eta >= 1.0) throw std::invalid_argument("eta must lie in [0,1)");
  if (cfg.lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
}

// Runs `count` samples of the given block's substream into per-class accumulators.
void run_block(FeatureKind kind, const McConfig& cfg, uint64_t block, long long count,
               Acc out[2]) {
  RandomStream rs("mc_oracle.moments", cfg.seed, block);
  const bool mono = kind == FeatureKind::mono;
  for (long long i = 0; i < count; ++i) {
    double x1 = rs.next_double() < cfg.S ? 0.0 : rs.next_open_closed();
    double x2 = rs.next_double() < cfg.S ? 0.0 : rs.next_open_closed();
    int y = x1 > x2 ? 1 : 0;
    if (cfg.eta > 0.0 && rs.next_double() < cfg.eta) y = 1 - y;
    if (cfg.lambda > 0.0) {
      x1 += cfg.lambda * rs.next_normal();
      x2 += cfg.lambda * rs.next_normal();
    }
    out[y].add(mono ? x1 : x1 - x2);
  }
}

// Dispatches blocks to worker threads; the reduction below runs in fixed block
// order so the result is bit-identical at any thread count.
template <typename BlockFn>
void parallel_blocks(long long num_samples, int num_threads, const BlockFn& fn) {
  const long long num_blocks = (num_samples + kBlockSize - 1) / kBlockSize;
  int threads = num_threads > 0 ? num_threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (threads > num_blocks) threads = static_cast<int>(num_blocks);
  std::atomic<long long> next{0};
  auto worker = [&] {
    for (;;) {
      const long long b = next.fetch_add(1);
      if (b >= num_blocks) return;
      const long long count =
          b + 1 < num_blocks ? kBlockSize : num_samples - b * kBlockSize;
      fn(static_cast<uint64_t>(b), count);
    }
  };
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

struct MeanVar {
  double mean, var, se_mean, se_var;
};

MeanVar finish(const Acc& a) {
  const double n = static_cast<double>(a.n);
  const double mean = a.s1 / n;
  const double m2 = a.s2 / n - mean * mean;
  // Fourth central moment from raw power sums, for the delta-method SE of the
  // variance estimate.
  const double m4 = a.s4 / n - 4.0 * mean * (a.s3 / n) + 6.0 * mean * mean * (a.s2 / n) -
                    3.0 * mean * mean * mean * mean;
  MeanVar out;
  out.mean = mean;
  out.var = m2;
  out.se_mean = std::sqrt(m2 / n);
  out.se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  return out;
}

}  // namespace

MomentsEstimate estimate_moments(FeatureKind kind, const McConfig& cfg) {
  validate(cfg);
  const long long num_blocks = (cfg.num_samples + kBlockSize - 1) / kBlockSize;
  std::vector<std::array<Acc, 2>> partial(static_cast<size_t>(num_blocks));
  parallel_blocks(cfg.num_samples, cfg.num_threads, [&](uint64_t b, long long count) {
    run_block(kind, cfg, b, count, partial[b].data());
  });
  Acc total[2];
  for (const auto& p : partial) {
    total[0].merge(p[0]);
    total[1].merge(p[1]);
  }
  for (int c = 0; c < 2; ++c) {
    if (total[c].n < 30)
      throw std::runtime_error("conditional class " + std::to_string(c) +
                               " received fewer than 30 samples");
  }
  const MeanVar c0 = finish(total[0]);
  const MeanVar c1 = finish(total[1]);
  MomentsEstimate est;
  est.m = {c0.mean, c1.mean, c0.var, c1.var};
  est.se = {c0.se_mean, c1.se_mean, c0.se_var, c1.se_var};
  est.count0 = total[0].n;
  est.count1 = total[1].n;
  return est;
}

namespace {

McEstimate empirical_event_probability(const McConfig& cfg, bool cdf, double x) {
  validate(cfg);
  const long long num_blocks = (cfg.num_samples + kBlockSize - 1) / kBlockSize;
  std::vector<long long> hits(static_cast<size_t>(num_blocks), 0);
  parallel_blocks(cfg.num_samples, cfg.num_threads, [&](uint64_t b, long long count) {
    RandomStream rs("mc_oracle.pair_event", cfg.seed, b);
    long long h = 0;
    for (long long i = 0; i < count; ++i) {
      const double x1 = rs.next_double() < cfg.S ? 0.0 : rs.next_open_closed();
      const double x2 = rs.next_double() < cfg.S ? 0.0 : rs.next_open_closed();
      if (cdf ? (x1 - x2 <= x) : !(x1 > x2)) ++h;
    }
    hits[b] = h;
  });
  long long total = 0;
  for (long long h : hits) total += h;
  const double n = static_cast<double>(cfg.num_samples);
  const double p = static_cast<double>(total) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

}  // namespace

McEstimate empirical_pair_cdf(double x, const McConfig& cfg) {
  if (x < -1.0 || x > 1.0) throw std::invalid_argument("cdf argument must lie in [-1,1]");
  return empirical_event_probability(cfg, true, x);
}

McEstimate empirical_class0_prior(const McConfig& cfg) {
  return empirical_event_probability(cfg, false, 0.0);
}

McEstimate estimate_crossing(NoiseKind kind, double S, const CrossingGrid& grid,
                             const McConfig& cfg) {
  if (grid.grid_step <= 0.0 || grid.grid_max <= grid.grid_min)
    throw std::invalid_argument("invalid crossing grid");
  auto j_of = [](const MomentsEstimate& e) {
    return std::abs(e.m.mu1 - e.m.mu0) / std::sqrt(e.m.var0 * e.m.var1);
  };
  double prev_diff = 0.0;
  bool have_prev = false;
  double prev_t = 0.0;
  const int steps = static_cast<int>((grid.grid_max - grid.grid_min) / grid.grid_step + 1e-9);
  for (int k = 0; k <= steps; ++k) {
    const double t = grid.grid_min + k * grid.grid_step;
    McConfig point = cfg;
    point.S = S;
    point.eta = kind == NoiseKind::label ? t : 0.0;
    point.lambda = kind == NoiseKind::gaussian ? t : 0.0;
    const double diff = j_of(estimate_moments(FeatureKind::mono, point)) -
                        j_of(estimate_moments(FeatureKind::poly, point));
    if (have_prev && prev_diff < 0.0 && diff >= 0.0)
      return {0.5 * (prev_t + t), 0.5 * grid.grid_step};
    prev_diff = diff;
    prev_t = t;
    have_prev = true;
  }
  throw std::domain_error("no crossing observed on the grid");
}

}  // namespace monolab::mc_oracle
