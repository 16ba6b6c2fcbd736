#pragma once
// Grid sweeps over experiment cells executed by a small worker pool. Results
// merge in grid order regardless of which worker finished first, so the CSV is
// byte-identical at any parallelism degree.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace monolab {

struct CellSpec {
  std::string experiment;
  std::string method;
  double S = 0.2;
  double eta = 0.0;
  double lambda = 0.0;
  double fraction = 1.0;
  uint64_t seed = 0;
};

struct MetricValue {
  std::string name;
  double value = 0.0;
};

// One cell's computation. Throwing marks that row failed; the sweep continues.
using CellFn = std::function<std::vector<MetricValue>(const CellSpec&)>;

struct SweepGrid {
  std::string experiment;
  std::vector<std::string> methods{"default"};
  std::vector<double> S_values{0.2};
  std::vector<double> eta_values{0.0};
  std::vector<double> lambda_values{0.0};
  std::vector<double> fractions{1.0};
  std::vector<uint64_t> seeds{0};
};

// Cartesian product in fixed nesting order: method, S, eta, lambda, fraction,
// seed (innermost).
std::vector<CellSpec> expand_grid(const SweepGrid& grid);

struct SweepResult {
  std::string csv;  // schema comment + header + one row per metric
  int failed_cells = 0;
};

// Runs the cells on min(jobs, cells) threads. Failed cells produce a single
// row with metric "error", an empty value and status "failed"; everything else
// gets status "ok".
SweepResult run_sweep(const std::vector<CellSpec>& cells, const CellFn& fn, int jobs);

}  // namespace monolab
