#include "monolab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

#include "monolab/io.hpp"

namespace monolab {

std::vector<CellSpec> expand_grid(const SweepGrid& grid) {
  if (grid.methods.empty() || grid.S_values.empty() || grid.eta_values.empty() ||
      grid.lambda_values.empty() || grid.fractions.empty() || grid.seeds.empty())
    throw std::invalid_argument("sweep: empty grid axis");
  std::vector<CellSpec> cells;
  for (const std::string& method : grid.methods)
    for (double S : grid.S_values)
      for (double eta : grid.eta_values)
        for (double lambda : grid.lambda_values)
          for (double fraction : grid.fractions)
            for (uint64_t seed : grid.seeds) {
              CellSpec cell;
              cell.experiment = grid.experiment;
              cell.method = method;
              cell.S = S;
              cell.eta = eta;
              cell.lambda = lambda;
              cell.fraction = fraction;
              cell.seed = seed;
              cells.push_back(std::move(cell));
            }
  return cells;
}

SweepResult run_sweep(const std::vector<CellSpec>& cells, const CellFn& fn, int jobs) {
  if (!fn) throw std::invalid_argument("sweep: no cell function");
  if (jobs < 1) throw std::invalid_argument("sweep: jobs must be >= 1");

  std::vector<std::vector<MetricValue>> results(cells.size());
  std::vector<char> failed(cells.size(), 0);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        results[i] = fn(cells[i]);
      } catch (...) {
        failed[i] = 1;
      }
    }
  };

  const size_t num_threads =
      std::min(static_cast<size_t>(jobs), std::max<size_t>(cells.size(), 1));
  if (num_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(num_threads);
    for (size_t t = 0; t < num_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  // Single-threaded merge in cell order keeps the bytes independent of
  // scheduling.
  SweepResult out;
  out.csv = "# monolab sweep csv v1\n";
  out.csv += "experiment,method,S,eta,lambda,fraction,seed,metric,value,status\n";
  for (size_t i = 0; i < cells.size(); ++i) {
    const CellSpec& cell = cells[i];
    const std::string prefix = cell.experiment + "," + cell.method + "," +
                               io::format_double(cell.S) + "," +
                               io::format_double(cell.eta) + "," +
                               io::format_double(cell.lambda) + "," +
                               io::format_double(cell.fraction) + "," +
                               std::to_string(cell.seed) + ",";
    if (failed[i]) {
      ++out.failed_cells;
      out.csv += prefix + "error,,failed\n";
      continue;
    }
    for (const MetricValue& metric : results[i])
      out.csv += prefix + metric.name + "," + io::format_double(metric.value) + ",ok\n";
  }
  return out;
}

}  // namespace monolab
