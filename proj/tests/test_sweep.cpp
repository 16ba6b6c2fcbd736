#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "monolab/sweep.hpp"

using namespace monolab;

TEST_CASE("expand_grid nests method, S, eta, lambda, fraction, seed") {
  SweepGrid grid;
  grid.experiment = "order";
  grid.methods = {"a", "b"};
  grid.S_values = {0.1, 0.2};
  grid.eta_values = {0.0};
  grid.lambda_values = {0.0, 1.0};
  grid.fractions = {1.0};
  grid.seeds = {3, 4};
  const std::vector<CellSpec> cells = expand_grid(grid);
  REQUIRE(cells.size() == 16);

  // seed varies fastest
  CHECK(cells[0].seed == 3);
  CHECK(cells[1].seed == 4);
  CHECK(cells[0].lambda == 0.0);
  CHECK(cells[1].lambda == 0.0);
  // then lambda
  CHECK(cells[2].lambda == 1.0);
  CHECK(cells[2].seed == 3);
  // then S
  CHECK(cells[4].S == 0.2);
  CHECK(cells[4].lambda == 0.0);
  // method varies slowest
  for (size_t i = 0; i < 8; ++i) CHECK(cells[i].method == "a");
  for (size_t i = 8; i < 16; ++i) CHECK(cells[i].method == "b");
  CHECK(cells[15].S == 0.2);
  CHECK(cells[15].lambda == 1.0);
  CHECK(cells[15].seed == 4);
  for (const CellSpec& c : cells) {
    CHECK(c.experiment == "order");
    CHECK(c.eta == 0.0);
    CHECK(c.fraction == 1.0);
  }
}

TEST_CASE("expand_grid rejects an empty axis") {
  SweepGrid grid;
  grid.seeds = {};
  CHECK_THROWS_AS(expand_grid(grid), std::invalid_argument);
}

TEST_CASE("single cell csv bytes") {
  SweepGrid grid;
  grid.experiment = "unit";
  grid.methods = {"mono"};
  grid.S_values = {0.25};
  grid.eta_values = {0.5};
  grid.lambda_values = {0.0};
  grid.fractions = {1.0};
  grid.seeds = {7};
  const auto cells = expand_grid(grid);
  REQUIRE(cells.size() == 1);
  const SweepResult res = run_sweep(
      cells, [](const CellSpec&) -> std::vector<MetricValue> {
        return {{"acc", 0.75}, {"loss", 1.5}};
      },
      1);
  CHECK(res.failed_cells == 0);
  CHECK(res.csv ==
        "# monolab sweep csv v1\n"
        "experiment,method,S,eta,lambda,fraction,seed,metric,value,status\n"
        "unit,mono,0.25,0.5,0,1,7,acc,0.75,ok\n"
        "unit,mono,0.25,0.5,0,1,7,loss,1.5,ok\n");
}

TEST_CASE("failed cells become error rows and the sweep continues") {
  SweepGrid grid;
  grid.experiment = "f";
  grid.seeds = {1, 2, 3};
  const auto cells = expand_grid(grid);
  const SweepResult res = run_sweep(
      cells,
      [](const CellSpec& cell) -> std::vector<MetricValue> {
        if (cell.seed == 2) throw std::runtime_error("boom");
        return {{"m", static_cast<double>(cell.seed)}};
      },
      2);
  CHECK(res.failed_cells == 1);
  CHECK(res.csv ==
        "# monolab sweep csv v1\n"
        "experiment,method,S,eta,lambda,fraction,seed,metric,value,status\n"
        "f,default,0.2,0,0,1,1,m,1,ok\n"
        "f,default,0.2,0,0,1,2,error,,failed\n"
        "f,default,0.2,0,0,1,3,m,3,ok\n");
}

TEST_CASE("csv bytes are identical at any parallelism degree") {
  SweepGrid grid;
  grid.experiment = "par";
  grid.methods = {"x", "y"};
  grid.seeds = {0, 1, 2, 3, 4, 5};
  const auto cells = expand_grid(grid);
  REQUIRE(cells.size() == 12);
  // later cells finish first when run concurrently
  auto fn = [&cells](const CellSpec& cell) -> std::vector<MetricValue> {
    size_t index = 0;
    for (size_t i = 0; i < cells.size(); ++i)
      if (cells[i].method == cell.method && cells[i].seed == cell.seed) index = i;
    std::this_thread::sleep_for(
        std::chrono::milliseconds(3 * (cells.size() - index)));
    return {{"v", static_cast<double>(cell.seed) * 1.5 + cell.S}};
  };
  const std::string csv1 = run_sweep(cells, fn, 1).csv;
  const std::string csv4 = run_sweep(cells, fn, 4).csv;
  const std::string csv7 = run_sweep(cells, fn, 7).csv;
  CHECK(csv1 == csv4);
  CHECK(csv1 == csv7);
  // two header lines plus one row per cell
  CHECK(std::count(csv1.begin(), csv1.end(), '\n') == 14);
}

TEST_CASE("empty cell list yields a header-only csv") {
  const SweepResult res = run_sweep(
      {}, [](const CellSpec&) -> std::vector<MetricValue> { return {}; }, 4);
  CHECK(res.failed_cells == 0);
  CHECK(res.csv ==
        "# monolab sweep csv v1\n"
        "experiment,method,S,eta,lambda,fraction,seed,metric,value,status\n");
}

TEST_CASE("run_sweep validates its arguments") {
  SweepGrid grid;
  const auto cells = expand_grid(grid);
  CHECK_THROWS_AS(run_sweep(cells, CellFn{}, 1), std::invalid_argument);
  CHECK_THROWS_AS(run_sweep(
                      cells,
                      [](const CellSpec&) -> std::vector<MetricValue> { return {}; },
                      0),
                  std::invalid_argument);
}
