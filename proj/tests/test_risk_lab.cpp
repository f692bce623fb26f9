#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "ssp/matrix_game.hpp"
#include "ssp/risk_lab.hpp"

using namespace ssp;

namespace {

SolverConfig oracle_cfg() {
  SolverConfig cfg;
  cfg.inner_tolerance = 1e-9;
  return cfg;
}

std::vector<RiskRecord> records_from(const std::vector<double>& risks, std::size_t n) {
  std::vector<RiskRecord> out;
  for (std::size_t i = 0; i < risks.size(); ++i) {
    RiskRecord r;
    r.n = n;
    r.rep = i;
    r.strong_excess_risk = risks[i];
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("strong excess risk") {
  const MatrixGameInstance game(make_matrix_game(2, 2.0, 2.0, 2.0, 3, 11));
  SolverConfig solve_cfg;
  solve_cfg.gap_tolerance = 1e-11;
  const SolveReport rep = solve_saddle(population_objective(game), solve_cfg);
  REQUIRE(rep.converged);

  SUBCASE("zero at the population saddle") {
    CHECK(std::abs(strong_excess_risk(game, rep.solution, oracle_cfg())) <= 1e-8);
  }
  SUBCASE("nonnegative for arbitrary feasible pairs") {
    CounterRng rng(3);
    for (int t = 0; t < 50; ++t) {
      const SaddlePair pair{random_feasible(game.x_geometry(), rng),
                            random_feasible(game.y_geometry(), rng)};
      CHECK(strong_excess_risk(game, pair, oracle_cfg()) >= -1e-8);
    }
  }
  SUBCASE("matches grid-search best responses") {
    const SaddlePair pair{{0.5, 0.5}, {0.7, 0.3}};
    const double risk = strong_excess_risk(game, pair, oracle_cfg());
    const SaddleObjective pop = population_objective(game);
    const double floor = game.x_geometry().floor_value();
    const BlockVector bry = oracles::grid_maximize_simplex2(
        [&](const BlockVector& y) { return pop.loss(pair.x, y); }, floor, 1e-4);
    const BlockVector brx = oracles::grid_minimize_simplex2(
        [&](const BlockVector& x) { return pop.loss(x, pair.y); }, floor, 1e-4);
    const double grid_risk = pop.loss(pair.x, bry) - pop.loss(brx, pair.y);
    CHECK(std::abs(risk - grid_risk) <= 5e-4);
  }
  SUBCASE("infeasible pair rejected") {
    CHECK_THROWS_AS(strong_excess_risk(game, {{0.8, 0.4}, {0.5, 0.5}}, oracle_cfg()),
                    std::invalid_argument);
  }
}

TEST_CASE("run_replication") {
  SolverConfig emp_cfg;
  emp_cfg.gap_tolerance = 1e-8;

  SUBCASE("single-atom instance: empirical equals population") {
    MatrixGameSpec spec;
    spec.dim = 2;
    spec.lambda_x = spec.lambda_y = 2.0;
    spec.truncation_L = 2.0;
    spec.matrices = {{0.4, -0.3, 0.2, 0.5}};
    spec.probs = {1.0};
    const MatrixGameInstance game(spec);
    const RiskRecord rec = run_replication(game, 8, 77, emp_cfg, oracle_cfg());
    CHECK(rec.strong_excess_risk <= 2.0 * emp_cfg.gap_tolerance);
    CHECK(rec.strong_excess_risk >= -1e-8);
    CHECK(rec.solver_converged);
  }
  SUBCASE("deterministic records") {
    const MatrixGameInstance game(make_matrix_game(3, 2.0, 2.0, 2.0, 3, 42));
    const RiskRecord a = run_replication(game, 32, 99, emp_cfg, oracle_cfg());
    const RiskRecord b = run_replication(game, 32, 99, emp_cfg, oracle_cfg());
    CHECK(a.strong_excess_risk == b.strong_excess_risk);
    CHECK(a.empirical_gap == b.empirical_gap);
    CHECK(a.oracle_gap == b.oracle_gap);
    CHECK(a.work_units == b.work_units);
  }
  SUBCASE("risk shrinks with n on paired seed streams") {
    const MatrixGameInstance game(make_matrix_game(3, 2.0, 2.0, 2.0, 3, 42));
    int wins = 0;
    double risk512_seed7 = -1.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const RiskRecord small =
          run_replication(game, 32, derive_seed(1000, 32, s), emp_cfg, oracle_cfg());
      const RiskRecord big =
          run_replication(game, 512, derive_seed(1000, 512, s), emp_cfg, oracle_cfg());
      if (big.strong_excess_risk < small.strong_excess_risk) ++wins;
      if (s == 7) risk512_seed7 = big.strong_excess_risk;
    }
    CHECK(wins >= 45);
    CHECK(risk512_seed7 > 0.0);
  }
}

TEST_CASE("quantile curve") {
  SUBCASE("constant risks") {
    const auto recs = records_from(std::vector<double>(10, 3.25), 16);
    const auto curve = quantile_curve(recs, {16}, 10, 0.05);
    CHECK(curve.size() == 1);
    CHECK(curve[0].quantile == 3.25);
    CHECK(curve[0].mean == doctest::Approx(3.25));
  }
  SUBCASE("delta=0.5 picks the median on odd samples") {
    const auto recs = records_from({5.0, 1.0, 3.0, 2.0, 4.0}, 16);
    const auto curve = quantile_curve(recs, {16}, 5, 0.5);
    CHECK(curve[0].quantile == 3.0);
    CHECK(curve[0].median == 3.0);
  }
  SUBCASE("95th order statistic of 1..100") {
    std::vector<double> risks;
    for (int i = 1; i <= 100; ++i) risks.push_back(static_cast<double>(i));
    const auto curve = quantile_curve(records_from(risks, 32), {32}, 100, 0.05);
    CHECK(curve[0].quantile == 95.0);
  }
  SUBCASE("delta monotonicity on fixed records") {
    std::vector<double> risks;
    CounterRng rng(5);
    for (int i = 0; i < 200; ++i) risks.push_back(rng.next_double());
    const auto recs = records_from(risks, 64);
    const auto q001 = quantile_curve(recs, {64}, 200, 0.01)[0].quantile;
    const auto q01 = quantile_curve(recs, {64}, 200, 0.1)[0].quantile;
    CHECK(q001 >= q01);
  }
  SUBCASE("missing records are reported") {
    const auto recs = records_from({1.0, 2.0}, 16);
    CHECK_THROWS_WITH_AS(static_cast<void>(quantile_curve(recs, {16, 32}, 2, 0.5)),
                         doctest::Contains("n=32"), std::runtime_error);
  }
}

TEST_CASE("rate fit") {
  SUBCASE("exact 1/n power law") {
    std::vector<QuantilePoint> curve;
    for (std::size_t n : {8, 16, 32, 64, 128}) {
      QuantilePoint q;
      q.n = n;
      q.quantile = 3.0 / static_cast<double>(n);
      curve.push_back(q);
    }
    const RateFit fit = fit_rate(curve);
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(fit.residual_rms <= 1e-12);
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
  }
  SUBCASE("exact 1/sqrt(n) power law") {
    std::vector<QuantilePoint> curve;
    for (std::size_t n : {8, 16, 32, 64}) {
      QuantilePoint q;
      q.n = n;
      q.quantile = 1.0 / std::sqrt(static_cast<double>(n));
      curve.push_back(q);
    }
    CHECK(fit_rate(curve).slope == doctest::Approx(-0.5).epsilon(1e-12));
  }
  SUBCASE("needs four points and positive quantiles") {
    std::vector<QuantilePoint> curve(3);
    CHECK_THROWS_AS(fit_rate(curve), std::invalid_argument);
    curve.resize(4);
    for (std::size_t i = 0; i < 4; ++i) {
      curve[i].n = 8 << i;
      curve[i].quantile = i == 2 ? 0.0 : 1.0;
    }
    CHECK_THROWS_AS(fit_rate(curve), std::runtime_error);
  }
}

TEST_CASE("experiment scheduling independence") {
  const MatrixGameInstance game(make_matrix_game(2, 2.0, 2.0, 1.0, 3, 15));
  ExperimentConfig cfg;
  cfg.n_grid = {8, 16};
  cfg.replications = 6;
  cfg.delta = 0.2;
  cfg.master_seed = 31415;
  cfg.empirical_solver.gap_tolerance = 1e-8;
  cfg.oracle_solver.inner_tolerance = 1e-9;

  cfg.threads = 1;
  const ExperimentResult serial = run_experiment(game, cfg);
  cfg.threads = 4;
  const ExperimentResult parallel = run_experiment(game, cfg);
  REQUIRE(serial.records.size() == parallel.records.size());
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    CHECK(serial.records[i].strong_excess_risk ==
          parallel.records[i].strong_excess_risk);
    CHECK(serial.records[i].seed == parallel.records[i].seed);
    CHECK(serial.records[i].work_units == parallel.records[i].work_units);
  }
  CHECK(serial.curve.size() == 2);
}

TEST_CASE("experiment config validation") {
  ExperimentConfig cfg;
  cfg.n_grid = {8, 8};
  cfg.replications = 30;
  cfg.master_seed = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.n_grid = {8, 16};
  cfg.delta = 0.05;
  cfg.replications = 10;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.replications = 20;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_grid = {1, 2};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
