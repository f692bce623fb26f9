#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ssp/problems.hpp"
#include "ssp/solver.hpp"

namespace ssp {

// Runs fn(i) for i in [0, count) on `threads` workers. Work items are
// independent and land in caller-indexed slots, so results do not depend on
// scheduling. The first exception thrown by any item is rethrown after all
// workers join.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min(threads, count);
  pool.reserve(n);
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct RiskRecord {
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  double strong_excess_risk = 0.0;
  double empirical_gap = 0.0;
  double oracle_gap = 0.0;       // certified best-response optimality bound
  std::size_t work_units = 0;    // deterministic cost proxy persisted as wall_ms
  double wall_seconds = 0.0;     // measured, diagnostics only (not persisted)
  bool solver_converged = false;
};

struct RiskValue {
  double risk = 0.0;
  double oracle_cert = 0.0;
  std::size_t oracle_iters = 0;
};

// Population duality gap of a candidate pair, evaluated with exact population
// oracles. The oracle error budget auto-tightens: best responses are re-solved
// at 10x tighter tolerance until their certified gap is at most 1% of the
// measured risk (or the tolerance floor is hit).
inline RiskValue strong_excess_risk_value(const ProblemInstance& inst,
                                          const SaddlePair& pair,
                                          const SolverConfig& oracle_cfg) {
  const SaddleObjective pop = population_objective(inst);
  if (!is_feasible(pair.x, pop.x_geometry()) || !is_feasible(pair.y, pop.y_geometry()))
    throw std::invalid_argument("strong_excess_risk: infeasible pair");

  SolverConfig cfg = oracle_cfg;
  RiskValue out;
  for (int round = 0; round < 4; ++round) {
    const BestResponseResult bry = best_response_y_report(pop, pair.x, cfg);
    const BestResponseResult brx = best_response_x_report(pop, pair.y, cfg);
    out.risk = pop.loss(pair.x, bry.point) - pop.loss(brx.point, pair.y);
    out.oracle_cert = bry.certified_gap + brx.certified_gap;
    out.oracle_iters += bry.iterations + brx.iterations;
    const bool budget_ok =
        out.oracle_cert <= 0.01 * std::max(std::abs(out.risk), 1e-12);
    if (budget_ok || cfg.inner_tolerance <= 1e-12) break;
    cfg.inner_tolerance = std::max(cfg.inner_tolerance * 0.1, 1e-12);
  }
  if (out.risk < -1e-8)
    throw std::runtime_error("strong_excess_risk: negative beyond -1e-8 (oracle failure)");
  return out;
}

inline double strong_excess_risk(const ProblemInstance& inst, const SaddlePair& pair,
                                 const SolverConfig& oracle_cfg) {
  return strong_excess_risk_value(inst, pair, oracle_cfg).risk;
}

// sample -> solve ESP -> measure risk against population oracles. Fully
// deterministic given (instance, n, seed).
inline RiskRecord run_replication(const ProblemInstance& inst, std::size_t n,
                                  std::uint64_t seed, const SolverConfig& emp_cfg,
                                  const SolverConfig& oracle_cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const SampleSet s = sample(inst, n, seed);
  const SaddleObjective emp = empirical_objective(inst, s);
  const SolveReport solve = solve_saddle(emp, emp_cfg);
  const RiskValue rv = strong_excess_risk_value(inst, solve.solution, oracle_cfg);

  RiskRecord rec;
  rec.n = n;
  rec.seed = seed;
  rec.strong_excess_risk = rv.risk;
  rec.empirical_gap = solve.final_gap;
  rec.oracle_gap = rv.oracle_cert;
  rec.work_units = solve.work_units + rv.oracle_iters;
  rec.solver_converged = solve.converged;
  if (rv.risk < -2.0 * rv.oracle_cert - 1e-12 && rv.risk < 0.0)
    throw std::runtime_error("run_replication: risk below oracle slack bound");
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

struct QuantilePoint {
  std::size_t n = 0;
  double quantile = 0.0;
  double mean = 0.0;
  double median = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double r2 = 0.0;
  std::vector<QuantilePoint> curve;
};

namespace risk_detail {

// ceil((1-delta)*R)-th order statistic, 1-based, of the sorted sample.
inline double order_statistic(std::vector<double> v, double delta) {
  std::sort(v.begin(), v.end());
  const double r = static_cast<double>(v.size());
  std::size_t idx = static_cast<std::size_t>(std::ceil((1.0 - delta) * r));
  idx = std::min(std::max<std::size_t>(idx, 1), v.size());
  return v[idx - 1];
}

}  // namespace risk_detail

// Per-n empirical (1-delta)-quantile of the risk records, plus mean and
// median. Requires a complete R-by-n_grid block of records.
inline std::vector<QuantilePoint> quantile_curve(const std::vector<RiskRecord>& records,
                                                 const std::vector<std::size_t>& n_grid,
                                                 std::size_t replications,
                                                 double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("quantile_curve: delta must be in (0,1)");
  std::vector<QuantilePoint> curve;
  std::string holes;
  for (std::size_t n : n_grid) {
    std::vector<double> risks;
    for (const auto& r : records)
      if (r.n == n) risks.push_back(r.strong_excess_risk);
    if (risks.size() < replications) {
      holes += " n=" + std::to_string(n) + " has " + std::to_string(risks.size()) +
               "/" + std::to_string(replications);
      continue;
    }
    QuantilePoint q;
    q.n = n;
    q.quantile = risk_detail::order_statistic(risks, delta);
    q.median = risk_detail::order_statistic(risks, 0.5);
    double s = 0.0;
    for (double v : risks) s += v;
    q.mean = s / static_cast<double>(risks.size());
    curve.push_back(q);
  }
  if (!holes.empty())
    throw std::runtime_error("quantile_curve: missing records:" + holes);
  return curve;
}

// OLS of log(quantile) on log(n).
inline RateFit fit_rate(const std::vector<QuantilePoint>& curve) {
  if (curve.size() < 4)
    throw std::invalid_argument("fit_rate: need at least 4 grid points");
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(curve.size()), ly(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (!(curve[i].quantile > 0.0))
      throw std::runtime_error(
          "fit_rate: non-positive quantile (raise oracle precision)");
    lx[i] = std::log(static_cast<double>(curve[i].n));
    ly[i] = std::log(curve[i].quantile);
    sx += lx[i];
    sy += ly[i];
  }
  const double n = static_cast<double>(curve.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  RateFit fit;
  fit.curve = curve;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += e * e;
  }
  fit.residual_rms = std::sqrt(ss_res / n);
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

struct ExperimentConfig {
  std::vector<std::size_t> n_grid;
  std::size_t replications = 0;
  double delta = 0.05;
  std::uint64_t master_seed = 0;
  SolverConfig empirical_solver;
  SolverConfig oracle_solver;
  std::size_t threads = 1;

  void validate() const {
    if (n_grid.empty()) throw std::invalid_argument("experiment: empty n_grid");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 2) throw std::invalid_argument("experiment: n must be >= 2");
      if (i > 0 && n_grid[i] <= n_grid[i - 1])
        throw std::invalid_argument("experiment: n_grid must be strictly increasing");
    }
    if (replications < 1) throw std::invalid_argument("experiment: replications >= 1");
    if (!(delta > 0.0 && delta < 1.0))
      throw std::invalid_argument("experiment: delta must be in (0,1)");
    if (delta <= 0.1 && replications < 20)
      throw std::invalid_argument(
          "experiment: need >= 20 replications for delta <= 0.1");
  }
};

struct ExperimentResult {
  std::vector<RiskRecord> records;  // ordered by (n_grid index, rep)
  std::vector<QuantilePoint> curve;
  bool has_fit = false;
  RateFit fit;
  bool all_converged = true;
  std::vector<std::string> failures;  // per failed replication, empty when clean
};

// Per-replication seeds come from the splittable counter scheme keyed by
// (master_seed, n, rep), so any thread count and schedule produce identical
// records.
inline ExperimentResult run_experiment(const ProblemInstance& inst,
                                       const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t total = cfg.n_grid.size() * cfg.replications;
  ExperimentResult result;
  result.records.resize(total);
  std::vector<std::string> errors(total);

  parallel_for(total, cfg.threads, [&](std::size_t task) {
    const std::size_t ni = task / cfg.replications;
    const std::size_t rep = task % cfg.replications;
    const std::size_t n = cfg.n_grid[ni];
    const std::uint64_t seed = derive_seed(cfg.master_seed, n, rep);
    try {
      RiskRecord rec =
          run_replication(inst, n, seed, cfg.empirical_solver, cfg.oracle_solver);
      rec.rep = rep;
      result.records[task] = rec;
    } catch (const std::exception& e) {
      errors[task] = "n=" + std::to_string(n) + " rep=" + std::to_string(rep) +
                     ": " + e.what();
    }
  });

  for (const auto& e : errors)
    if (!e.empty()) result.failures.push_back(e);
  for (const auto& r : result.records)
    if (!r.solver_converged) result.all_converged = false;
  if (!result.failures.empty()) return result;

  result.curve =
      quantile_curve(result.records, cfg.n_grid, cfg.replications, cfg.delta);
  if (cfg.n_grid.size() >= 4) {
    result.fit = fit_rate(result.curve);
    result.has_fit = true;
  }
  return result;
}

}  // namespace ssp
