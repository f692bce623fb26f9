#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/problems.hpp"
#include "ssp/risk_lab.hpp"
#include "ssp/solver.hpp"

namespace ssp {

// Localization constants and the exponential-moment weight:
//   C      = 1 - L_xy / min(sigma_x, sigma_y)
//   C_tilde = sqrt(2) (1 + L_xy / min(sigma_x, sigma_y))
//   L_tilde = 2 max(L_x, L_y) C_tilde
//   lambda  = max(sigma_x, sigma_y) C^2 n / (32 sqrt(2) e L_tilde^2)
struct ShiftedConstants {
  double lambda = 0.0;
  double C = 0.0;
  double C_tilde = 0.0;
  double L_tilde = 0.0;
};

inline ShiftedConstants lambda_lemma42(const TheoreticalConstants& c, std::size_t n) {
  const double smin = std::min(c.sigma_x, c.sigma_y);
  const double smax = std::max(c.sigma_x, c.sigma_y);
  if (!(smin > 0.0) || c.L_xy > smin)
    throw std::invalid_argument("lambda_lemma42: requires L_xy <= min(sigma)");
  ShiftedConstants out;
  out.C = 1.0 - c.L_xy / smin;
  out.C_tilde = std::sqrt(2.0) * (1.0 + c.L_xy / smin);
  out.L_tilde = 2.0 * std::max(c.L_x, c.L_y) * out.C_tilde;
  const double coef = smax * out.C * out.C /
                      (32.0 * std::sqrt(2.0) * std::exp(1.0) * out.L_tilde * out.L_tilde);
  out.lambda = coef * static_cast<double>(n);
  return out;
}

// Population saddle and best-response oracles shared by the checks.
struct PopulationOracle {
  SaddleObjective objective;
  SolverConfig config;
  SaddlePair saddle;

  PopulationOracle(const ProblemInstance& inst, SolverConfig oracle_cfg)
      : objective(population_objective(inst)), config(std::move(oracle_cfg)) {
    SolverConfig solve_cfg = config;
    solve_cfg.gap_tolerance = std::min(config.gap_tolerance, 1e-12);
    const SolveReport rep = solve_saddle(objective, solve_cfg);
    if (!rep.converged)
      throw std::runtime_error("population oracle: saddle solve did not converge");
    saddle = rep.solution;
  }

  BlockVector best_x(const BlockVector& y) const {
    return best_response_x_report(objective, y, config, &saddle.x).point;
  }
  BlockVector best_y(const BlockVector& x) const {
    return best_response_y_report(objective, x, config, &saddle.y).point;
  }
};

struct ShiftedProcessConfig {
  std::size_t n = 16;
  std::size_t rademacher_draws = 500;
  double grid_resolution = 0.05;  // l1 resolution per block
  std::uint64_t seed = 0;
  std::size_t zoom_rounds = 3;
  std::size_t zoom_factor = 5;
  std::size_t threads = 1;

  void validate() const {
    if (n < 1) throw std::invalid_argument("shifted: n must be >= 1");
    if (rademacher_draws < 100)
      throw std::invalid_argument("shifted: need >= 100 rademacher draws");
    if (!(grid_resolution > 0.0 && grid_resolution <= 0.05))
      throw std::invalid_argument("shifted: grid resolution must be in (0, 0.05]");
  }
};

namespace shifted_detail {

// Reduced-coordinate grid over a truncated simplex of dim <= 3 (the last
// coordinate absorbs the rest). Step h in reduced coordinates corresponds to
// l1 resolution 2h between neighbors.
inline std::vector<BlockVector> simplex_grid(const GeometrySpec& g, double step,
                                             const BlockVector* center = nullptr,
                                             double span = 0.0) {
  if (g.kind != GeometryKind::TruncatedSimplexEntropy)
    throw std::invalid_argument("shifted: grid supports simplex blocks only");
  if (g.dim > 3)
    throw std::invalid_argument("shifted: grid infeasible for dim > 3");
  const double floor = g.floor_value();
  std::vector<BlockVector> pts;
  if (g.dim == 1) {
    pts.push_back({1.0});
    return pts;
  }
  const double width = 1.0 - static_cast<double>(g.dim) * floor;
  if (step > width)
    throw std::invalid_argument(
        "shifted: grid resolution coarser than the truncated feasible range");
  auto range = [&](std::size_t i, double lo, double hi) {
    if (center) {
      lo = std::max(lo, (*center)[i] - span);
      hi = std::min(hi, (*center)[i] + span);
    }
    std::vector<double> vals;
    for (double v = lo; v <= hi + 1e-12; v += step) vals.push_back(std::min(v, hi));
    if (vals.empty()) vals.push_back(lo);
    return vals;
  };
  if (g.dim == 2) {
    for (double t : range(0, floor, 1.0 - floor)) pts.push_back({t, 1.0 - t});
    return pts;
  }
  for (double z1 : range(0, floor, 1.0 - 2.0 * floor)) {
    for (double z2 : range(1, floor, 1.0 - z1 - floor)) {
      const double z3 = 1.0 - z1 - z2;
      if (z3 >= floor - 1e-12) pts.push_back({z1, z2, std::max(z3, floor)});
    }
  }
  return pts;
}

// Cached per-point data: the population best response against the point and
// the per-atom loss table of the resulting pair.
struct PointData {
  BlockVector point;
  BlockVector br;
  std::vector<double> atom_loss;
};

struct SupEvaluator {
  const ProblemInstance& inst;
  const PopulationOracle& oracle;
  double sigma_x, sigma_y;

  SupEvaluator(const ProblemInstance& instance, const PopulationOracle& orc)
      : inst(instance), oracle(orc) {
    const TheoreticalConstants c = inst.constants();
    sigma_x = c.sigma_x;
    sigma_y = c.sigma_y;
  }

  PointData make_x(const BlockVector& x) const {
    PointData p;
    p.point = x;
    p.br = oracle.best_y(x);
    p.atom_loss.resize(inst.atom_count());
    for (std::size_t k = 0; k < inst.atom_count(); ++k)
      p.atom_loss[k] = inst.loss(x, p.br, k);
    return p;
  }

  PointData make_y(const BlockVector& y) const {
    PointData p;
    p.point = y;
    p.br = oracle.best_x(y);
    p.atom_loss.resize(inst.atom_count());
    for (std::size_t k = 0; k < inst.atom_count(); ++k)
      p.atom_loss[k] = inst.loss(p.br, y, k);
    return p;
  }

  // signed_weights[k] = sum of Rademacher signs on atom k divided by n.
  double value(const PointData& px, const PointData& py,
               const std::vector<double>& signed_weights) const {
    double s = 0.0;
    for (std::size_t k = 0; k < signed_weights.size(); ++k)
      if (signed_weights[k] != 0.0)
        s += signed_weights[k] * (px.atom_loss[k] - py.atom_loss[k]);
    const double ny = norm(sub(py.point, px.br), inst.y_geometry());
    const double nx = norm(sub(px.point, py.br), inst.x_geometry());
    return s - sigma_y / 8.0 * ny * ny - sigma_x / 8.0 * nx * nx;
  }
};

inline std::vector<double> signed_weights(const SampleSet& s,
                                          const std::vector<double>& eps,
                                          std::size_t atoms) {
  std::vector<double> w(atoms, 0.0);
  for (std::size_t i = 0; i < s.indices.size(); ++i) w[s.indices[i]] += eps[i];
  for (auto& v : w) v /= static_cast<double>(s.n);
  return w;
}

}  // namespace shifted_detail

// P_n eps (F(x, y*(x), xi) - F(x*(y), y, xi)) - (sigma_y/8)||y - y*(x)||^2
//                                            - (sigma_x/8)||x - x*(y)||^2
// with best responses from the population oracle.
inline double shifted_process_value(const ProblemInstance& inst, const SaddlePair& pair,
                                    const SampleSet& sample,
                                    const std::vector<double>& eps,
                                    const PopulationOracle& oracle) {
  if (eps.size() != sample.n)
    throw std::invalid_argument("shifted_process_value: eps size must equal n");
  for (double e : eps)
    if (e != 1.0 && e != -1.0)
      throw std::invalid_argument("shifted_process_value: eps entries must be +-1");
  if (!is_feasible(pair.x, inst.x_geometry()) || !is_feasible(pair.y, inst.y_geometry()))
    throw std::invalid_argument("shifted_process_value: infeasible pair");
  const shifted_detail::SupEvaluator ev(inst, oracle);
  const auto w = shifted_detail::signed_weights(sample, eps, inst.atom_count());
  return ev.value(ev.make_x(pair.x), ev.make_y(pair.y), w);
}

struct SupResult {
  double value = 0.0;
  SaddlePair argmax;
};

// Supremum of the shifted process over the product grid, refined by
// deterministic zoom around the best cell. The saddle witness (x*, y*) is
// always evaluated and the result floored at 0, which the true supremum
// attains there.
inline SupResult sup_shifted_process(const ProblemInstance& inst,
                                     const SampleSet& sample,
                                     const std::vector<double>& eps,
                                     const ShiftedProcessConfig& cfg,
                                     const PopulationOracle& oracle) {
  using namespace shifted_detail;
  const SupEvaluator ev(inst, oracle);
  const auto w = signed_weights(sample, eps, inst.atom_count());
  double step = cfg.grid_resolution / 2.0;

  std::vector<PointData> xs, ys;
  for (const auto& x : simplex_grid(inst.x_geometry(), step)) xs.push_back(ev.make_x(x));
  for (const auto& y : simplex_grid(inst.y_geometry(), step)) ys.push_back(ev.make_y(y));

  SupResult best;
  best.value = -std::numeric_limits<double>::infinity();
  auto consider = [&](const PointData& px, const PointData& py) {
    const double v = ev.value(px, py, w);
    if (v > best.value) {
      best.value = v;
      best.argmax = {px.point, py.point};
    }
  };
  for (const auto& px : xs)
    for (const auto& py : ys) consider(px, py);

  const PointData wx = ev.make_x(oracle.saddle.x);
  const PointData wy = ev.make_y(oracle.saddle.y);
  consider(wx, wy);

  for (std::size_t round = 0; round < cfg.zoom_rounds; ++round) {
    const double span = step;
    step /= static_cast<double>(cfg.zoom_factor);
    const BlockVector cx = best.argmax.x, cy = best.argmax.y;
    std::vector<PointData> lx, ly;
    for (const auto& x : simplex_grid(inst.x_geometry(), step, &cx, span))
      lx.push_back(ev.make_x(x));
    for (const auto& y : simplex_grid(inst.y_geometry(), step, &cy, span))
      ly.push_back(ev.make_y(y));
    for (const auto& px : lx)
      for (const auto& py : ly) consider(px, py);
  }

  best.value = std::max(best.value, 0.0);
  return best;
}

struct ExpMomentReport {
  double lambda = 0.0;
  double log_mc_estimate = 0.0;
  double log_theory_bound = 0.0;
  bool passed = false;
  std::size_t draws = 0;
  std::size_t dim = 0;
  std::vector<double> suprema;
};

// Monte-Carlo check of the exponential-moment bound
//   E_eps exp(lambda sup ...) <= e + e^{3d} + 12 e^{2048 (1+e)^2 d / e},
// evaluated in the log domain on both sides.
inline ExpMomentReport exp_moment_check(const ProblemInstance& inst,
                                        const ShiftedProcessConfig& cfg,
                                        const PopulationOracle& oracle) {
  cfg.validate();
  const ShiftedConstants sc = lambda_lemma42(inst.constants(), cfg.n);
  const SampleSet s = sample(inst, cfg.n, derive_seed(cfg.seed, 0x736dULL));

  ExpMomentReport rep;
  rep.lambda = sc.lambda;
  rep.draws = cfg.rademacher_draws;
  rep.dim = inst.x_geometry().dim;
  rep.suprema.resize(cfg.rademacher_draws);

  parallel_for(cfg.rademacher_draws, cfg.threads, [&](std::size_t j) {
    CounterRng rng(derive_seed(cfg.seed, 0x657073ULL, j));
    std::vector<double> eps(cfg.n);
    for (auto& e : eps) e = rng.next_sign();
    rep.suprema[j] = sup_shifted_process(inst, s, eps, cfg, oracle).value;
  });

  // log-mean-exp of lambda * sup_j.
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : rep.suprema) mx = std::max(mx, sc.lambda * v);
  double acc = 0.0;
  for (double v : rep.suprema) acc += std::exp(sc.lambda * v - mx);
  rep.log_mc_estimate = mx + std::log(acc / static_cast<double>(cfg.rademacher_draws));

  const double d = static_cast<double>(rep.dim);
  const double e = std::exp(1.0);
  const double kappa = 2048.0 * (1.0 + e) * (1.0 + e) / e;
  // log(e + e^{3d} + 12 e^{kappa d}) via stable log-sum-exp.
  const double t1 = 1.0, t2 = 3.0 * d, t3 = std::log(12.0) + kappa * d;
  const double tm = std::max({t1, t2, t3});
  rep.log_theory_bound =
      tm + std::log(std::exp(t1 - tm) + std::exp(t2 - tm) + std::exp(t3 - tm));
  if (!std::isfinite(rep.log_mc_estimate))
    throw std::runtime_error("exp_moment_check: non-finite supremum");
  rep.passed = rep.log_mc_estimate <= rep.log_theory_bound;
  return rep;
}

struct Lemma41Report {
  double lhs = 0.0;       // strong excess risk of the ESP solution
  double rhs = 0.0;       // empirical-process bound with 3/4 penalties
  double slack = 0.0;     // rhs - lhs
  double ssp_slack = 0.0;
  double esp_slack = 0.0;
  double allowance = 1e-6;
  bool passed = false;
};

// Deterministic inequality chain behind the symmetrization step, evaluated
// exactly on the finite support:
//   F(xh, y*(xh)) - F(x*(yh), yh)
//     <= 2 (P - P_n)(F(xh, y*(xh), xi) - F(x*(yh), yh, xi))
//        - (3 sigma_y/4)||yh - y*(xh)||^2 - (3 sigma_x/4)||xh - x*(yh)||^2,
// plus the per-block inequalities it is assembled from.
inline Lemma41Report check_lemma41_chain(const ProblemInstance& inst, std::size_t n,
                                         std::uint64_t seed,
                                         const SolverConfig& emp_cfg,
                                         const PopulationOracle& oracle,
                                         double allowance = 1e-6) {
  const SampleSet s = sample(inst, n, seed);
  const SaddleObjective emp = empirical_objective(inst, s);
  const SolveReport solve = solve_saddle(emp, emp_cfg);
  const BlockVector& xh = solve.solution.x;
  const BlockVector& yh = solve.solution.y;
  const BlockVector ystar = oracle.best_y(xh);
  const BlockVector xstar = oracle.best_x(yh);
  const TheoreticalConstants c = inst.constants();

  const auto& p = inst.atom_probs();
  auto pop_minus_emp = [&](auto&& g) {
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
      acc += (p[k] - s.weights[k]) * g(k);
    return acc;
  };

  const double ny = norm(sub(yh, ystar), inst.y_geometry());
  const double nx = norm(sub(xh, xstar), inst.x_geometry());

  Lemma41Report rep;
  rep.allowance = allowance;
  rep.lhs = population_loss(inst, xh, ystar) - population_loss(inst, xstar, yh);
  rep.rhs = 2.0 * pop_minus_emp([&](std::size_t k) {
              return inst.loss(xh, ystar, k) - inst.loss(xstar, yh, k);
            }) -
            0.75 * c.sigma_y * ny * ny - 0.75 * c.sigma_x * nx * nx;
  rep.slack = rep.rhs - rep.lhs;

  const double ssp_lhs =
      population_loss(inst, xh, ystar) - population_loss(inst, xh, yh);
  const double ssp_rhs = 2.0 * pop_minus_emp([&](std::size_t k) {
                           return inst.loss(xh, ystar, k) - inst.loss(xh, yh, k);
                         }) -
                         0.75 * c.sigma_y * ny * ny;
  rep.ssp_slack = ssp_rhs - ssp_lhs;

  const double esp_lhs =
      population_loss(inst, xh, yh) - population_loss(inst, xstar, yh);
  const double esp_rhs = 2.0 * pop_minus_emp([&](std::size_t k) {
                           return inst.loss(xh, yh, k) - inst.loss(xstar, yh, k);
                         }) -
                         0.75 * c.sigma_x * nx * nx;
  rep.esp_slack = esp_rhs - esp_lhs;

  rep.passed = rep.slack >= -allowance && rep.ssp_slack >= -allowance &&
               rep.esp_slack >= -allowance;
  return rep;
}

struct LocalizationReport {
  std::size_t probes = 0;
  double worst_gradnorm_slack = 0.0;  // min over probes of rhs - lhs
  double worst_quadratic_slack = 0.0;
  bool passed = false;
};

// Best-response Lipschitzness ||x*(y) - x*|| <= (L_xy/sigma_x)||y - y*||
// (and symmetrically), plus the quadratic localization
// (C^2/2)(||x-x*|| + ||y-y*||)^2 <= ||x-x*(y)||^2 + ||y-y*(x)||^2.
inline LocalizationReport check_localization(const ProblemInstance& inst,
                                             std::size_t n_probe, std::uint64_t seed,
                                             const PopulationOracle& oracle,
                                             double tolerance = 1e-6) {
  const TheoreticalConstants c = inst.constants();
  if (!c.assumption4_holds)
    throw std::invalid_argument("check_localization: requires assumption4");
  const double smin = std::min(c.sigma_x, c.sigma_y);
  const double C = 1.0 - c.L_xy / smin;
  const GeometrySpec& gx = inst.x_geometry();
  const GeometrySpec& gy = inst.y_geometry();
  const BlockVector& xstar = oracle.saddle.x;
  const BlockVector& ystar = oracle.saddle.y;

  LocalizationReport rep;
  rep.probes = n_probe;
  rep.worst_gradnorm_slack = std::numeric_limits<double>::infinity();
  rep.worst_quadratic_slack = std::numeric_limits<double>::infinity();
  CounterRng rng(derive_seed(seed, 0x6c6f63ULL));
  for (std::size_t t = 0; t < n_probe; ++t) {
    const BlockVector x = random_feasible(gx, rng);
    const BlockVector y = random_feasible(gy, rng);
    const BlockVector brx = oracle.best_x(y);
    const BlockVector bry = oracle.best_y(x);
    const double dx_star = norm(sub(x, xstar), gx);
    const double dy_star = norm(sub(y, ystar), gy);

    const double g1 = (c.L_xy / c.sigma_x) * dy_star - norm(sub(brx, xstar), gx);
    const double g2 = (c.L_xy / c.sigma_y) * dx_star - norm(sub(bry, ystar), gy);
    rep.worst_gradnorm_slack = std::min({rep.worst_gradnorm_slack, g1, g2});

    const double nx = norm(sub(x, brx), gx);
    const double ny = norm(sub(y, bry), gy);
    const double lhs = 0.5 * C * C * (dx_star + dy_star) * (dx_star + dy_star);
    rep.worst_quadratic_slack =
        std::min(rep.worst_quadratic_slack, nx * nx + ny * ny - lhs);
  }
  rep.passed = rep.worst_gradnorm_slack >= -tolerance &&
               rep.worst_quadratic_slack >= -tolerance;
  return rep;
}

}  // namespace ssp
