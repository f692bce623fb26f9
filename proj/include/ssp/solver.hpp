#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/problems.hpp"

namespace ssp {

enum class Averaging { Last, Ergodic };

struct SolverConfig {
  double step_size = 0.0;  // <= 0 selects the automatic 1/(2 L_field) step
  std::size_t max_iters = 200000;
  double gap_tolerance = 1e-9;
  double inner_tolerance = 1e-7;  // best-response termination scale
  Averaging averaging = Averaging::Last;
  std::size_t gap_check_every = 25;

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
    if (!(gap_tolerance > 0.0))
      throw std::invalid_argument("solver: gap_tolerance must be positive");
    if (!(inner_tolerance > 0.0))
      throw std::invalid_argument("solver: inner_tolerance must be positive");
  }
};

struct SaddlePair {
  BlockVector x;
  BlockVector y;
};

struct SolveReport {
  SaddlePair solution;
  double final_gap = 0.0;
  std::size_t iterations = 0;
  std::vector<double> gap_trace;
  std::vector<std::size_t> gap_trace_iters;
  bool converged = false;
  std::size_t work_units = 0;  // deterministic cost proxy: outer + inner iterations
};

struct BestResponseResult {
  BlockVector point;
  double residual = 0.0;
  double certified_gap = 0.0;  // rigorous optimality bound 2*residual^2/sigma
  bool converged = false;
  std::size_t iterations = 0;
};

namespace solver_detail {

inline BlockVector block_center(const GeometrySpec& g) {
  if (g.kind == GeometryKind::TruncatedSimplexEntropy)
    return BlockVector(g.dim, 1.0 / static_cast<double>(g.dim));
  return BlockVector(g.dim, 0.0);
}

// Inner prox-gradient loop on one block. `grad` must be the descent gradient
// of the minimized objective (negate for the max block). Termination is by
// the Euclidean projected-gradient mapping G at step 1/L. The returned point
// is the projected step itself: for x+ = proj(x - (1/L) grad f(x)) strong
// convexity gives f(x+) - f* <= ||G||^2 (3/(2L) + 1/(2 sigma)) <= 2||G||^2/sigma,
// so certified_gap covers exactly the point handed back.
template <typename GradFn>
BestResponseResult minimize_block(const GeometrySpec& g, GradFn&& grad,
                                  double sigma, double smoothness,
                                  const SolverConfig& cfg,
                                  const BlockVector* warm_start = nullptr) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("best_response: requires strong convexity");
  if (!(smoothness > 0.0))
    throw std::invalid_argument("best_response: bad smoothness bound");

  const double eta_cert = 1.0 / smoothness;
  double eta = eta_cert;
  const double eta_floor = eta_cert * 0x1p-40;
  const double threshold = cfg.inner_tolerance * sigma;

  BestResponseResult out;
  BlockVector u = warm_start ? project(*warm_start, g) : block_center(g);
  BlockVector stepped = u;
  auto certificate_step = [&](const BlockVector& point, const BlockVector& gr) {
    BlockVector shifted(point.size());
    for (std::size_t i = 0; i < point.size(); ++i)
      shifted[i] = point[i] - eta_cert * gr[i];
    return project(shifted, g);
  };
  double res = 0.0;
  double res_window = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const BlockVector gr = grad(u);
    stepped = certificate_step(u, gr);
    res = l2_norm(sub(u, stepped)) / eta_cert;
    out.iterations = it;
    if (res <= threshold) {
      out.converged = true;
      break;
    }
    // The entropic update has a slightly biased fixed point when the
    // truncation floor binds; halving the step drives the bias below the
    // certificate threshold.
    if (it > 0 && it % 64 == 0) {
      if (res > 0.7 * res_window && eta > eta_floor) eta *= 0.5;
      res_window = res;
    }
    u = prox_step(u, gr, eta, g);
  }
  // The loop may have stepped past the last measured residual; refresh the
  // certificate for the point actually returned.
  if (!out.converged) {
    const BlockVector gr = grad(u);
    stepped = certificate_step(u, gr);
    res = l2_norm(sub(u, stepped)) / eta_cert;
  }
  out.point = std::move(stepped);
  out.residual = res;
  out.certified_gap = 2.0 * res * res / sigma;
  return out;
}

}  // namespace solver_detail

inline BestResponseResult best_response_x_report(const SaddleObjective& obj,
                                                 const BlockVector& y,
                                                 const SolverConfig& cfg,
                                                 const BlockVector* warm = nullptr) {
  return solver_detail::minimize_block(
      obj.x_geometry(), [&](const BlockVector& u) { return obj.grad_x(u, y); },
      obj.info().sigma_x, obj.info().field_smoothness, cfg, warm);
}

inline BestResponseResult best_response_y_report(const SaddleObjective& obj,
                                                 const BlockVector& x,
                                                 const SolverConfig& cfg,
                                                 const BlockVector* warm = nullptr) {
  return solver_detail::minimize_block(
      obj.y_geometry(),
      [&](const BlockVector& u) {
        BlockVector g = obj.grad_y(x, u);
        for (auto& gi : g) gi = -gi;
        return g;
      },
      obj.info().sigma_y, obj.info().field_smoothness, cfg, warm);
}

inline BlockVector best_response_x(const SaddleObjective& obj, const BlockVector& y,
                                   const SolverConfig& cfg) {
  return best_response_x_report(obj, y, cfg).point;
}

inline BlockVector best_response_y(const SaddleObjective& obj, const BlockVector& x,
                                   const SolverConfig& cfg) {
  return best_response_y_report(obj, x, cfg).point;
}

// F(x, y*(x)) - F(x*(y), y) for the passed objective. Clamps tiny negative
// values caused by best-response tolerances; a value below -1e-10 means the
// subsolver is broken and is reported as an error.
inline double duality_gap(const SaddleObjective& obj, const SaddlePair& pair,
                          const SolverConfig& cfg) {
  if (!is_feasible(pair.x, obj.x_geometry()) || !is_feasible(pair.y, obj.y_geometry()))
    throw std::invalid_argument("duality_gap: infeasible pair");
  const BestResponseResult bry = best_response_y_report(obj, pair.x, cfg);
  const BestResponseResult brx = best_response_x_report(obj, pair.y, cfg);
  const double gap = obj.loss(pair.x, bry.point) - obj.loss(brx.point, pair.y);
  if (gap < -1e-10)
    throw std::runtime_error(
        "duality_gap: negative beyond -1e-10; best-response subsolver broken");
  return std::max(gap, 0.0);
}

// Mirror-prox (extragradient with the block-geometry prox steps) with
// duality-gap stopping. The automatic step is 1/(2 L_field). Non-convergence
// is reported with converged=false, never via an exception.
inline SolveReport solve_saddle(const SaddleObjective& obj, const SolverConfig& cfg) {
  cfg.validate();
  const GeometrySpec& gx = obj.x_geometry();
  const GeometrySpec& gy = obj.y_geometry();
  const double l_field = obj.info().field_smoothness;
  double eta = cfg.step_size > 0.0 ? cfg.step_size : 1.0 / (2.0 * l_field);
  const double eta_floor = eta * 0x1p-40;

  SolveReport rep;
  BlockVector x = solver_detail::block_center(gx);
  BlockVector y = solver_detail::block_center(gy);
  BlockVector avg_x = x, avg_y = y;
  std::size_t avg_count = 0;

  auto candidate = [&]() -> SaddlePair {
    if (cfg.averaging == Averaging::Ergodic && avg_count > 0) return {avg_x, avg_y};
    return {x, y};
  };

  auto check_gap = [&](std::size_t iter) -> bool {
    const SaddlePair cand = candidate();
    const BestResponseResult bry = best_response_y_report(obj, cand.x, cfg, &cand.y);
    const BestResponseResult brx = best_response_x_report(obj, cand.y, cfg, &cand.x);
    rep.work_units += bry.iterations + brx.iterations;
    double gap = obj.loss(cand.x, bry.point) - obj.loss(brx.point, cand.y);
    if (gap < -1e-10)
      throw std::runtime_error("solve_saddle: broken gap evaluation");
    gap = std::max(gap, 0.0);
    const double prev =
        rep.gap_trace.empty() ? std::numeric_limits<double>::infinity()
                              : rep.gap_trace.back();
    rep.gap_trace.push_back(gap);
    rep.gap_trace_iters.push_back(iter);
    rep.final_gap = gap;
    if (gap <= cfg.gap_tolerance) return true;
    if (gap > 0.9 * prev && eta > eta_floor) eta *= 0.5;
    return false;
  };

  std::size_t iter = 0;
  std::size_t last_check = std::numeric_limits<std::size_t>::max();
  bool done = false;
  while (iter < cfg.max_iters && !done) {
    const BlockVector gx0 = obj.grad_x(x, y);
    BlockVector gy0 = obj.grad_y(x, y);
    for (auto& v : gy0) v = -v;
    const BlockVector xh = prox_step(x, gx0, eta, gx);
    const BlockVector yh = prox_step(y, gy0, eta, gy);

    const BlockVector gxh = obj.grad_x(xh, yh);
    BlockVector gyh = obj.grad_y(xh, yh);
    for (auto& v : gyh) v = -v;
    x = prox_step(x, gxh, eta, gx);
    y = prox_step(y, gyh, eta, gy);

    ++avg_count;
    const double w = 1.0 / static_cast<double>(avg_count);
    for (std::size_t i = 0; i < avg_x.size(); ++i)
      avg_x[i] += (xh[i] - avg_x[i]) * w;
    for (std::size_t i = 0; i < avg_y.size(); ++i)
      avg_y[i] += (yh[i] - avg_y[i]) * w;

    ++iter;
    if (iter % cfg.gap_check_every == 0) {
      done = check_gap(iter);
      last_check = iter;
    }
  }
  if (!done && last_check != iter) check_gap(iter);

  rep.solution = candidate();
  rep.iterations = iter;
  rep.work_units += iter;
  rep.converged = rep.final_gap <= cfg.gap_tolerance;
  return rep;
}

}  // namespace ssp
