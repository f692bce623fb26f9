#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/problems.hpp"

namespace ssp {

// Empirical extremes from random probing against the theoretical constants.
// sigma_hat values are minima of calibrated midpoint-gap ratios, L_hat values
// maxima of difference quotients. Consistency uses 1e-6 relative tolerance.
struct AssumptionReport {
  std::size_t n_probe = 0;
  std::uint64_t seed = 0;
  TheoreticalConstants theory;
  double sigma_x_hat = 0.0;
  double sigma_y_hat = 0.0;
  double L_x_hat = 0.0;
  double L_y_hat = 0.0;
  double L_xy_hat = 0.0;
  bool sigma_x_consistent = false;
  bool sigma_y_consistent = false;
  bool L_x_consistent = false;
  bool L_y_consistent = false;
  bool L_xy_consistent = false;
  bool assumption4_empirical = false;

  bool passed() const {
    return sigma_x_consistent && sigma_y_consistent && L_x_consistent &&
           L_y_consistent && L_xy_consistent && theory.assumption4_holds &&
           assumption4_empirical;
  }

  std::string first_failure() const {
    if (!sigma_x_consistent) return "sigma_x below theoretical value";
    if (!sigma_y_consistent) return "sigma_y below theoretical value";
    if (!L_x_consistent) return "L_x above theoretical value";
    if (!L_y_consistent) return "L_y above theoretical value";
    if (!L_xy_consistent) return "L_xy above theoretical value";
    if (!theory.assumption4_holds) return "assumption4 fails theoretically";
    if (!assumption4_empirical) return "assumption4 fails empirically";
    return "";
  }
};

namespace assume_detail {

constexpr double kRelTol = 1e-6;

inline BlockVector midpoint(const BlockVector& a, const BlockVector& b) {
  BlockVector m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
  return m;
}

}  // namespace assume_detail

// Probes Assumptions 1-4 on random feasible points. Strong convexity and
// concavity use midpoint gaps: Assumption 1 at alpha=1/2 gives
// (f(a)+f(b))/2 - f(mid) >= (sigma/8)||a-b||^2, so the calibrated per-probe
// estimate is 8*gap/||a-b||^2 and the reported sigma_hat is the minimum.
// Lipschitz ratios are per-atom suprema. For instances whose sigma constants
// are mixture-level (sigma_scope_population), curvature is probed on the
// population objective instead of single atoms.
inline AssumptionReport verify_assumptions(const ProblemInstance& inst,
                                           std::size_t n_probe,
                                           std::uint64_t seed) {
  if (n_probe < 2) throw std::invalid_argument("verify_assumptions: n_probe >= 2");
  const GeometrySpec& gx = inst.x_geometry();
  const GeometrySpec& gy = inst.y_geometry();

  AssumptionReport rep;
  rep.n_probe = n_probe;
  rep.seed = seed;
  rep.theory = inst.constants();

  CounterRng rng(derive_seed(seed, 0x766641u));
  const bool pop_scope = inst.sigma_scope_population();
  const std::size_t atoms = inst.atom_count();

  double sx = std::numeric_limits<double>::infinity();
  double sy = std::numeric_limits<double>::infinity();
  double lx = 0.0, ly = 0.0, lxy = 0.0;
  std::size_t curvature_probes = 0;

  for (std::size_t t = 0; t < n_probe; ++t) {
    const std::size_t atom =
        static_cast<std::size_t>(rng.next_u64() % static_cast<std::uint64_t>(atoms));
    const BlockVector x1 = random_feasible(gx, rng);
    const BlockVector x2 = random_feasible(gx, rng);
    const BlockVector y1 = random_feasible(gy, rng);
    const BlockVector y2 = random_feasible(gy, rng);
    const double dxn = norm(sub(x1, x2), gx);
    const double dyn = norm(sub(y1, y2), gy);

    auto f_at = [&](const BlockVector& x, const BlockVector& y) {
      return pop_scope ? population_loss(inst, x, y) : inst.loss(x, y, atom);
    };

    if (dxn > 1e-9) {
      const double gap = 0.5 * (f_at(x1, y1) + f_at(x2, y1)) -
                         f_at(assume_detail::midpoint(x1, x2), y1);
      sx = std::min(sx, 8.0 * gap / (dxn * dxn));
      const double lr = std::abs(inst.loss(x1, y1, atom) - inst.loss(x2, y1, atom)) / dxn;
      lx = std::max(lx, lr);
      const BlockVector dgy = sub(inst.grad_y(x1, y1, atom), inst.grad_y(x2, y1, atom));
      lxy = std::max(lxy, dual_norm(dgy, gy) / dxn);
      ++curvature_probes;
    }
    if (dyn > 1e-9) {
      const double gap = f_at(x1, assume_detail::midpoint(y1, y2)) -
                         0.5 * (f_at(x1, y1) + f_at(x1, y2));
      sy = std::min(sy, 8.0 * gap / (dyn * dyn));
      const double lr = std::abs(inst.loss(x1, y1, atom) - inst.loss(x1, y2, atom)) / dyn;
      ly = std::max(ly, lr);
      const BlockVector dgx = sub(inst.grad_x(x1, y1, atom), inst.grad_x(x1, y2, atom));
      lxy = std::max(lxy, dual_norm(dgx, gx) / dyn);
      ++curvature_probes;
    }
  }
  if (curvature_probes == 0)
    throw std::invalid_argument("verify_assumptions: degenerate domain (zero diameter)");

  rep.sigma_x_hat = sx;
  rep.sigma_y_hat = sy;
  rep.L_x_hat = lx;
  rep.L_y_hat = ly;
  rep.L_xy_hat = lxy;

  const double rt = assume_detail::kRelTol;
  auto sigma_ok = [&](double hat, double th) {
    return hat >= th * (1.0 - rt) - 1e-12;
  };
  auto lip_ok = [&](double hat, double th) { return hat <= th * (1.0 + rt) + 1e-12; };
  rep.sigma_x_consistent = sigma_ok(sx, rep.theory.sigma_x);
  rep.sigma_y_consistent = sigma_ok(sy, rep.theory.sigma_y);
  rep.L_x_consistent = lip_ok(lx, rep.theory.L_x);
  rep.L_y_consistent = lip_ok(ly, rep.theory.L_y);
  rep.L_xy_consistent = lip_ok(lxy, rep.theory.L_xy);
  rep.assumption4_empirical = lxy <= std::min(sx, sy) * (1.0 + rt) + 1e-12;
  return rep;
}

}  // namespace ssp
