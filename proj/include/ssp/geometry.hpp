#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/rng.hpp"

namespace ssp {

using BlockVector = std::vector<double>;

constexpr double kFeasTol = 1e-12;

enum class GeometryKind { EuclideanBall, TruncatedSimplexEntropy };

// One factor of a product-of-balls domain. A segment of dim 1 is an
// interval [-radius, radius].
struct BallSegment {
  std::size_t dim = 0;
  double radius = 0.0;
};

// Block geometry: norm, projection and prox machinery for one variable block.
//
// EuclideanBall uses the l2 norm (self-dual). It optionally carries a
// segment list describing a product of balls (needed for blocks that mix a
// ball-constrained vector with box-constrained scalars); the norm stays
// plain l2 on the concatenated vector and projection factors per segment.
// TruncatedSimplexEntropy is the probability simplex with per-coordinate
// floor exp(-truncation_L), paired with the l1 norm (the norm under which
// negative entropy is 1-strongly convex).
struct GeometrySpec {
  GeometryKind kind = GeometryKind::EuclideanBall;
  std::size_t dim = 0;
  double radius = 0.0;        // EuclideanBall
  double truncation_L = 0.0;  // TruncatedSimplexEntropy
  std::vector<BallSegment> segments;  // optional; empty means one segment

  static GeometrySpec euclidean_ball(std::size_t dim, double radius) {
    if (dim == 0) throw std::invalid_argument("geometry: dim must be positive");
    if (!(radius > 0.0)) throw std::invalid_argument("geometry: radius must be positive");
    GeometrySpec g;
    g.kind = GeometryKind::EuclideanBall;
    g.dim = dim;
    g.radius = radius;
    return g;
  }

  static GeometrySpec ball_product(const std::vector<BallSegment>& segs) {
    if (segs.empty()) throw std::invalid_argument("geometry: empty segment list");
    GeometrySpec g;
    g.kind = GeometryKind::EuclideanBall;
    g.segments = segs;
    g.dim = 0;
    g.radius = 0.0;
    for (const auto& s : segs) {
      if (s.dim == 0 || !(s.radius > 0.0))
        throw std::invalid_argument("geometry: bad segment");
      g.dim += s.dim;
      g.radius = std::max(g.radius, s.radius);
    }
    return g;
  }

  static GeometrySpec truncated_simplex(std::size_t dim, double truncation_L) {
    if (dim == 0) throw std::invalid_argument("geometry: dim must be positive");
    if (!(truncation_L > 0.0))
      throw std::invalid_argument("geometry: truncation_L must be positive");
    if (static_cast<double>(dim) * std::exp(-truncation_L) >= 1.0)
      throw std::invalid_argument(
          "geometry: infeasible truncated simplex (dim*exp(-L) >= 1)");
    GeometrySpec g;
    g.kind = GeometryKind::TruncatedSimplexEntropy;
    g.dim = dim;
    g.truncation_L = truncation_L;
    return g;
  }

  double floor_value() const { return std::exp(-truncation_L); }

  std::vector<BallSegment> effective_segments() const {
    if (!segments.empty()) return segments;
    return {BallSegment{dim, radius}};
  }
};

namespace geom_detail {

inline void check_dim(const BlockVector& v, const GeometrySpec& g, const char* op) {
  if (v.size() != g.dim)
    throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

inline double l2(const BlockVector& v, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

// Euclidean projection onto {w >= 0, sum(w) = mass} by the sort-based
// water-filling rule.
inline void project_simplex_mass(std::vector<double>& w, double mass) {
  const std::size_t d = w.size();
  std::vector<double> u(w);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) {
    cum += u[i];
    const double t = (cum - mass) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      k = i + 1;
      tau = t;
    }
  }
  (void)k;
  for (auto& wi : w) wi = std::max(0.0, wi - tau);
}

}  // namespace geom_detail

inline double norm(const BlockVector& v, const GeometrySpec& g) {
  geom_detail::check_dim(v, g, "norm");
  if (g.kind == GeometryKind::EuclideanBall) {
    return geom_detail::l2(v, 0, v.size());
  }
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

inline double dual_norm(const BlockVector& v, const GeometrySpec& g) {
  geom_detail::check_dim(v, g, "dual_norm");
  if (g.kind == GeometryKind::EuclideanBall) {
    return geom_detail::l2(v, 0, v.size());
  }
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

inline bool is_feasible(const BlockVector& v, const GeometrySpec& g,
                        double tol = kFeasTol) {
  if (v.size() != g.dim) return false;
  if (g.kind == GeometryKind::EuclideanBall) {
    std::size_t off = 0;
    for (const auto& seg : g.effective_segments()) {
      if (geom_detail::l2(v, off, off + seg.dim) > seg.radius + tol) return false;
      off += seg.dim;
    }
    return true;
  }
  const double floor = g.floor_value();
  double sum = 0.0;
  for (double x : v) {
    if (x < floor - tol) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

// Euclidean projection onto the feasible set. For the truncated simplex the
// substitution z = floor + w reduces to projection onto the simplex of mass
// 1 - dim*floor.
inline BlockVector project(const BlockVector& v, const GeometrySpec& g) {
  geom_detail::check_dim(v, g, "project");
  BlockVector out(v);
  if (g.kind == GeometryKind::EuclideanBall) {
    std::size_t off = 0;
    for (const auto& seg : g.effective_segments()) {
      const double nrm = geom_detail::l2(out, off, off + seg.dim);
      if (nrm > seg.radius) {
        const double scale = seg.radius / nrm;
        for (std::size_t i = off; i < off + seg.dim; ++i) out[i] *= scale;
      }
      off += seg.dim;
    }
    return out;
  }
  const double floor = g.floor_value();
  const double mass = 1.0 - static_cast<double>(g.dim) * floor;
  if (mass <= 0.0)
    throw std::invalid_argument("project: infeasible truncated simplex");
  std::vector<double> w(g.dim);
  for (std::size_t i = 0; i < g.dim; ++i) w[i] = v[i] - floor;
  geom_detail::project_simplex_mass(w, mass);
  for (std::size_t i = 0; i < g.dim; ++i) out[i] = floor + w[i];
  return out;
}

// One descent prox step against `grad` with step `eta`. Euclidean blocks take
// a projected gradient step. Simplex blocks take the entropic prox: the
// multiplicative update u_i = x_i exp(-eta grad_i) followed by the exact
// KL projection onto the truncated simplex, z_i = max(floor, t u_i) with t
// solving sum z = 1 (water-filling over the multiplicative scale). An
// additive repair of the multiplicative update has spurious fixed points
// whenever the floor binds; the scaling clamp keeps the constrained block
// optimum an exact fixed point. With no coordinate at the floor this is
// plain normalization.
inline BlockVector prox_step(const BlockVector& x, const BlockVector& grad,
                             double eta, const GeometrySpec& g) {
  geom_detail::check_dim(x, g, "prox_step");
  geom_detail::check_dim(grad, g, "prox_step");
  if (!(eta > 0.0)) throw std::invalid_argument("prox_step: eta must be positive");
  for (double gi : grad)
    if (!std::isfinite(gi))
      throw std::invalid_argument("prox_step: nonfinite gradient entry");

  if (g.kind == GeometryKind::EuclideanBall) {
    BlockVector z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - eta * grad[i];
    return project(z, g);
  }

  // Shift exponents so the largest is 0; the scaling absorbs it.
  double m = -std::numeric_limits<double>::infinity();
  for (double gi : grad) m = std::max(m, -eta * gi);
  BlockVector u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    u[i] = x[i] * std::exp(-eta * grad[i] - m);

  const double floor = g.floor_value();
  std::vector<double> sorted(u);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  // Largest k coordinates stay free: t = (1 - (d-k) floor) / sum of top k.
  const std::size_t d = u.size();
  double prefix = 0.0, t = 0.0;
  for (std::size_t k = 1; k <= d; ++k) {
    prefix += sorted[k - 1];
    const double tk = (1.0 - static_cast<double>(d - k) * floor) / prefix;
    const bool free_ok = tk * sorted[k - 1] >= floor;
    const bool clamp_ok = k == d || tk * sorted[k] <= floor;
    if (free_ok && clamp_ok) {
      t = tk;
      break;
    }
  }
  if (!(t > 0.0)) throw std::invalid_argument("prox_step: degenerate update");
  BlockVector z(d);
  for (std::size_t i = 0; i < d; ++i) z[i] = std::max(floor, t * u[i]);
  return z;
}

// Uniform-ish random feasible point; exact distribution is unimportant, the
// probes only need to cover the domain and be replayable.
inline BlockVector random_feasible(const GeometrySpec& g, CounterRng& rng) {
  BlockVector v(g.dim, 0.0);
  if (g.kind == GeometryKind::EuclideanBall) {
    std::size_t off = 0;
    for (const auto& seg : g.effective_segments()) {
      double nrm = 0.0;
      for (std::size_t i = off; i < off + seg.dim; ++i) {
        v[i] = rng.next_normal();
        nrm += v[i] * v[i];
      }
      nrm = std::sqrt(nrm);
      const double r =
          seg.radius * std::pow(rng.next_double_open(), 1.0 / static_cast<double>(seg.dim));
      if (nrm > 0.0)
        for (std::size_t i = off; i < off + seg.dim; ++i) v[i] *= r / nrm;
      off += seg.dim;
    }
    return v;
  }
  const double floor = g.floor_value();
  const double mass = 1.0 - static_cast<double>(g.dim) * floor;
  std::vector<double> e(g.dim);
  double s = 0.0;
  for (auto& ei : e) {
    ei = -std::log(rng.next_double_open());
    s += ei;
  }
  for (std::size_t i = 0; i < g.dim; ++i) v[i] = floor + mass * e[i] / s;
  return v;
}

inline double dot(const BlockVector& a, const BlockVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline BlockVector sub(const BlockVector& a, const BlockVector& b) {
  BlockVector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

inline double l2_norm(const BlockVector& v) {
  return geom_detail::l2(v, 0, v.size());
}

}  // namespace ssp
