#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/linalg.hpp"
#include "ssp/problems.hpp"

namespace ssp {

// Linear AUC maximization in saddle form. Min block z = (w, a, b) over
// B_r x [-box, box]^2, max block alpha over [-box, box]. Per-atom loss with
// s = w^T x, y in {+1, -1}:
//   (1-p)(s-a)^2 1[y=1] + p(s-b)^2 1[y=-1]
//   + 2(1+alpha) s (p 1[y=-1] - (1-p) 1[y=1]) - p(1-p) alpha^2 + beta ||w||^2.
// Sign conventions follow the displayed formula verbatim.
struct AucSpec {
  std::size_t feature_dim = 0;
  double p = 0.5;
  double beta = 1.0;
  double radius = 1.0;
  double box_bound = 1.0;  // domain bound for a, b, alpha
  std::vector<std::vector<double>> features;
  std::vector<int> labels;  // +1 / -1
  std::vector<double> probs;

  void validate() const {
    if (feature_dim == 0) throw std::invalid_argument("auc: feature_dim must be positive");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("auc: p must be in (0,1)");
    if (!(beta > 0.0)) throw std::invalid_argument("auc: beta must be positive");
    if (!(radius > 0.0 && radius <= 1.0))
      throw std::invalid_argument("auc: radius must be in (0,1]");
    if (!(box_bound > 0.0)) throw std::invalid_argument("auc: box_bound must be positive");
    if (features.empty() || features.size() != labels.size() ||
        features.size() != probs.size())
      throw std::invalid_argument("auc: atoms/labels/probs mismatch");
    double mass_pos = 0.0;
    for (std::size_t k = 0; k < features.size(); ++k) {
      if (features[k].size() != feature_dim)
        throw std::invalid_argument("auc: bad feature size");
      double nrm = 0.0;
      for (double v : features[k]) nrm += v * v;
      if (std::sqrt(nrm) > radius + 1e-12)
        throw std::invalid_argument("auc: feature outside the radius-r ball");
      if (labels[k] != 1 && labels[k] != -1)
        throw std::invalid_argument("auc: labels must be +1/-1");
      if (labels[k] == 1) mass_pos += probs[k];
    }
    if (std::abs(mass_pos - p) > kFeasTol)
      throw std::invalid_argument("auc: label-1 mass must equal p");
  }
};

// Synthetic dataset: atom_count/2 positive and negative atoms with masses
// p and 1-p split evenly, features drawn inside the radius-r ball.
inline AucSpec make_auc_dataset(std::size_t feature_dim, std::size_t atom_count,
                                double p, double beta, double radius,
                                std::uint64_t seed) {
  if (atom_count < 2 || atom_count % 2 != 0)
    throw std::invalid_argument("auc: atom_count must be even and >= 2");
  AucSpec spec;
  spec.feature_dim = feature_dim;
  spec.p = p;
  spec.beta = beta;
  spec.radius = radius;
  spec.box_bound = radius;
  CounterRng rng(derive_seed(seed, 0x617563u));
  const GeometrySpec ball = GeometrySpec::euclidean_ball(feature_dim, radius);
  const std::size_t half = atom_count / 2;
  for (std::size_t k = 0; k < atom_count; ++k) {
    spec.features.push_back(random_feasible(ball, rng));
    const bool pos = k < half;
    spec.labels.push_back(pos ? 1 : -1);
    spec.probs.push_back(pos ? p / static_cast<double>(half)
                             : (1.0 - p) / static_cast<double>(half));
  }
  return spec;
}

class AucInstance final : public ProblemInstance {
 public:
  explicit AucInstance(AucSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const double r = spec_.radius, box = spec_.box_bound;
    set_geometry(GeometrySpec::ball_product({BallSegment{spec_.feature_dim, r},
                                             BallSegment{1, box},
                                             BallSegment{1, box}}),
                 GeometrySpec::euclidean_ball(1, box));
    set_probs(spec_.probs);
  }

  const AucSpec& spec() const { return spec_; }

  double loss(const BlockVector& z, const BlockVector& alpha,
              std::size_t atom) const override {
    check_atom(atom);
    check_shapes(z, alpha);
    const double s = score(z, atom);
    const double a = z[spec_.feature_dim], b = z[spec_.feature_dim + 1];
    const double al = alpha[0];
    const double p = spec_.p;
    const bool pos = spec_.labels[atom] == 1;
    const double kappa = pos ? -(1.0 - p) : p;
    double v = 2.0 * (1.0 + al) * s * kappa - p * (1.0 - p) * al * al;
    if (pos)
      v += (1.0 - p) * (s - a) * (s - a);
    else
      v += p * (s - b) * (s - b);
    double wsq = 0.0;
    for (std::size_t i = 0; i < spec_.feature_dim; ++i) wsq += z[i] * z[i];
    return v + spec_.beta * wsq;
  }

  BlockVector grad_x(const BlockVector& z, const BlockVector& alpha,
                     std::size_t atom) const override {
    check_atom(atom);
    check_shapes(z, alpha);
    const std::size_t d = spec_.feature_dim;
    const double s = score(z, atom);
    const double a = z[d], b = z[d + 1];
    const double al = alpha[0];
    const double p = spec_.p;
    const bool pos = spec_.labels[atom] == 1;
    const double kappa = pos ? -(1.0 - p) : p;
    const auto& x = spec_.features[atom];
    BlockVector g(d + 2, 0.0);
    const double resid = pos ? 2.0 * (1.0 - p) * (s - a) : 2.0 * p * (s - b);
    for (std::size_t i = 0; i < d; ++i)
      g[i] = resid * x[i] + 2.0 * (1.0 + al) * kappa * x[i] + 2.0 * spec_.beta * z[i];
    if (pos)
      g[d] = -2.0 * (1.0 - p) * (s - a);
    else
      g[d + 1] = -2.0 * p * (s - b);
    return g;
  }

  BlockVector grad_y(const BlockVector& z, const BlockVector& alpha,
                     std::size_t atom) const override {
    check_atom(atom);
    check_shapes(z, alpha);
    const double s = score(z, atom);
    const double p = spec_.p;
    const bool pos = spec_.labels[atom] == 1;
    const double kappa = pos ? -(1.0 - p) : p;
    return {2.0 * s * kappa - 2.0 * p * (1.0 - p) * alpha[0]};
  }

  // Per-sample strong convexity of the min block fails for this loss (each
  // atom leaves either a or b flat), so sigma_x is the exact curvature of the
  // *population* mixture: lambda_min of sum_k p_k H_k with
  //   H_k = 2 c_k v_k v_k^T + 2 beta diag(1_d, 0, 0),
  //   y=+1: c_k = 1-p, v_k = (x_k, -1, 0); y=-1: c_k = p, v_k = (x_k, 0, -1).
  // sigma_y = 2 p (1-p) holds per sample. Lipschitz bounds are symbolic sups
  // over the compact domain, with s = w^T x in [-r^2, r^2]:
  //   |d/da| <= 2(1-p)(r^2+box),  |d/db| <= 2p(r^2+box),
  //   ||d/dw|| <= 2 c1 (r^2+box) r + 2 (1+box) c1 r + 2 beta r,
  //   |d/dalpha| <= 2 c1 r^2 + 2 p (1-p) box,  c1 = max(p, 1-p),
  // and the cross coupling d^2F/dw dalpha = 2 kappa x gives L_xy = 2 c1 r.
  TheoreticalConstants constants() const override {
    const double r = spec_.radius, box = spec_.box_bound, p = spec_.p;
    const double c1 = std::max(p, 1.0 - p);
    const double dw = 2.0 * c1 * (r * r + box) * r + 2.0 * (1.0 + box) * c1 * r +
                      2.0 * spec_.beta * r;
    const double da = 2.0 * (1.0 - p) * (r * r + box);
    const double db = 2.0 * p * (r * r + box);
    const double lx = std::sqrt(dw * dw + da * da + db * db);
    const double ly = 2.0 * c1 * r * r + 2.0 * p * (1.0 - p) * box;
    const double lxy = 2.0 * c1 * r;
    const auto range = sym_eig_range(min_block_hessian(atom_probs()));
    return TheoreticalConstants::make(std::max(range.first, 0.0),
                                      2.0 * p * (1.0 - p), lx, ly, lxy);
  }

  MixtureInfo mixture_info(const std::vector<double>& weights) const override {
    MixtureInfo m;
    const auto range = sym_eig_range(min_block_hessian(weights));
    // Floor keeps stopping thresholds meaningful if a label is absent from
    // the mixture (then some scalar coordinate is exactly flat).
    m.sigma_x = std::max(range.first, 1e-12);
    m.sigma_y = 2.0 * spec_.p * (1.0 - spec_.p);
    const double lxy = 2.0 * std::max(spec_.p, 1.0 - spec_.p) * spec_.radius;
    m.field_smoothness = std::max(range.second, 0.0) + lxy + m.sigma_y;
    return m;
  }

  std::string name() const override { return "auc"; }

  bool sigma_scope_population() const override { return true; }

  SymMatrix min_block_hessian(const std::vector<double>& weights) const {
    const std::size_t d = spec_.feature_dim;
    SymMatrix h(d + 2);
    for (std::size_t i = 0; i < d; ++i) h.at(i, i) = 2.0 * spec_.beta;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k] == 0.0) continue;
      const bool pos = spec_.labels[k] == 1;
      const double c = pos ? (1.0 - spec_.p) : spec_.p;
      std::vector<double> v(d + 2, 0.0);
      for (std::size_t i = 0; i < d; ++i) v[i] = spec_.features[k][i];
      v[pos ? d : d + 1] = -1.0;
      h.add_outer(v, 2.0 * c * weights[k]);
    }
    return h;
  }

 private:
  double score(const BlockVector& z, std::size_t atom) const {
    const auto& x = spec_.features[atom];
    double s = 0.0;
    for (std::size_t i = 0; i < spec_.feature_dim; ++i) s += z[i] * x[i];
    return s;
  }

  void check_shapes(const BlockVector& z, const BlockVector& alpha) const {
    if (z.size() != spec_.feature_dim + 2 || alpha.size() != 1)
      throw std::invalid_argument("auc: bad block shapes");
  }

  AucSpec spec_;
};

}  // namespace ssp
