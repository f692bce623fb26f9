#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/geometry.hpp"
#include "ssp/rng.hpp"

namespace ssp {

// Constants of the assumption set for one instance: strong convexity /
// concavity moduli, per-block Lipschitz constants of the loss, and the
// cross-block gradient Lipschitz constant. assumption4_holds records
// L_xy <= min(sigma_x, sigma_y).
//
// Values are stored as computed; instances that deliberately violate the
// assumptions (e.g. regularizers switched off for verifier tests) are
// representable, and the operations that need strict positivity check it
// themselves.
struct TheoreticalConstants {
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double L_x = 0.0;
  double L_y = 0.0;
  double L_xy = 0.0;
  bool assumption4_holds = false;

  // Strict inequality: at equality the localization constant C is 0 and the
  // downstream machinery degenerates.
  static TheoreticalConstants make(double sx, double sy, double lx, double ly,
                                   double lxy) {
    TheoreticalConstants c;
    c.sigma_x = sx;
    c.sigma_y = sy;
    c.L_x = lx;
    c.L_y = ly;
    c.L_xy = lxy;
    c.assumption4_holds = lxy < std::min(sx, sy);
    return c;
  }
};

// Curvature and smoothness of one finite mixture of atoms (the population
// distribution or an empirical reweighting). sigma_* are strong
// convexity/concavity moduli of the mixture objective in the block norms;
// field_smoothness bounds the Lipschitz constant of the gradient field and
// drives the solver's automatic step size.
struct MixtureInfo {
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double field_smoothness = 0.0;
};

// A stochastic saddle-point problem with finite support: per-atom loss and
// gradients over feasible (x, y), atom probabilities, block geometries and
// the instance's theoretical constants. Finite support keeps the population
// expectation exact. Instances are immutable after construction.
class ProblemInstance {
 public:
  virtual ~ProblemInstance() = default;

  const GeometrySpec& x_geometry() const { return x_geom_; }
  const GeometrySpec& y_geometry() const { return y_geom_; }
  const std::vector<double>& atom_probs() const { return probs_; }
  std::size_t atom_count() const { return probs_.size(); }

  virtual double loss(const BlockVector& x, const BlockVector& y,
                      std::size_t atom) const = 0;
  virtual BlockVector grad_x(const BlockVector& x, const BlockVector& y,
                             std::size_t atom) const = 0;
  virtual BlockVector grad_y(const BlockVector& x, const BlockVector& y,
                             std::size_t atom) const = 0;

  virtual TheoreticalConstants constants() const = 0;
  virtual MixtureInfo mixture_info(const std::vector<double>& weights) const = 0;
  virtual std::string name() const = 0;

  // True when the strong-convexity constants describe the mixture objective
  // rather than every single atom (per-atom curvature can be degenerate even
  // though every objective actually optimized is strongly convex-concave).
  virtual bool sigma_scope_population() const { return false; }

 protected:
  void set_geometry(GeometrySpec xg, GeometrySpec yg) {
    x_geom_ = std::move(xg);
    y_geom_ = std::move(yg);
  }

  void set_probs(std::vector<double> p) {
    if (p.empty()) throw std::invalid_argument("instance: empty support");
    double sum = 0.0;
    for (double pi : p) {
      if (pi < 0.0) throw std::invalid_argument("instance: negative probability");
      sum += pi;
    }
    if (std::abs(sum - 1.0) > kFeasTol)
      throw std::invalid_argument("instance: probabilities must sum to 1");
    probs_ = std::move(p);
  }

  void check_atom(std::size_t atom) const {
    if (atom >= probs_.size()) throw std::invalid_argument("instance: unknown atom");
  }

 private:
  GeometrySpec x_geom_;
  GeometrySpec y_geom_;
  std::vector<double> probs_;
};

// n i.i.d. draws from the instance support, stored as atom indices plus the
// induced empirical weights. Regeneration from (instance, n, seed) is
// bit-identical.
struct SampleSet {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> weights;  // per-atom multiplicity / n
};

inline SampleSet sample(const ProblemInstance& instance, std::size_t n,
                        std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample: n must be >= 1");
  const auto& probs = instance.atom_probs();
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    cdf[k] = acc;
  }
  cdf.back() = 1.0;

  SampleSet s;
  s.n = n;
  s.seed = seed;
  s.indices.resize(n);
  s.weights.assign(probs.size(), 0.0);
  CounterRng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.next_double();
    std::uint32_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    s.indices[i] = k;
    s.weights[k] += 1.0;
  }
  for (auto& w : s.weights) w /= static_cast<double>(n);
  return s;
}

// A concrete min-max objective: a weighted finite mixture of instance atoms.
// weights = atom probabilities gives the population objective, empirical
// frequencies give the sample-average objective. All evaluations are
// deterministic weighted sums in fixed atom order.
class SaddleObjective {
 public:
  SaddleObjective(const ProblemInstance& inst, std::vector<double> weights)
      : inst_(&inst), weights_(std::move(weights)), info_(inst.mixture_info(weights_)) {
    if (weights_.size() != inst.atom_count())
      throw std::invalid_argument("objective: weight/support size mismatch");
  }

  const ProblemInstance& instance() const { return *inst_; }
  const GeometrySpec& x_geometry() const { return inst_->x_geometry(); }
  const GeometrySpec& y_geometry() const { return inst_->y_geometry(); }
  const std::vector<double>& weights() const { return weights_; }
  const MixtureInfo& info() const { return info_; }

  double loss(const BlockVector& x, const BlockVector& y) const {
    double s = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k)
      if (weights_[k] != 0.0) s += weights_[k] * inst_->loss(x, y, k);
    return s;
  }

  BlockVector grad_x(const BlockVector& x, const BlockVector& y) const {
    BlockVector g(x.size(), 0.0);
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      if (weights_[k] == 0.0) continue;
      const BlockVector gk = inst_->grad_x(x, y, k);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += weights_[k] * gk[i];
    }
    return g;
  }

  BlockVector grad_y(const BlockVector& x, const BlockVector& y) const {
    BlockVector g(y.size(), 0.0);
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      if (weights_[k] == 0.0) continue;
      const BlockVector gk = inst_->grad_y(x, y, k);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += weights_[k] * gk[i];
    }
    return g;
  }

 private:
  const ProblemInstance* inst_;
  std::vector<double> weights_;
  MixtureInfo info_;
};

inline SaddleObjective population_objective(const ProblemInstance& inst) {
  return SaddleObjective(inst, inst.atom_probs());
}

inline SaddleObjective empirical_objective(const ProblemInstance& inst,
                                           const SampleSet& s) {
  return SaddleObjective(inst, s.weights);
}

inline double population_loss(const ProblemInstance& inst, const BlockVector& x,
                              const BlockVector& y) {
  double s = 0.0;
  const auto& p = inst.atom_probs();
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] != 0.0) s += p[k] * inst.loss(x, y, k);
  return s;
}

inline std::pair<BlockVector, BlockVector> population_grads(
    const ProblemInstance& inst, const BlockVector& x, const BlockVector& y) {
  const SaddleObjective obj = population_objective(inst);
  return {obj.grad_x(x, y), obj.grad_y(x, y)};
}

}  // namespace ssp
