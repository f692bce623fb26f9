#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/problems.hpp"

namespace ssp {

// Regularized two-player stochastic matrix game on truncated simplices:
//   per-atom loss  x^T A_k y + lambda_x * sum_i x_i log x_i
//                            - lambda_y * sum_j y_j log y_j,
// with |A_k(i,j)| <= 1.
struct MatrixGameSpec {
  std::size_t dim = 0;
  double lambda_x = 0.0;
  double lambda_y = 0.0;
  double truncation_L = 0.0;
  std::vector<std::vector<double>> matrices;  // row-major dim*dim each
  std::vector<double> probs;

  void validate() const {
    if (dim == 0) throw std::invalid_argument("matrix_game: dim must be positive");
    if (lambda_x < 0.0 || lambda_y < 0.0)
      throw std::invalid_argument("matrix_game: negative regularizer weight");
    if (matrices.empty() || matrices.size() != probs.size())
      throw std::invalid_argument("matrix_game: atoms/probs mismatch");
    for (const auto& a : matrices) {
      if (a.size() != dim * dim)
        throw std::invalid_argument("matrix_game: bad matrix size");
      for (double v : a)
        if (std::abs(v) > 1.0 + 1e-15)
          throw std::invalid_argument("matrix_game: |A(i,j)| must be <= 1");
    }
  }
};

// Default atom family: a base matrix plus equiprobable bounded perturbations,
// entries clipped to [-1, 1] so the boundedness assumption holds by
// construction.
inline MatrixGameSpec make_matrix_game(std::size_t dim, double lambda_x,
                                       double lambda_y, double truncation_L,
                                       std::size_t atom_count,
                                       std::uint64_t seed) {
  if (atom_count == 0) throw std::invalid_argument("matrix_game: need atoms");
  MatrixGameSpec spec;
  spec.dim = dim;
  spec.lambda_x = lambda_x;
  spec.lambda_y = lambda_y;
  spec.truncation_L = truncation_L;
  CounterRng rng(derive_seed(seed, 0x6d67u));
  std::vector<double> base(dim * dim);
  for (auto& v : base) v = rng.next_uniform(-0.5, 0.5);
  for (std::size_t k = 0; k < atom_count; ++k) {
    std::vector<double> a(dim * dim);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double v = base[i] + rng.next_uniform(-0.5, 0.5);
      a[i] = std::clamp(v, -1.0, 1.0);
    }
    spec.matrices.push_back(std::move(a));
    spec.probs.push_back(1.0 / static_cast<double>(atom_count));
  }
  // Exact unit mass regardless of atom_count rounding.
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < atom_count; ++k) s += spec.probs[k];
  spec.probs.back() = 1.0 - s;
  return spec;
}

// Constants per the instance analysis: sigma = lambda (entropy is 1-strongly
// convex in l1 on the simplex), L = lambda*(L_trunc+1) + 1 (entropy gradient
// bounded by L_trunc+1 on the truncated simplex, bilinear part by 1), and
// L_xy = 1 from |(A dy)_i| <= ||dy||_1.
inline TheoreticalConstants theoretical_constants(const MatrixGameSpec& spec) {
  const double lx = spec.lambda_x * (spec.truncation_L + 1.0) + 1.0;
  const double ly = spec.lambda_y * (spec.truncation_L + 1.0) + 1.0;
  return TheoreticalConstants::make(spec.lambda_x, spec.lambda_y, lx, ly, 1.0);
}

class MatrixGameInstance final : public ProblemInstance {
 public:
  explicit MatrixGameInstance(MatrixGameSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    set_geometry(GeometrySpec::truncated_simplex(spec_.dim, spec_.truncation_L),
                 GeometrySpec::truncated_simplex(spec_.dim, spec_.truncation_L));
    set_probs(spec_.probs);
  }

  const MatrixGameSpec& spec() const { return spec_; }

  double loss(const BlockVector& x, const BlockVector& y,
              std::size_t atom) const override {
    check_atom(atom);
    check_point(x, "x");
    check_point(y, "y");
    const auto& a = spec_.matrices[atom];
    const std::size_t d = spec_.dim;
    double bilinear = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < d; ++j) row += a[i * d + j] * y[j];
      bilinear += x[i] * row;
    }
    return bilinear + spec_.lambda_x * neg_entropy(x) - spec_.lambda_y * neg_entropy(y);
  }

  BlockVector grad_x(const BlockVector& x, const BlockVector& y,
                     std::size_t atom) const override {
    check_atom(atom);
    check_point(x, "x");
    const auto& a = spec_.matrices[atom];
    const std::size_t d = spec_.dim;
    BlockVector g(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < d; ++j) row += a[i * d + j] * y[j];
      g[i] = row + spec_.lambda_x * (1.0 + std::log(x[i]));
    }
    return g;
  }

  BlockVector grad_y(const BlockVector& x, const BlockVector& y,
                     std::size_t atom) const override {
    check_atom(atom);
    check_point(y, "y");
    const auto& a = spec_.matrices[atom];
    const std::size_t d = spec_.dim;
    BlockVector g(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < d; ++i) col += a[i * d + j] * x[i];
      g[j] = col - spec_.lambda_y * (1.0 + std::log(y[j]));
    }
    return g;
  }

  TheoreticalConstants constants() const override {
    return theoretical_constants(spec_);
  }

  // Entropy curvature and coupling are atom-independent, so mixture weights
  // do not change the moduli. Smoothness: the entropy Hessian is
  // diag(lambda/x_i) <= lambda*e^L, the coupling contributes 1.
  MixtureInfo mixture_info(const std::vector<double>&) const override {
    MixtureInfo m;
    m.sigma_x = spec_.lambda_x;
    m.sigma_y = spec_.lambda_y;
    m.field_smoothness =
        std::max(spec_.lambda_x, spec_.lambda_y) * std::exp(spec_.truncation_L) + 1.0;
    return m;
  }

  std::string name() const override { return "matrix_game"; }

 private:
  static double neg_entropy(const BlockVector& v) {
    double s = 0.0;
    for (double vi : v) s += vi * std::log(vi);
    return s;
  }

  // Entropy needs strictly positive coordinates; feasibility proper is
  // enforced at solver boundaries so finite-difference probes stay legal.
  static void check_point(const BlockVector& v, const char* which) {
    for (double vi : v)
      if (!(vi > 0.0))
        throw std::invalid_argument(std::string("matrix_game: nonpositive ") +
                                    which + " coordinate in entropic block");
  }

  MatrixGameSpec spec_;
};

}  // namespace ssp
