#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ssp {

// Dense symmetric matrix, row-major, for the small (<= ~32 dim) Hessians
// that show up in instance curvature bounds.
struct SymMatrix {
  std::size_t n = 0;
  std::vector<double> a;  // n*n

  explicit SymMatrix(std::size_t dim) : n(dim), a(dim * dim, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }

  void add_outer(const std::vector<double>& v, double w) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) at(i, j) += w * v[i] * v[j];
  }
};

// Eigenvalue range of a symmetric matrix by cyclic Jacobi rotations.
// Plenty for the tiny matrices used here; returns {lambda_min, lambda_max}.
inline std::pair<double, double> sym_eig_range(SymMatrix m) {
  const std::size_t n = m.n;
  if (n == 0) throw std::invalid_argument("sym_eig_range: empty matrix");
  if (n == 1) return {m.at(0, 0), m.at(0, 0)};
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m.at(i, j) * m.at(i, j);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m.at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double app = m.at(p, p), aqq = m.at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = m.at(k, p), akq = m.at(k, q);
          m.at(k, p) = c * akp - s * akq;
          m.at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = m.at(p, k), aqk = m.at(q, k);
          m.at(p, k) = c * apk - s * aqk;
          m.at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  double lo = m.at(0, 0), hi = m.at(0, 0);
  for (std::size_t i = 1; i < n; ++i) {
    lo = std::min(lo, m.at(i, i));
    hi = std::max(hi, m.at(i, i));
  }
  return {lo, hi};
}

}  // namespace ssp
