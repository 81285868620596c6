#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsc/rng.hpp"

// Plain dense helpers for the small systems this library works with.
// Matrices are row-major throughout the codebase, including serialized form.

namespace nsc {

using Vec = std::vector<double>;

struct Mat {
  std::size_t rows = 0, cols = 0;
  Vec a;  // row-major, rows*cols

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return a[i * cols + j];
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) {
  return std::sqrt(dot(x, x));
}

inline Vec matvec(const Mat& m, std::span<const double> x) {
  if (x.size() != m.cols) throw std::invalid_argument("matvec: shape mismatch");
  Vec y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) y[i] += m(i, j) * x[j];
  return y;
}

inline Vec matvec_t(const Mat& m, std::span<const double> x) {
  if (x.size() != m.rows)
    throw std::invalid_argument("matvec_t: shape mismatch");
  Vec y(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += m(i, j) * x[i];
  return y;
}

// Largest singular value by power iteration on A^T A.  Deterministic start,
// relative tolerance on successive estimates; failure to settle within the
// iteration cap is an estimation error, not a silent result.
inline double spectral_norm(const Mat& m, double tol = 1e-8,
                            int max_iter = 10000) {
  if (m.rows == 0 || m.cols == 0) return 0.0;
  RngStream rng(0x5eedull);
  Vec v(m.cols);
  for (auto& vi : v) vi = rng.next_uniform(-1.0, 1.0);
  double nv = norm2(v);
  if (nv == 0.0) v[0] = 1.0, nv = 1.0;
  for (auto& vi : v) vi /= nv;

  double sigma = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec av = matvec(m, v);
    double s = norm2(av);
    if (s == 0.0) return 0.0;  // v in the null space and A^T A v = 0
    Vec w = matvec_t(m, av);
    double nw = norm2(w);
    if (nw == 0.0) return s;
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = w[j] / nw;
    if (it > 0 && std::abs(s - sigma) <= tol * std::max(1.0, s)) return s;
    sigma = s;
  }
  throw std::runtime_error("spectral_norm: power iteration did not converge");
}

}  // namespace nsc
