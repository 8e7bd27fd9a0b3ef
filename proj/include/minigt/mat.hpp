#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "minigt/errors.hpp"
#include "minigt/kernels.hpp"
#include "minigt/rng.hpp"

namespace minigt {

// Dense row-major matrix of doubles. Small and value-semantic; all heavy
// arithmetic goes through the kernels module.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }
  std::span<const double> row_span(int i) const { return {row(i), static_cast<std::size_t>(cols)}; }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  void fill(double v) { std::fill(a.begin(), a.end(), v); }

  // Reuses storage; contents are unspecified afterwards.
  void reshape(int r, int c) {
    rows = r;
    cols = c;
    a.resize(static_cast<std::size_t>(r) * c);
  }

  static Mat identity(int r, int c) {
    Mat m(r, c);
    const int k = r < c ? r : c;
    for (int i = 0; i < k; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat gaussian(int r, int c, Rng& rng, double stddev = 1.0) {
    Mat m(r, c);
    for (double& v : m.a) v = stddev * rng.normal();
    return m;
  }
};

inline double vec_norm(std::span<const double> v) {
  return std::sqrt(kernels::ops().dot(v.data(), v.data(), v.size()));
}

// Orthonormalizes the rows of m in place (modified Gram-Schmidt, two passes).
// Requires rows <= cols and full row rank.
inline void orthonormalize_rows(Mat& m) {
  if (m.rows > m.cols) throw ArgumentError("orthonormalize_rows: more rows than columns");
  const auto& k = kernels::ops();
  for (int i = 0; i < m.rows; ++i) {
    double* ri = m.row(i);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < i; ++j) {
        const double* rj = m.row(j);
        const double p = k.dot(rj, ri, m.cols);
        k.axpy(-p, rj, ri, m.cols);
      }
    }
    const double nrm = std::sqrt(k.dot(ri, ri, m.cols));
    if (!(nrm > 1e-12)) throw NumericalError("Gram-Schmidt hit a rank-deficient row");
    k.scal(1.0 / nrm, ri, m.cols);
  }
}

}
