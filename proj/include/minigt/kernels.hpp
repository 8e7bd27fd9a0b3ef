#pragma once

#include <cstddef>

// Data-parallel inner loops used by the model and gradient code. Every kernel
// has a scalar reference implementation and, on x86-64, an AVX2 variant. The
// backend is picked once at runtime (CPU detection, overridable via the
// MINIGT_KERNELS environment variable or select_backend()); scalar/AVX2
// equivalence is covered by tests.
namespace minigt::kernels {

enum class Backend { Scalar, Avx2 };

struct Ops {
  // sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scal)(double alpha, double* x, std::size_t n);
  // y = A x, A row-major r x c
  void (*matvec)(const double* A, std::size_t r, std::size_t c, const double* x, double* y);
  // y = A^T x, A row-major r x c, y has length c
  void (*matvec_t)(const double* A, std::size_t r, std::size_t c, const double* x, double* y);
  // A += alpha * x y^T, A row-major r x c
  void (*ger)(double alpha, const double* x, std::size_t r, const double* y, std::size_t c, double* A);
  double (*reduce_max)(const double* x, std::size_t n);
  double (*reduce_sum)(const double* x, std::size_t n);
  // sum_i w[i] * max(h[i], 0)
  double (*relu_dot)(const double* w, const double* h, std::size_t n);
};

const Ops& scalar_ops();
const Ops& avx2_ops();  // only valid when avx2_available()

bool avx2_available();

// Active backend. Defaults to AVX2 when the CPU supports it, unless the
// MINIGT_KERNELS environment variable ("scalar" or "avx2") says otherwise.
void select_backend(Backend b);
Backend active_backend();
const char* backend_name();
const Ops& ops();

}
