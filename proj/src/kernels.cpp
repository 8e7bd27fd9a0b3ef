#include "minigt/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "minigt/errors.hpp"

namespace minigt::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void matvec_scalar(const double* A, std::size_t r, std::size_t c, const double* x, double* y) {
  for (std::size_t i = 0; i < r; ++i) y[i] = dot_scalar(A + i * c, x, c);
}

void matvec_t_scalar(const double* A, std::size_t r, std::size_t c, const double* x, double* y) {
  std::memset(y, 0, c * sizeof(double));
  for (std::size_t i = 0; i < r; ++i) axpy_scalar(x[i], A + i * c, y, c);
}

void ger_scalar(double alpha, const double* x, std::size_t r, const double* y, std::size_t c, double* A) {
  for (std::size_t i = 0; i < r; ++i) axpy_scalar(alpha * x[i], y, A + i * c, c);
}

double reduce_max_scalar(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double reduce_sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double relu_dot_scalar(const double* w, const double* h, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (h[i] > 0.0) s += w[i] * h[i];
  return s;
}

constexpr Ops kScalarOps = {
    dot_scalar,        axpy_scalar,       scal_scalar, matvec_scalar, matvec_t_scalar,
    ger_scalar,        reduce_max_scalar, reduce_sum_scalar, relu_dot_scalar,
};

std::atomic<const Ops*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::Scalar};

Backend default_backend() {
  if (const char* env = std::getenv("MINIGT_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!avx2_available()) throw ConfigError("MINIGT_KERNELS=avx2 but the CPU lacks AVX2");
      return Backend::Avx2;
    }
  }
  return avx2_available() ? Backend::Avx2 : Backend::Scalar;
}

void ensure_selected() {
  if (g_active.load(std::memory_order_acquire) == nullptr) select_backend(default_backend());
}

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

#if !defined(MINIGT_HAVE_AVX2_TU)
const Ops& avx2_ops() { throw Error("AVX2 kernels not built on this platform"); }
bool avx2_available() { return false; }
#endif

void select_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_available())
    throw ConfigError("AVX2 backend requested but not available");
  g_backend.store(b, std::memory_order_relaxed);
  g_active.store(b == Backend::Avx2 ? &avx2_ops() : &kScalarOps, std::memory_order_release);
}

Backend active_backend() {
  ensure_selected();
  return g_backend.load(std::memory_order_relaxed);
}

const char* backend_name() {
  return active_backend() == Backend::Avx2 ? "avx2" : "scalar";
}

const Ops& ops() {
  ensure_selected();
  return *g_active.load(std::memory_order_acquire);
}

}  // namespace minigt::kernels
