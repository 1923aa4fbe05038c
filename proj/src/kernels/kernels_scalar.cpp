#include <cmath>

#include "recon/kernels.hpp"

namespace recon::kernels::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq(const double* a, std::size_t n) { return dot(a, a, n); }

double sum_abs(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i]);
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void scale(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void soft_threshold(double* x, double t, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::abs(x[i]) - t;
    x[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
}

void fir4(const double* in, const double* w, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = w[0] * in[i] + w[1] * in[i + 1] + w[2] * in[i + 2] + w[3] * in[i + 3];
}

void gemm(const double* a, const double* b, double* c, std::size_t r, std::size_t k, std::size_t cols) {
  for (std::size_t i = 0; i < r; ++i) {
    double* ci = c + i * cols;
    for (std::size_t j = 0; j < cols; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * cols, ci, cols);
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{dot, sum_sq, sum_abs, axpy, axpby, scale, soft_threshold, fir4, gemm};
  return t;
}

}  // namespace recon::kernels::scalar
