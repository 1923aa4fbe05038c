// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include <immintrin.h>

#include <cmath>

#include "recon/kernels.hpp"

namespace recon::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq(const double* a, std::size_t n) { return dot(a, a, n); }

double sum_abs(const double* a, std::size_t n) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_and_pd(_mm256_loadu_pd(a + i), mask));
  double s = hsum(acc);
  for (; i < n; ++i) s += std::abs(a[i]);
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d by = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), by));
  }
  for (; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void scale(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void soft_threshold(double* x, double t, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d vt = _mm256_set1_pd(t);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d mag = _mm256_max_pd(_mm256_sub_pd(_mm256_andnot_pd(sign, v), vt), zero);
    _mm256_storeu_pd(x + i, _mm256_or_pd(mag, _mm256_and_pd(v, sign)));
  }
  for (; i < n; ++i) {
    const double mag = std::abs(x[i]) - t;
    x[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
}

void fir4(const double* in, const double* w, double* out, std::size_t n) {
  const __m256d w0 = _mm256_set1_pd(w[0]);
  const __m256d w1 = _mm256_set1_pd(w[1]);
  const __m256d w2 = _mm256_set1_pd(w[2]);
  const __m256d w3 = _mm256_set1_pd(w[3]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_mul_pd(w0, _mm256_loadu_pd(in + i));
    acc = _mm256_fmadd_pd(w1, _mm256_loadu_pd(in + i + 1), acc);
    acc = _mm256_fmadd_pd(w2, _mm256_loadu_pd(in + i + 2), acc);
    acc = _mm256_fmadd_pd(w3, _mm256_loadu_pd(in + i + 3), acc);
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i)
    out[i] = w[0] * in[i] + w[1] * in[i + 1] + w[2] * in[i + 2] + w[3] * in[i + 3];
}

// Rows [i, i + R) of C, columns [j, j + 8).
template <int R>
inline void gemm_tile8(const double* a, const double* b, double* c, std::size_t i, std::size_t j, std::size_t k,
                       std::size_t cols) {
  __m256d acc0[R];
  __m256d acc1[R];
  for (int r = 0; r < R; ++r) acc0[r] = acc1[r] = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * cols + j);
    const __m256d b1 = _mm256_loadu_pd(b + p * cols + j + 4);
    for (int r = 0; r < R; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + (i + r) * k + p);
      acc0[r] = _mm256_fmadd_pd(av, b0, acc0[r]);
      acc1[r] = _mm256_fmadd_pd(av, b1, acc1[r]);
    }
  }
  for (int r = 0; r < R; ++r) {
    _mm256_storeu_pd(c + (i + r) * cols + j, acc0[r]);
    _mm256_storeu_pd(c + (i + r) * cols + j + 4, acc1[r]);
  }
}

template <int R>
inline void gemm_rows(const double* a, const double* b, double* c, std::size_t i, std::size_t k, std::size_t cols) {
  std::size_t j = 0;
  for (; j + 8 <= cols; j += 8) gemm_tile8<R>(a, b, c, i, j, k, cols);
  for (; j + 4 <= cols; j += 4) {
    __m256d acc[R];
    for (int r = 0; r < R; ++r) acc[r] = _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d bv = _mm256_loadu_pd(b + p * cols + j);
      for (int r = 0; r < R; ++r) acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + (i + r) * k + p), bv, acc[r]);
    }
    for (int r = 0; r < R; ++r) _mm256_storeu_pd(c + (i + r) * cols + j, acc[r]);
  }
  for (; j < cols; ++j) {
    for (int r = 0; r < R; ++r) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[(i + r) * k + p] * b[p * cols + j];
      c[(i + r) * cols + j] = s;
    }
  }
}

void gemm(const double* a, const double* b, double* c, std::size_t r, std::size_t k, std::size_t cols) {
  std::size_t i = 0;
  for (; i + 4 <= r; i += 4) gemm_rows<4>(a, b, c, i, k, cols);
  for (; i < r; ++i) gemm_rows<1>(a, b, c, i, k, cols);
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{dot, sum_sq, sum_abs, axpy, axpby, scale, soft_threshold, fir4, gemm};
  return t;
}

}  // namespace recon::kernels::avx2
