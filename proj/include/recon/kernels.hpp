#pragma once

// Data-parallel inner loops used by the grid operators and the control solver.
// Each kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is picked once at startup from CPUID and can
// be overridden with RECON_SIMD=scalar|avx2 or set_isa().

#include <cstddef>
#include <span>
#include <string_view>

namespace recon::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_sq)(const double* a, std::size_t n);
  double (*sum_abs)(const double* a, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = a * x + b * y
  void (*axpby)(double a, const double* x, double b, double* y, std::size_t n);
  void (*scale)(double a, double* x, std::size_t n);
  // x = sign(x) * max(|x| - t, 0)
  void (*soft_threshold)(double* x, double t, std::size_t n);
  // out[i] = w[0] in[i] + w[1] in[i+1] + w[2] in[i+2] + w[3] in[i+3]
  void (*fir4)(const double* in, const double* w, double* out, std::size_t n);
  // Row-major C (r x c) = A (r x k) * B (k x c)
  void (*gemm)(const double* a, const double* b, double* c, std::size_t r, std::size_t k, std::size_t cols);
};

namespace scalar {
const KernelTable& table();
}
#ifdef RECON_HAVE_AVX2
namespace avx2 {
const KernelTable& table();
}
#endif

bool isa_supported(Isa isa);
Isa active_isa();
// Returns false (and leaves the selection unchanged) if the ISA is unavailable.
bool set_isa(Isa isa);
std::string_view isa_name(Isa isa);
const KernelTable& table(Isa isa);
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum_sq(std::span<const double> a) { return active().sum_sq(a.data(), a.size()); }
inline double sum_abs(std::span<const double> a) { return active().sum_abs(a.data(), a.size()); }
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), y.size());
}
inline void axpby(double a, std::span<const double> x, double b, std::span<double> y) {
  active().axpby(a, x.data(), b, y.data(), y.size());
}
inline void scale(double a, std::span<double> x) { active().scale(a, x.data(), x.size()); }
inline void soft_threshold(std::span<double> x, double t) {
  active().soft_threshold(x.data(), t, x.size());
}

}  // namespace recon::kernels
