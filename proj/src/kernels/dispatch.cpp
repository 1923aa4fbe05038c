#include <atomic>
#include <cstdlib>
#include <string>

#include "recon/kernels.hpp"

namespace recon::kernels {
namespace {

Isa detect() {
  Isa best = Isa::scalar;
#ifdef RECON_HAVE_AVX2
  if (isa_supported(Isa::avx2)) best = Isa::avx2;
#endif
  if (const char* env = std::getenv("RECON_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
  }
  return best;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{&table(detect())};
  return ptr;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(RECON_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
#ifdef RECON_HAVE_AVX2
  if (isa == Isa::avx2) return avx2::table();
#endif
  (void)isa;
  return scalar::table();
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

Isa active_isa() {
#ifdef RECON_HAVE_AVX2
  if (&active() == &avx2::table()) return Isa::avx2;
#endif
  return Isa::scalar;
}

bool set_isa(Isa isa) {
  if (!isa_supported(isa)) return false;
  current().store(&table(isa), std::memory_order_release);
  return true;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace recon::kernels
