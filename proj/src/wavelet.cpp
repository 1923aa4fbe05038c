#include "recon/wavelet.hpp"

#include <cmath>

#include "recon/errors.hpp"

namespace recon::wavelet {

const std::array<double, kTaps>& db10_lowpass() {
  static const std::array<double, kTaps> h{
      0.16010239797419291448,  0.60382926979718967054,  0.72430852843777292773,  0.13842814590132073151,
      -0.24229488706638203186, -0.032244869584638374648, 0.077571493840045713523, -0.0062414902127982742742,
      -0.012580751999081999469, 0.003335725285473771278};
  return h;
}

std::array<double, kTaps> highpass(const std::array<double, kTaps>& h) {
  std::array<double, kTaps> g{};
  for (int k = 0; k < kTaps; ++k) g[k] = (k % 2 == 0 ? 1.0 : -1.0) * h[kTaps - 1 - k];
  return g;
}

double qmf_defect(std::span<const double> h) {
  const int n = static_cast<int>(h.size());
  double sum = 0.0;
  for (double v : h) sum += v;
  double worst = std::abs(sum - std::sqrt(2.0));
  for (int s = 0; 2 * s < n; ++s) {
    double acc = 0.0;
    for (int i = 0; i + 2 * s < n; ++i) acc += h[i] * h[i + 2 * s];
    worst = std::max(worst, std::abs(acc - (s == 0 ? 1.0 : 0.0)));
  }
  return worst;
}

namespace {

std::vector<double> highpass_of(std::span<const double> h) {
  const std::size_t L = h.size();
  std::vector<double> g(L);
  for (std::size_t k = 0; k < L; ++k) g[k] = (k % 2 == 0 ? 1.0 : -1.0) * h[L - 1 - k];
  return g;
}

}  // namespace

std::vector<double> analysis_step(std::span<const double> x, std::span<const double> h) {
  const std::size_t n = x.size();
  if (n % 2 != 0 || n == 0) throw DimensionError("wavelet analysis needs an even, non-empty signal");
  const auto g = highpass_of(h);
  const std::size_t half = n / 2;
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (std::size_t t = 0; t < h.size(); ++t) {
      const double v = x[(2 * k + t) % n];
      a += h[t] * v;
      d += g[t] * v;
    }
    out[k] = a;
    out[half + k] = d;
  }
  return out;
}

std::vector<double> synthesis_step(std::span<const double> coeffs, std::span<const double> h) {
  const std::size_t n = coeffs.size();
  if (n % 2 != 0 || n == 0) throw DimensionError("wavelet synthesis needs an even, non-empty signal");
  const auto g = highpass_of(h);
  const std::size_t half = n / 2;
  std::vector<double> x(n, 0.0);
  for (std::size_t k = 0; k < half; ++k)
    for (std::size_t t = 0; t < h.size(); ++t) x[(2 * k + t) % n] += h[t] * coeffs[k] + g[t] * coeffs[half + k];
  return x;
}

int full_depth(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) return -1;
  int levels = 0;
  while ((std::size_t{1} << levels) < n) ++levels;
  return levels;
}

std::vector<double> forward(std::span<const double> x, int levels) {
  const auto& h = db10_lowpass();
  std::vector<double> c(x.begin(), x.end());
  std::size_t len = c.size();
  for (int l = 0; l < levels; ++l) {
    if (len % 2 != 0) throw DimensionError("too many wavelet levels for this length");
    auto step = analysis_step(std::span<const double>(c.data(), len), h);
    std::copy(step.begin(), step.end(), c.begin());
    len /= 2;
  }
  return c;
}

std::vector<double> inverse(std::span<const double> coeffs, int levels) {
  const auto& h = db10_lowpass();
  std::vector<double> c(coeffs.begin(), coeffs.end());
  std::size_t len = c.size() >> levels;
  if ((len << levels) != c.size()) throw DimensionError("too many wavelet levels for this length");
  for (int l = 0; l < levels; ++l) {
    len *= 2;
    auto step = synthesis_step(std::span<const double>(c.data(), len), h);
    std::copy(step.begin(), step.end(), c.begin());
  }
  return c;
}

}  // namespace recon::wavelet
