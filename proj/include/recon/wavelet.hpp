#pragma once

// Periodized orthogonal discrete wavelet transform with the 10-tap
// (5 vanishing moments) Daubechies filter.

#include <array>
#include <span>
#include <vector>

namespace recon::wavelet {

inline constexpr int kTaps = 10;

/// Low-pass synthesis filter h_0..h_9, normalized so that sum h = sqrt(2).
const std::array<double, kTaps>& db10_lowpass();
/// g_k = (-1)^k h_{L-1-k}.
std::array<double, kTaps> highpass(const std::array<double, kTaps>& h);

/// max(|sum h - sqrt 2|, max_{s != 0} |sum_i h_i h_{i+2s}|, |sum h^2 - 1|).
double qmf_defect(std::span<const double> h);

/// One analysis level on a periodic signal of even length: returns
/// [approximation | detail], each of half length.
std::vector<double> analysis_step(std::span<const double> x, std::span<const double> h);
/// Inverse of analysis_step.
std::vector<double> synthesis_step(std::span<const double> coeffs, std::span<const double> h);

/// Full-depth transforms on a power-of-two length. Coefficients are ordered
/// coarsest first: [a_J, d_J, d_{J-1}, ..., d_1].
std::vector<double> forward(std::span<const double> x, int levels);
std::vector<double> inverse(std::span<const double> coeffs, int levels);
/// log2(n) for a power of two, else -1.
int full_depth(std::size_t n);

}  // namespace recon::wavelet
