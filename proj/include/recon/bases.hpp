#pragma once

// Orthonormal families {phi_k} for the truncated generalized Fourier series
// of the initial state.

#include <string>
#include <vector>

#include "recon/spaces.hpp"

namespace recon {

struct Basis {
  std::string label;  // sine-1d | sine-2d | daubechies
  std::vector<Field> vectors;

  std::size_t size() const { return vectors.size(); }
  const Field& operator[](std::size_t k) const { return vectors[k]; }
  const Grid& grid() const { return vectors.front().grid(); }
};

/// sqrt(2) sin(k pi x), k = 1..m, normalized under inner_x.
Basis sine_basis_1d(const Grid1D& grid, int m);
/// Normalized sin(k pi x) sin(l pi y) for k, l = 1..m_per_axis, k slowest.
Basis sine_basis_2d(const Grid2D& grid, int m_per_axis);
/// First m functions of the periodized Daubechies-10 system on
/// N = 2^ceil(log2(n + 1)) samples, read off at the interior nodes by
/// periodic linear interpolation and re-orthonormalized.
Basis daubechies_basis_1d(const Grid1D& grid, int m);

/// Modified Gram-Schmidt under inner_x, two passes. Throws NumericalError
/// if a vector is (numerically) in the span of its predecessors.
void orthonormalize(std::vector<Field>& v);

/// m x m row-major Gram matrix <phi_j, phi_k>_X.
std::vector<double> gram_matrix(const std::vector<Field>& v);
/// max |G - I| entry.
double orthonormality_defect(const Basis& b);

/// sum_k c_k phi_k
Field expand(const Basis& b, const std::vector<double>& coeffs);
/// <x, phi_k>_X for each k.
std::vector<double> project(const Basis& b, const Field& x);

/// CSV with columns x[,y],phi1..phim.
void write_basis(const std::string& path, const Basis& b);

}  // namespace recon
