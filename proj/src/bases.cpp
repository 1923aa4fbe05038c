#include "recon/bases.hpp"

#include <cmath>
#include <numbers>

#include "recon/csv.hpp"
#include "recon/errors.hpp"
#include "recon/wavelet.hpp"

namespace recon {

namespace {

void normalize(Field& f) {
  const double n = norm_x(f);
  if (!(n > 0.0)) throw NumericalError("cannot normalize a zero basis vector");
  f *= 1.0 / n;
}

}  // namespace

Basis sine_basis_1d(const Grid1D& grid, int m) {
  if (m < 1) throw ConfigError("basis size must be at least 1");
  if (m > grid.n_interior) throw CapacityError("sine basis: m exceeds the number of interior nodes");
  Basis b{"sine-1d", {}};
  for (int k = 1; k <= m; ++k) {
    Field f = Field::sample(grid, [k](double x, double) { return std::sqrt(2.0) * std::sin(k * std::numbers::pi * x); });
    normalize(f);
    b.vectors.push_back(std::move(f));
  }
  return b;
}

Basis sine_basis_2d(const Grid2D& grid, int m_per_axis) {
  if (m_per_axis < 1) throw ConfigError("basis size must be at least 1");
  if (m_per_axis > std::min(grid.nx, grid.ny)) throw CapacityError("sine basis: m_per_axis exceeds the grid");
  Basis b{"sine-2d", {}};
  for (int k = 1; k <= m_per_axis; ++k)
    for (int l = 1; l <= m_per_axis; ++l) {
      Field f = Field::sample(grid, [k, l](double x, double y) {
        return 2.0 * std::sin(k * std::numbers::pi * x) * std::sin(l * std::numbers::pi * y);
      });
      normalize(f);
      b.vectors.push_back(std::move(f));
    }
  return b;
}

Basis daubechies_basis_1d(const Grid1D& grid, int m) {
  if (m < 1) throw ConfigError("basis size must be at least 1");
  const int n = grid.n_interior;
  std::size_t N = 1;
  while (N < static_cast<std::size_t>(n) + 1) N *= 2;
  const int levels = wavelet::full_depth(N);
  if (m > n || static_cast<std::size_t>(m) > N) throw CapacityError("daubechies basis: m exceeds available wavelet slots");

  Basis b{"daubechies", {}};
  std::vector<double> unit(N, 0.0);
  for (int k = 0; k < m; ++k) {
    std::fill(unit.begin(), unit.end(), 0.0);
    unit[k] = 1.0;
    const auto w = wavelet::inverse(unit, levels);
    Field f(grid);
    for (int i = 0; i < n; ++i) {
      const double s = grid.h() * (i + 1) * static_cast<double>(N);
      const double fl = std::floor(s);
      const double t = s - fl;
      const auto i0 = static_cast<std::size_t>(fl) % N;
      f[i] = (1.0 - t) * w[i0] + t * w[(i0 + 1) % N];
    }
    b.vectors.push_back(std::move(f));
  }
  orthonormalize(b.vectors);
  return b;
}

void orthonormalize(std::vector<Field>& v) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double before = norm_x(v[k]);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < k; ++j) v[k].add_scaled(-inner_x(v[j], v[k]), v[j]);
    const double after = norm_x(v[k]);
    if (!(after > 1e-10 * before)) throw NumericalError("Gram-Schmidt: vector " + std::to_string(k + 1) + " is dependent");
    v[k] *= 1.0 / after;
  }
}

std::vector<double> gram_matrix(const std::vector<Field>& v) {
  const std::size_t m = v.size();
  std::vector<double> g(m * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = j; k < m; ++k) g[j * m + k] = g[k * m + j] = inner_x(v[j], v[k]);
  return g;
}

double orthonormality_defect(const Basis& b) {
  const auto g = gram_matrix(b.vectors);
  const std::size_t m = b.size();
  double worst = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) worst = std::max(worst, std::abs(g[j * m + k] - (j == k ? 1.0 : 0.0)));
  return worst;
}

Field expand(const Basis& b, const std::vector<double>& coeffs) {
  require_dims(coeffs.size() == b.size(), "expand: coefficient count does not match basis");
  Field out(b.grid());
  for (std::size_t k = 0; k < b.size(); ++k) out.add_scaled(coeffs[k], b[k]);
  return out;
}

std::vector<double> project(const Basis& b, const Field& x) {
  std::vector<double> c(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) c[k] = inner_x(x, b[k]);
  return c;
}

void write_basis(const std::string& path, const Basis& b) {
  const Grid& g = b.grid();
  csv::Table t;
  t.header.push_back("x");
  if (g.dims() == 2) t.header.push_back("y");
  for (std::size_t k = 0; k < b.size(); ++k) t.header.push_back("phi" + std::to_string(k + 1));
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      std::vector<double> row{g.x(i)};
      if (g.dims() == 2) row.push_back(g.y(j));
      for (const auto& f : b.vectors) row.push_back(f[g.index(i, j)]);
      t.rows.push_back(std::move(row));
    }
  csv::write_table(path, t);
}

}  // namespace recon
