#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "recon/bases.hpp"
#include "recon/errors.hpp"
#include "recon/wavelet.hpp"
#include "support.hpp"

using namespace recon;

TEST(SineBasis, OneDimensionalIsOrthonormal) {
  const Basis b = sine_basis_1d(Grid1D(199), 8);
  EXPECT_EQ(b.size(), 8u);
  EXPECT_LE(orthonormality_defect(b), 1e-10);
}

TEST(SineBasis, TensorIsOrthonormal) {
  const Basis b = sine_basis_2d(Grid2D(63, 63), 4);
  EXPECT_EQ(b.size(), 16u);
  EXPECT_LE(orthonormality_defect(b), 1e-10);
}

TEST(SineBasis, TensorOrderingIsXSlowest) {
  const Grid2D g(15, 15);
  const Basis b = sine_basis_2d(g, 3);
  // Second function: k = 1, l = 2, i.e. sin(pi x) sin(2 pi y).
  const Field ref = Field::sample(g, [](double x, double y) {
    return std::sin(std::numbers::pi * x) * std::sin(2 * std::numbers::pi * y);
  });
  EXPECT_NEAR(std::abs(inner_x(b[1], ref)), norm_x(ref), 1e-12);
}

TEST(SineBasis, CapacityChecked) {
  EXPECT_THROW(sine_basis_1d(Grid1D(7), 8), CapacityError);
}

TEST(Wavelet, FilterSatisfiesQuadratureMirrorConditions) {
  const auto& h = wavelet::db10_lowpass();
  double sum = 0.0, shift2 = 0.0;
  for (int i = 0; i < wavelet::kTaps; ++i) sum += h[i];
  for (int i = 0; i + 2 < wavelet::kTaps; ++i) shift2 += h[i] * h[i + 2];
  EXPECT_NEAR(sum, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(shift2, 0.0, 1e-12);
  EXPECT_LE(wavelet::qmf_defect(h), 1e-12);
}

TEST(Wavelet, FiveVanishingMoments) {
  const auto g = wavelet::highpass(wavelet::db10_lowpass());
  for (int p = 0; p < 5; ++p) {
    double m = 0.0;
    for (int k = 0; k < wavelet::kTaps; ++k) m += std::pow(k, p) * g[k];
    EXPECT_NEAR(m, 0.0, 1e-8 * std::pow(10.0, p)) << p;
  }
}

TEST(Wavelet, PerfectReconstruction) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  std::vector<double> x(256);
  for (auto& v : x) v = n(rng);
  const int levels = wavelet::full_depth(x.size());
  ASSERT_EQ(levels, 8);
  const auto c = wavelet::forward(x, levels);
  double e_x = 0.0, e_c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) e_x += x[i] * x[i], e_c += c[i] * c[i];
  EXPECT_NEAR(e_x, e_c, 1e-10 * e_x);
  const auto back = wavelet::inverse(c, levels);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
  EXPECT_EQ(wavelet::full_depth(200), -1);
}

TEST(DaubechiesBasis, IsOrthonormal) {
  for (int n : {63, 199, 255}) {
    const Basis b = daubechies_basis_1d(Grid1D(n), 8);
    EXPECT_EQ(b.size(), 8u);
    EXPECT_LE(orthonormality_defect(b), 1e-10) << n;
  }
}

TEST(Orthonormalize, DependentVectorThrows) {
  const Grid g = Grid1D(20);
  std::mt19937_64 rng(1);
  Field a = testutil::random_field(g, rng);
  std::vector<Field> v{a, 2.0 * a};
  EXPECT_THROW(orthonormalize(v), NumericalError);
}

TEST(Basis, ExpandProjectRoundTrip) {
  const Basis b = sine_basis_1d(Grid1D(99), 6);
  const std::vector<double> c{1.0, -0.5, 0.25, 0.0, 3.0, -2.0};
  const auto back = project(b, expand(b, c));
  for (std::size_t k = 0; k < c.size(); ++k) EXPECT_NEAR(back[k], c[k], 1e-12);
}
