#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "recon/kernels.hpp"

using namespace recon::kernels;

namespace {

std::vector<double> randv(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  return m;
}

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {
 protected:
  void SetUp() override {
    if (!isa_supported(Isa::avx2)) GTEST_SKIP() << "AVX2 not available";
  }
  const KernelTable& s = table(Isa::scalar);
  const KernelTable& v = table(Isa::avx2);
};

}  // namespace

TEST_P(KernelEquivalence, Reductions) {
  std::mt19937_64 rng(GetParam());
  const auto a = randv(GetParam(), rng), b = randv(GetParam(), rng);
  const double n = static_cast<double>(GetParam()) + 1.0;
  EXPECT_NEAR(s.dot(a.data(), b.data(), a.size()), v.dot(a.data(), b.data(), a.size()), 1e-14 * n);
  EXPECT_NEAR(s.sum_sq(a.data(), a.size()), v.sum_sq(a.data(), a.size()), 1e-14 * n);
  EXPECT_NEAR(s.sum_abs(a.data(), a.size()), v.sum_abs(a.data(), a.size()), 1e-14 * n);
}

TEST_P(KernelEquivalence, Elementwise) {
  std::mt19937_64 rng(GetParam() + 100);
  const auto x = randv(GetParam(), rng), y0 = randv(GetParam(), rng);
  auto y1 = y0, y2 = y0;
  s.axpy(0.7, x.data(), y1.data(), y1.size());
  v.axpy(0.7, x.data(), y2.data(), y2.size());
  EXPECT_LE(max_rel(y2, y1), 1e-15);
  y1 = y0, y2 = y0;
  s.axpby(0.3, x.data(), -1.1, y1.data(), y1.size());
  v.axpby(0.3, x.data(), -1.1, y2.data(), y2.size());
  EXPECT_LE(max_rel(y2, y1), 1e-15);
  y1 = y0, y2 = y0;
  s.scale(-2.5, y1.data(), y1.size());
  v.scale(-2.5, y2.data(), y2.size());
  EXPECT_EQ(y1, y2);
  y1 = y0, y2 = y0;
  s.soft_threshold(y1.data(), 0.5, y1.size());
  v.soft_threshold(y2.data(), 0.5, y2.size());
  EXPECT_EQ(y1, y2);
}

TEST_P(KernelEquivalence, Fir4) {
  std::mt19937_64 rng(GetParam() + 200);
  const auto in = randv(GetParam() + 3, rng);
  const double w[4] = {-0.0625, 0.5625, 0.5625, -0.0625};
  std::vector<double> o1(GetParam()), o2(GetParam());
  s.fir4(in.data(), w, o1.data(), o1.size());
  v.fir4(in.data(), w, o2.data(), o2.size());
  EXPECT_LE(max_rel(o2, o1), 1e-15);
}

TEST_P(KernelEquivalence, Gemm) {
  std::mt19937_64 rng(GetParam() + 300);
  const std::size_t r = GetParam() % 13 + 1, k = GetParam() + 1, c = GetParam() % 9 + 1;
  const auto a = randv(r * k, rng), b = randv(k * c, rng);
  std::vector<double> c1(r * c), c2(r * c);
  s.gemm(a.data(), b.data(), c1.data(), r, k, c);
  v.gemm(a.data(), b.data(), c2.data(), r, k, c);
  EXPECT_LE(max_rel(c2, c1), 1e-13 * static_cast<double>(k));
}

INSTANTIATE_TEST_SUITE_P(Lengths, KernelEquivalence, ::testing::Values(0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 63, 64, 199, 1000));

TEST(KernelDispatch, ScalarAlwaysSelectable) {
  const Isa before = active_isa();
  EXPECT_TRUE(set_isa(Isa::scalar));
  EXPECT_EQ(active_isa(), Isa::scalar);
  std::vector<double> a{1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(dot(a, a), 14.0);
  set_isa(before);
  EXPECT_EQ(isa_name(Isa::scalar), "scalar");
}

TEST(KernelScalar, SoftThresholdShrinks) {
  std::vector<double> x{-2.0, -0.5, 0.0, 0.25, 3.0};
  table(Isa::scalar).soft_threshold(x.data(), 1.0, x.size());
  EXPECT_EQ(x, (std::vector<double>{-1.0, 0.0, 0.0, 0.0, 2.0}));
}
