#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "recon/observation.hpp"
#include "support.hpp"

using namespace recon;
using std::numbers::pi;

TEST(Observation, IntervalAverageOfSine) {
  const Grid g = Grid1D(199);
  const ObservationOp op(g, {{0.23, 0.31}});
  const Field v = Field::sample(g, [](double x, double) { return std::sin(pi * x); });
  const double exact = (std::cos(0.23 * pi) - std::cos(0.31 * pi)) / (0.08 * pi);
  EXPECT_NEAR(op.apply(v)[0], exact, 1e-3);
}

TEST(Observation, NineLatticeSensors) {
  const Grid2D g(63, 63);
  const ObservationOp op = lattice_sensors(g);
  EXPECT_EQ(op.channels(), 9);
  EXPECT_EQ(op.apply(Field(g)).size(), 9u);
  for (int j = 0; j < 9; ++j) EXPECT_FALSE(op.support(j).empty());
}

TEST(Observation, AdjointUnderXAndYInnerProducts) {
  std::mt19937_64 rng(7);
  for (const Grid& g : {Grid(Grid1D(57)), Grid(Grid2D(21, 17))}) {
    const ObservationOp op = g.dims() == 1 ? ObservationOp(g, {{0.23, 0.31}, {0.46, 0.53}, {0.1, 0.9}})
                                           : lattice_sensors(Grid2D(21, 17), 0.2);
    const Field v = testutil::random_field(g, rng);
    std::vector<double> w(op.channels());
    std::normal_distribution<double> n;
    for (auto& x : w) x = n(rng);
    const auto cv = op.apply(v);
    double lhs = 0.0;
    for (int j = 0; j < op.channels(); ++j) lhs += cv[j] * w[j];
    EXPECT_NEAR(lhs, inner_x(v, op.apply_adjoint(w)), 1e-12 * (1 + std::abs(lhs)));
  }
}

TEST(Observation, EmptySupportReadsZero) {
  const Grid g = Grid1D(9);
  const ObservationOp op(g, {{0.01, 0.05}});
  EXPECT_TRUE(op.support(0).empty());
  Field v(g);
  for (auto& x : v.values()) x = 1.0;
  EXPECT_EQ(op.apply(v)[0], 0.0);
}

TEST(Simulation, FullDomainAverageOfDecayingMode) {
  // n = 999 keeps the O(1/n) node-average offset below the tolerance.
  const Propagator p = testutil::heat1d(999, TimeGrid(1.0, 1000));
  const ObservationOp op = full_domain_sensor(p.grid());
  const Field x0 = Field::sample(p.grid(), [](double x, double) { return std::sin(pi * x); });
  const auto y = simulate_measurements(p, op, x0, Field(p.grid()));
  for (int k = 0; k <= 1000; k += 50) EXPECT_NEAR(y.at(k, 0), std::exp(-pi * pi * p.time().node(k)) * 2 / pi, 1e-3);
}

TEST(Simulation, Superposition) {
  std::mt19937_64 rng(8);
  const Propagator p = testutil::heat1d(41, TimeGrid(1.0, 60), testutil::d_example1);
  const ObservationOp op(p.grid(), {{0.23, 0.31}, {0.46, 0.53}});
  const Field x0 = testutil::random_field(p.grid(), rng), f = testutil::random_field(p.grid(), rng);
  const auto full = simulate_measurements(p, op, x0, f);
  const auto parts = simulate_measurements(p, op, x0, Field(p.grid())) + compute_xi(p, op, f);
  for (std::size_t i = 0; i < full.values().size(); ++i) EXPECT_NEAR(full.values()[i], parts.values()[i], 1e-10);
  const auto zero = compute_xi(p, op, Field(p.grid()));
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
}

TEST(Noise, EmpiricalStdMatchesLevel) {
  const TimeGrid t(1.0, 200);
  MeasurementSeries y(t, 2);
  for (int k = 0; k <= 200; ++k) y.at(k, 0) = std::sin(3 * t.node(k)) + 0.2, y.at(k, 1) = std::exp(-t.node(k));
  const auto noisy = add_noise(y, 0.10, 42);
  for (int c = 0; c < 2; ++c) {
    double rms = 0.0, mean = 0.0, var = 0.0;
    for (int k = 0; k <= 200; ++k) rms += y.at(k, c) * y.at(k, c), mean += noisy.series.at(k, c) - y.at(k, c);
    rms = std::sqrt(rms / 201);
    mean /= 201;
    for (int k = 0; k <= 200; ++k) var += std::pow(noisy.series.at(k, c) - y.at(k, c) - mean, 2);
    const double ratio = std::sqrt(var / 200) / rms;
    EXPECT_GE(ratio, 0.08);
    EXPECT_LE(ratio, 0.12);
  }
  double delta = 0.0;
  for (int k = 0; k <= 200; ++k)
    delta = std::max(delta, std::hypot(noisy.series.at(k, 0) - y.at(k, 0), noisy.series.at(k, 1) - y.at(k, 1)));
  EXPECT_DOUBLE_EQ(noisy.delta, delta);
}

TEST(Noise, DeterministicInSeed) {
  const TimeGrid t(1.0, 50);
  MeasurementSeries y(t, 3);
  for (auto& v : y.values()) v = 1.0;
  const auto a = add_noise(y, 0.05, 17), b = add_noise(y, 0.05, 17), c = add_noise(y, 0.05, 18);
  for (std::size_t i = 0; i < y.values().size(); ++i) EXPECT_EQ(a.series.values()[i], b.series.values()[i]);
  EXPECT_NE(a.series.values()[0], c.series.values()[0]);
  EXPECT_EQ(add_noise(y, 0.0, 1).delta, 0.0);
}
