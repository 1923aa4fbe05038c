#pragma once

#include <cmath>
#include <random>

#include "recon/control.hpp"
#include "recon/propagators.hpp"

namespace recon::testutil {

inline double d_example1(double x) { return 1.0625 - std::pow(x - 0.5, 4); }

inline Field random_field(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Field f(g);
  for (auto& v : f.values()) v = n(rng);
  return f;
}

inline ControlSignal random_control(const TimeGrid& t, int channels, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  ControlSignal u(t, channels);
  for (auto& v : u.values()) v = n(rng);
  return u;
}

inline Propagator heat1d(int n, TimeGrid t, double (*d)(double) = nullptr) {
  if (!d) return {DiffusionModel1D::constant(Grid1D(n), 1.0), t};
  return {DiffusionModel1D(Grid1D(n), d), t};
}

inline ControlMap full_sensor_map(int n, TimeGrid t) {
  Propagator p = heat1d(n, t);
  return {p, full_domain_sensor(p.grid())};
}

inline ControlMap example1_map(int n, TimeGrid t) {
  Propagator p = heat1d(n, t, d_example1);
  return {p, ObservationOp(p.grid(), {{0.23, 0.31}, {0.46, 0.53}})};
}

}  // namespace recon::testutil
