#include "recon/observation.hpp"

#include <cmath>
#include <random>

#include "recon/errors.hpp"
#include "recon/kernels.hpp"

namespace recon {

ObservationOp::ObservationOp(Grid grid, std::vector<SensorRegion> regions)
    : grid_(grid), regions_(std::move(regions)) {
  if (regions_.empty()) throw ConfigError("observation operator needs at least one sensor");
  constexpr double slack = 1e-9;
  for (const auto& r : regions_) {
    const bool ok_x = r.x0 >= 0.0 && r.x1 <= 1.0 && r.x0 < r.x1;
    const bool ok_y = grid_.dims() == 1 || (r.y0 >= 0.0 && r.y1 <= 1.0 && r.y0 < r.y1);
    if (!ok_x || !ok_y) throw ConfigError("sensor region must be a non-empty box inside the unit domain");
    std::vector<std::size_t> idx;
    for (int j = 0; j < grid_.ny(); ++j) {
      const double y = grid_.y(j);
      if (grid_.dims() == 2 && (y < r.y0 - slack || y > r.y1 + slack)) continue;
      for (int i = 0; i < grid_.nx(); ++i) {
        const double x = grid_.x(i);
        if (x >= r.x0 - slack && x <= r.x1 + slack) idx.push_back(grid_.index(i, j));
      }
    }
    support_.push_back(std::move(idx));
  }
}

ObsVector ObservationOp::apply(const Field& v) const {
  require_dims(v.grid() == grid_, "apply_c: grid mismatch");
  ObsVector out(regions_.size(), 0.0);
  for (std::size_t j = 0; j < support_.size(); ++j) {
    if (support_[j].empty()) continue;
    double s = 0.0;
    for (auto i : support_[j]) s += v[i];
    out[j] = s / static_cast<double>(support_[j].size());
  }
  return out;
}

void ObservationOp::add_adjoint(double a, std::span<const double> w, Field& out) const {
  require_dims(w.size() == regions_.size(), "apply_c_adjoint: channel count mismatch");
  require_dims(out.grid() == grid_, "apply_c_adjoint: grid mismatch");
  const double cw = grid_.cell_weight();
  for (std::size_t j = 0; j < support_.size(); ++j) {
    if (support_[j].empty() || w[j] == 0.0) continue;
    const double v = a * w[j] / (static_cast<double>(support_[j].size()) * cw);
    for (auto i : support_[j]) out[i] += v;
  }
}

Field ObservationOp::apply_adjoint(std::span<const double> w) const {
  Field out(grid_);
  add_adjoint(1.0, w, out);
  return out;
}

ObsVector apply_c(const ObservationOp& op, const Field& v) { return op.apply(v); }
Field apply_c_adjoint(const ObservationOp& op, std::span<const double> w) { return op.apply_adjoint(w); }

ObservationOp full_domain_sensor(const Grid& grid) { return {grid, {SensorRegion{0.0, 1.0, 0.0, 1.0}}}; }

ObservationOp lattice_sensors(const Grid2D& grid, double side) {
  std::vector<SensorRegion> r;
  for (int j = 1; j <= 3; ++j)
    for (int i = 1; i <= 3; ++i) {
      const double cx = i / 4.0;
      const double cy = j / 4.0;
      r.push_back({cx - side / 2, cx + side / 2, cy - side / 2, cy + side / 2});
    }
  return {grid, std::move(r)};
}

MeasurementSeries simulate_measurements(const Propagator& p, const ObservationOp& op, const Field& x0,
                                        const Field& f) {
  const auto traj = forward_trajectory(p, x0, f);
  MeasurementSeries y(p.time(), op.channels());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto obs = op.apply(traj[k]);
    std::copy(obs.begin(), obs.end(), y.sample(static_cast<int>(k)).begin());
  }
  return y;
}

MeasurementSeries compute_xi(const Propagator& p, const ObservationOp& op, const Field& f) {
  if (kernels::sum_abs(f.values()) == 0.0) return {p.time(), op.channels()};
  return simulate_measurements(p, op, Field(p.grid()), f);
}

NoisyData add_noise(const MeasurementSeries& y, double level, std::uint64_t seed, NoiseScale scale) {
  if (!(level >= 0.0) || !std::isfinite(level)) throw ConfigError("noise level must be finite and nonnegative");
  NoisyData out{y, 0.0};
  if (level == 0.0) return out;
  const int nc = y.channels();
  const int ns = y.samples();
  std::vector<double> sigma(nc, 0.0);
  for (int c = 0; c < nc; ++c) {
    double acc = 0.0;
    for (int k = 0; k < ns; ++k) {
      const double v = y.at(k, c);
      acc = scale == NoiseScale::rms ? acc + v * v : std::max(acc, std::abs(v));
    }
    sigma[c] = level * (scale == NoiseScale::rms ? std::sqrt(acc / ns) : acc);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < ns; ++k) {
    double e2 = 0.0;
    for (int c = 0; c < nc; ++c) {
      const double e = sigma[c] * normal(rng);
      out.series.at(k, c) += e;
      e2 += e * e;
    }
    out.delta = std::max(out.delta, std::sqrt(e2));
  }
  return out;
}

}  // namespace recon
