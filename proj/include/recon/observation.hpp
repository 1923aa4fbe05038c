#pragma once

// Observation operator C (averages over sensor regions), its adjoint, the
// synthetic data generator and noise injection.

#include <cstdint>
#include <vector>

#include "recon/propagators.hpp"
#include "recon/spaces.hpp"

namespace recon {

/// [x0, x1] x [y0, y1]; the y extent is ignored on 1-D grids.
struct SensorRegion {
  double x0;
  double x1;
  double y0 = 0.0;
  double y1 = 1.0;
};

class ObservationOp {
 public:
  /// Each region snaps to the grid nodes it contains (with a 1e-9 slack).
  /// A region containing no node is allowed and always reads 0.
  ObservationOp(Grid grid, std::vector<SensorRegion> regions);

  const Grid& grid() const { return grid_; }
  int channels() const { return static_cast<int>(regions_.size()); }
  const std::vector<SensorRegion>& regions() const { return regions_; }
  /// Node indices of sensor j.
  const std::vector<std::size_t>& support(int j) const { return support_[j]; }

  ObsVector apply(const Field& v) const;
  /// (C* w)_i = sum_j w_j [i in support_j] / (|support_j| cell_weight)
  Field apply_adjoint(std::span<const double> w) const;
  /// this->apply_adjoint(w) added into out, scaled by a.
  void add_adjoint(double a, std::span<const double> w, Field& out) const;

 private:
  Grid grid_;
  std::vector<SensorRegion> regions_;
  std::vector<std::vector<std::size_t>> support_;
};

ObsVector apply_c(const ObservationOp& op, const Field& v);
Field apply_c_adjoint(const ObservationOp& op, std::span<const double> w);

/// One sensor covering the whole domain.
ObservationOp full_domain_sensor(const Grid& grid);
/// 3 x 3 lattice of boxes of side `side` centred at (i/4, j/4), i, j = 1..3.
ObservationOp lattice_sensors(const Grid2D& grid, double side = 0.1);

/// y(t_k) = C x(t_k) along the forward trajectory from x0 with source f.
MeasurementSeries simulate_measurements(const Propagator& p, const ObservationOp& op, const Field& x0, const Field& f);
/// Response of the source alone, measured from a zero initial state.
MeasurementSeries compute_xi(const Propagator& p, const ObservationOp& op, const Field& f);

enum class NoiseScale { rms, max };

struct NoisyData {
  MeasurementSeries series;
  /// max_k ||e_k||_Y of the realized noise.
  double delta;
};

/// Adds i.i.d. Gaussian noise with per-channel std = level * (RMS or max
/// |.| of that clean channel over time). Deterministic in seed.
NoisyData add_noise(const MeasurementSeries& y, double level, std::uint64_t seed, NoiseScale scale = NoiseScale::rms);

}  // namespace recon
