#pragma once

// Discrete stand-ins for the state space X (grid functions on the unit
// interval or square with homogeneous Dirichlet data), the observation space
// Y (one real per sensor channel) and Z = L2(0, t_f; Y).

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace recon {

/// Interior nodes x_i = i h, i = 1..n, of [0,1] with h = 1/(n+1).
struct Grid1D {
  int n_interior;
  explicit Grid1D(int n);
  double h() const { return 1.0 / (n_interior + 1); }
};

/// Tensor-product interior nodes of the unit square.
struct Grid2D {
  int nx;
  int ny;
  Grid2D(int nx, int ny);
  double hx() const { return 1.0 / (nx + 1); }
  double hy() const { return 1.0 / (ny + 1); }
};

/// A 1-D or 2-D grid. Values are stored x-fastest: index = j * nx + i.
class Grid {
 public:
  Grid(Grid1D g);  // NOLINT(google-explicit-constructor)
  Grid(Grid2D g);  // NOLINT(google-explicit-constructor)

  int dims() const { return dims_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  double hx() const { return 1.0 / (nx_ + 1); }
  double hy() const { return dims_ == 2 ? 1.0 / (ny_ + 1) : 1.0; }
  /// Quadrature weight of one interior node.
  double cell_weight() const { return hx() * hy(); }
  double x(int i) const { return (i + 1) * hx(); }
  double y(int j) const { return dims_ == 2 ? (j + 1) * hy() : 0.0; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

  bool operator==(const Grid&) const = default;

 private:
  int dims_;
  int nx_;
  int ny_;
};

/// Uniform time grid t_k = k dt on [0, t_f].
struct TimeGrid {
  double t_f;
  int n_t;
  TimeGrid(double t_f, int n_t);
  double dt() const { return t_f / n_t; }
  double node(int k) const { return k * dt(); }
  double mid(int k) const { return (k + 0.5) * dt(); }
  bool operator==(const TimeGrid&) const = default;
};

class Field {
 public:
  explicit Field(Grid grid);
  Field(Grid grid, std::vector<double> values);

  /// Samples f(x, y) at the interior nodes (y = 0 on 1-D grids).
  static Field sample(const Grid& grid, const std::function<double(double, double)>& f);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  bool all_finite() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double a);
  /// this += a * o
  Field& add_scaled(double a, const Field& o);

 private:
  Grid grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double a, Field f);

/// Discrete L2(Omega) inner product (rectangle rule on interior nodes).
double inner_x(const Field& a, const Field& b);
double norm_x(const Field& a);

using ObsVector = std::vector<double>;

/// Where the samples of a time signal live.
enum class Placement { midpoints, nodes };

/// Channel-vector samples on a time grid: n_t samples at midpoints t_{k+1/2}
/// or n_t + 1 samples at nodes t_k, stored sample-major.
template <Placement P>
class TimeSamples {
 public:
  TimeSamples(TimeGrid time, int channels);
  TimeSamples(TimeGrid time, int channels, std::vector<double> values);

  const TimeGrid& time() const { return time_; }
  int channels() const { return channels_; }
  int samples() const { return time_.n_t + (P == Placement::nodes ? 1 : 0); }
  std::span<const double> sample(int k) const {
    return {values_.data() + static_cast<std::size_t>(k) * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<double> sample(int k) {
    return {values_.data() + static_cast<std::size_t>(k) * channels_, static_cast<std::size_t>(channels_)};
  }
  double at(int k, int ch) const { return values_[static_cast<std::size_t>(k) * channels_ + ch]; }
  double& at(int k, int ch) { return values_[static_cast<std::size_t>(k) * channels_ + ch]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  bool all_finite() const;

  TimeSamples& operator+=(const TimeSamples& o);
  TimeSamples& operator-=(const TimeSamples& o);
  TimeSamples& operator*=(double a);
  TimeSamples& add_scaled(double a, const TimeSamples& o);

  bool same_shape(const TimeSamples& o) const { return time_ == o.time_ && channels_ == o.channels_; }

 private:
  TimeGrid time_;
  int channels_;
  std::vector<double> values_;
};

using ControlSignal = TimeSamples<Placement::midpoints>;
using MeasurementSeries = TimeSamples<Placement::nodes>;

template <Placement P>
TimeSamples<P> operator+(TimeSamples<P> a, const TimeSamples<P>& b) {
  return a += b;
}
template <Placement P>
TimeSamples<P> operator-(TimeSamples<P> a, const TimeSamples<P>& b) {
  return a -= b;
}
template <Placement P>
TimeSamples<P> operator*(double s, TimeSamples<P> a) {
  return a *= s;
}

/// Midpoint-rule pairing of a control with a node-sampled series:
/// dt * sum_k <u_{k+1/2}, (w_k + w_{k+1}) / 2>_Y.
double inner_z(const ControlSignal& u, const MeasurementSeries& w);
/// dt * sum_k <u_{k+1/2}, v_{k+1/2}>_Y.
double inner_z(const ControlSignal& u, const ControlSignal& v);
double norm_z(const ControlSignal& u);
/// Norm of the node-averaged series, the one inner_z pairs against.
double norm_z(const MeasurementSeries& w);
/// (w_k + w_{k+1}) / 2 for each interval.
ControlSignal midpoint_average(const MeasurementSeries& w);

}  // namespace recon
