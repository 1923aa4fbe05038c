#include "recon/spaces.hpp"

#include <cmath>
#include <string>

#include "recon/errors.hpp"
#include "recon/kernels.hpp"

namespace recon {

Grid1D::Grid1D(int n) : n_interior(n) {
  if (n < 3) throw CapacityError("Grid1D needs at least 3 interior nodes, got " + std::to_string(n));
}

Grid2D::Grid2D(int nx_, int ny_) : nx(nx_), ny(ny_) {
  if (nx < 3 || ny < 3) throw CapacityError("Grid2D needs at least 3x3 interior nodes");
}

Grid::Grid(Grid1D g) : dims_(1), nx_(g.n_interior), ny_(1) {}
Grid::Grid(Grid2D g) : dims_(2), nx_(g.nx), ny_(g.ny) {}

TimeGrid::TimeGrid(double t_f_, int n_t_) : t_f(t_f_), n_t(n_t_) {
  if (!(t_f > 0.0) || !std::isfinite(t_f)) throw ConfigError("final time must be positive");
  if (n_t < 2) throw ConfigError("time grid needs at least 2 steps");
}

Field::Field(Grid grid) : grid_(grid), values_(grid.size(), 0.0) {}

Field::Field(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  require_dims(values_.size() == grid_.size(), "field values do not match grid size");
}

Field Field::sample(const Grid& grid, const std::function<double(double, double)>& f) {
  Field out(grid);
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i) out.values_[grid.index(i, j)] = f(grid.x(i), grid.y(j));
  return out;
}

bool Field::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

Field& Field::operator+=(const Field& o) { return add_scaled(1.0, o); }
Field& Field::operator-=(const Field& o) { return add_scaled(-1.0, o); }

Field& Field::operator*=(double a) {
  kernels::scale(a, values_);
  return *this;
}

Field& Field::add_scaled(double a, const Field& o) {
  require_dims(grid_ == o.grid_, "field grid mismatch");
  kernels::axpy(a, o.values_, values_);
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double a, Field f) { return f *= a; }

double inner_x(const Field& a, const Field& b) {
  require_dims(a.grid() == b.grid(), "inner_x: grid mismatch");
  return a.grid().cell_weight() * kernels::dot(a.values(), b.values());
}

double norm_x(const Field& a) { return std::sqrt(a.grid().cell_weight() * kernels::sum_sq(a.values())); }

template <Placement P>
TimeSamples<P>::TimeSamples(TimeGrid time, int channels)
    : time_(time), channels_(channels), values_(static_cast<std::size_t>(samples()) * channels, 0.0) {
  if (channels < 0) throw DimensionError("negative channel count");
}

template <Placement P>
TimeSamples<P>::TimeSamples(TimeGrid time, int channels, std::vector<double> values)
    : time_(time), channels_(channels), values_(std::move(values)) {
  require_dims(values_.size() == static_cast<std::size_t>(samples()) * channels_,
               "time samples do not match time grid and channel count");
}

template <Placement P>
bool TimeSamples<P>::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

template <Placement P>
TimeSamples<P>& TimeSamples<P>::operator+=(const TimeSamples& o) {
  return add_scaled(1.0, o);
}

template <Placement P>
TimeSamples<P>& TimeSamples<P>::operator-=(const TimeSamples& o) {
  return add_scaled(-1.0, o);
}

template <Placement P>
TimeSamples<P>& TimeSamples<P>::operator*=(double a) {
  kernels::scale(a, values_);
  return *this;
}

template <Placement P>
TimeSamples<P>& TimeSamples<P>::add_scaled(double a, const TimeSamples& o) {
  require_dims(same_shape(o), "time samples shape mismatch");
  kernels::axpy(a, o.values_, values_);
  return *this;
}

template class TimeSamples<Placement::midpoints>;
template class TimeSamples<Placement::nodes>;

double inner_z(const ControlSignal& u, const MeasurementSeries& w) {
  require_dims(u.time() == w.time(), "inner_z: time grid mismatch");
  require_dims(u.channels() == w.channels(), "inner_z: channel count mismatch");
  double s = 0.0;
  for (int k = 0; k < u.time().n_t; ++k) {
    const auto uk = u.sample(k);
    s += 0.5 * (kernels::dot(uk, w.sample(k)) + kernels::dot(uk, w.sample(k + 1)));
  }
  return u.time().dt() * s;
}

double inner_z(const ControlSignal& u, const ControlSignal& v) {
  require_dims(u.same_shape(v), "inner_z: control shape mismatch");
  return u.time().dt() * kernels::dot(u.values(), v.values());
}

double norm_z(const ControlSignal& u) { return std::sqrt(u.time().dt() * kernels::sum_sq(u.values())); }

double norm_z(const MeasurementSeries& w) { return norm_z(midpoint_average(w)); }

ControlSignal midpoint_average(const MeasurementSeries& w) {
  ControlSignal out(w.time(), w.channels());
  for (int k = 0; k < w.time().n_t; ++k) {
    auto dst = out.sample(k);
    const auto a = w.sample(k);
    const auto b = w.sample(k + 1);
    for (int c = 0; c < w.channels(); ++c) dst[c] = 0.5 * (a[c] + b[c]);
  }
  return out;
}

}  // namespace recon
