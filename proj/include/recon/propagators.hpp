#pragma once

// Discrete semigroups for the three evolution models:
//   * 1-D diffusion v_t = (d(x) v_x)_x with a conservative 3-point stencil,
//   * 2-D diffusion v_t = d (v_xx + v_yy) with the 5-point stencil,
//   * 2-D convection-diffusion, advanced by Strang splitting: half a
//     semi-Lagrangian (bicubic) advection step, a full Crank-Nicolson
//     diffusion step, half an advection step.
// All models carry homogeneous Dirichlet data.

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "recon/spaces.hpp"

namespace recon {

class DiffusionModel1D {
 public:
  /// d is evaluated at the nodes and at the half nodes x_{i +/- 1/2}; it must be positive.
  DiffusionModel1D(Grid1D grid, const std::function<double(double)>& d);
  static DiffusionModel1D constant(Grid1D grid, double d);

  const Grid1D& grid() const { return grid_; }
  /// d((i + 1/2) h) for i = 0..n (n + 1 values).
  const std::vector<double>& d_half() const { return d_half_; }
  const std::vector<double>& d_nodes() const { return d_nodes_; }
  /// A_h v.
  Field apply_generator(const Field& v) const;

 private:
  Grid1D grid_;
  std::vector<double> d_half_;
  std::vector<double> d_nodes_;
};

class DiffusionModel2D {
 public:
  DiffusionModel2D(Grid2D grid, double d);
  const Grid2D& grid() const { return grid_; }
  double d() const { return d_; }
  Field apply_generator(const Field& v) const;

 private:
  Grid2D grid_;
  double d_;
};

/// Constant diffusivity d and convection velocity c. Transport moves mass
/// along +c: the characteristic foot of x over dt is x - c dt.
class ConvDiffModel2D {
 public:
  ConvDiffModel2D(Grid2D grid, double d, std::array<double, 2> c);
  const Grid2D& grid() const { return grid_; }
  double d() const { return d_; }
  const std::array<double, 2>& c() const { return c_; }
  DiffusionModel2D diffusion_part() const { return {grid_, d_}; }

 private:
  Grid2D grid_;
  double d_;
  std::array<double, 2> c_;
};

using Model = std::variant<DiffusionModel1D, DiffusionModel2D, ConvDiffModel2D>;

Grid model_grid(const Model& m);
bool is_self_adjoint(const Model& m);

enum class Direction { forward, adjoint };

/// Crank-Nicolson, i.e. the (1,1) Pade approximant r(z) = (2 + z) / (2 - z)
/// of exp(dt A_h), for the diffusion part of a model. Factorized once.
class CrankNicolson {
 public:
  CrankNicolson(const Model& model, double dt);

  double dt() const { return dt_; }
  /// (I - dt/2 A)^{-1} (I + dt/2 A) v
  Field step(const Field& v) const;
  /// (I - dt/2 A)^{-1} v
  Field resolvent(const Field& v) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  double dt_;
};

/// Semi-Lagrangian advection over dt: samples v at x - c dt (forward) or
/// x + c dt (adjoint) with tensor-product cubic Lagrange interpolation;
/// points outside the unit square read 0.
Field advect_step(const ConvDiffModel2D& m, const Field& v, double dt, Direction dir);
/// Exact transpose (under inner_x) of the forward advection step.
Field advect_transpose(const ConvDiffModel2D& m, const Field& v, double dt);
/// Half advection, full Crank-Nicolson diffusion, half advection.
Field strang_step(const ConvDiffModel2D& m, const Field& v, double dt, Direction dir);

/// S_t or S*_t advanced one time step at a time on a fixed time grid. The
/// factorization is built once and shared by copies; stepping is const.
class Propagator {
 public:
  Propagator(Model model, TimeGrid time);

  const Model& model() const { return *model_; }
  const TimeGrid& time() const { return time_; }
  Grid grid() const { return model_grid(*model_); }
  bool self_adjoint() const { return is_self_adjoint(*model_); }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// One step. For diffusion models both directions are the same operator;
  /// for convection-diffusion the adjoint direction advects with -c.
  Field step(const Field& v, Direction dir = Direction::forward) const;
  /// Exact transpose of the forward step under inner_x.
  Field step_transpose(const Field& v) const;
  /// Crank-Nicolson step of the diffusion part alone.
  Field cn_step(const Field& v) const { return cn_.step(v); }
  const CrankNicolson& crank_nicolson() const { return cn_; }

 private:
  std::shared_ptr<const Model> model_;
  TimeGrid time_;
  CrankNicolson cn_;
  std::vector<std::string> warnings_;
};

Field cn_step(const Propagator& p, const Field& v);

/// x(t_k), k = 0..n_t, for x' = A x + f with time-independent f. The source
/// enters each step as dt (f + S_dt f) / 2, which for Crank-Nicolson equals
/// dt (I - dt/2 A)^{-1} f.
std::vector<Field> forward_trajectory(const Propagator& p, const Field& x0, const Field& f);

}  // namespace recon
