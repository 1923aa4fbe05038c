#include "recon/propagators.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "recon/errors.hpp"
#include "recon/kernels.hpp"

namespace recon {

DiffusionModel1D::DiffusionModel1D(Grid1D grid, const std::function<double(double)>& d) : grid_(grid) {
  const int n = grid.n_interior;
  const double h = grid.h();
  d_half_.resize(n + 1);
  d_nodes_.resize(n);
  for (int i = 0; i <= n; ++i) d_half_[i] = d((i + 0.5) * h);
  for (int i = 0; i < n; ++i) d_nodes_[i] = d((i + 1) * h);
  for (double v : d_half_)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("diffusion coefficient must be positive and finite");
  for (double v : d_nodes_)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("diffusion coefficient must be positive and finite");
}

DiffusionModel1D DiffusionModel1D::constant(Grid1D grid, double d) {
  return {grid, [d](double) { return d; }};
}

Field DiffusionModel1D::apply_generator(const Field& v) const {
  require_dims(v.grid() == Grid(grid_), "apply_generator: grid mismatch");
  const int n = grid_.n_interior;
  const double inv_h2 = 1.0 / (grid_.h() * grid_.h());
  Field out(v.grid());
  for (int i = 0; i < n; ++i) {
    const double left = i > 0 ? v[i - 1] : 0.0;
    const double right = i + 1 < n ? v[i + 1] : 0.0;
    out[i] = (d_half_[i + 1] * (right - v[i]) - d_half_[i] * (v[i] - left)) * inv_h2;
  }
  return out;
}

DiffusionModel2D::DiffusionModel2D(Grid2D grid, double d) : grid_(grid), d_(d) {
  if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("diffusivity must be positive and finite");
}

Field DiffusionModel2D::apply_generator(const Field& v) const {
  const Grid g(grid_);
  require_dims(v.grid() == g, "apply_generator: grid mismatch");
  const int nx = grid_.nx;
  const int ny = grid_.ny;
  const double cx = d_ / (grid_.hx() * grid_.hx());
  const double cy = d_ / (grid_.hy() * grid_.hy());
  Field out(g);
  auto at = [&](int i, int j) { return (i < 0 || i >= nx || j < 0 || j >= ny) ? 0.0 : v[g.index(i, j)]; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double c = at(i, j);
      out[g.index(i, j)] = cx * (at(i - 1, j) - 2.0 * c + at(i + 1, j)) + cy * (at(i, j - 1) - 2.0 * c + at(i, j + 1));
    }
  return out;
}

ConvDiffModel2D::ConvDiffModel2D(Grid2D grid, double d, std::array<double, 2> c) : grid_(grid), d_(d), c_(c) {
  if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("diffusivity must be positive and finite");
  if (!std::isfinite(c[0]) || !std::isfinite(c[1])) throw ConfigError("convection velocity must be finite");
}

Grid model_grid(const Model& m) {
  return std::visit([](const auto& mm) { return Grid(mm.grid()); }, m);
}

bool is_self_adjoint(const Model& m) { return !std::holds_alternative<ConvDiffModel2D>(m); }

// ---------------------------------------------------------------------------
// Crank-Nicolson

namespace {

// Thomas factorization of I - dt/2 A for the 1-D stencil.
struct Tridiagonal {
  std::vector<double> lower;  // coupling to i - 1 of (I + dt/2 A)
  std::vector<double> diag;
  std::vector<double> upper;
  std::vector<double> c_prime;  // factorization of I - dt/2 A
  std::vector<double> inv_denom;
  std::vector<double> m_lower;

  Tridiagonal(const DiffusionModel1D& m, double dt) {
    const int n = m.grid().n_interior;
    const double s = 0.5 * dt / (m.grid().h() * m.grid().h());
    const auto& dh = m.d_half();
    lower.resize(n);
    diag.resize(n);
    upper.resize(n);
    for (int i = 0; i < n; ++i) {
      lower[i] = i > 0 ? s * dh[i] : 0.0;
      upper[i] = i + 1 < n ? s * dh[i + 1] : 0.0;
      diag[i] = -s * (dh[i] + dh[i + 1]);
    }
    c_prime.resize(n);
    inv_denom.resize(n);
    m_lower.resize(n);
    double prev_c = 0.0;
    for (int i = 0; i < n; ++i) {
      m_lower[i] = -lower[i];
      const double denom = (1.0 - diag[i]) - m_lower[i] * prev_c;
      if (!(std::abs(denom) > 0.0)) throw NumericalError("Crank-Nicolson factorization is singular");
      inv_denom[i] = 1.0 / denom;
      c_prime[i] = -upper[i] * inv_denom[i];
      prev_c = c_prime[i];
    }
  }

  void solve_in_place(std::span<double> r) const {
    const std::size_t n = r.size();
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = (r[i] - m_lower[i] * prev) * inv_denom[i];
      prev = r[i];
    }
    for (std::size_t i = n - 1; i-- > 0;) r[i] -= c_prime[i] * r[i + 1];
  }

  void apply_explicit(std::span<const double> v, std::span<double> out) const {
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = (1.0 + diag[i]) * v[i];
      if (i > 0) s += lower[i] * v[i - 1];
      if (i + 1 < n) s += upper[i] * v[i + 1];
      out[i] = s;
    }
  }
};

// Orthonormal sine transform S (symmetric, S S = I) of the Dirichlet
// second difference on n interior nodes.
std::vector<double> sine_matrix(int n) {
  std::vector<double> s(static_cast<std::size_t>(n) * n);
  const double scale = std::sqrt(2.0 / (n + 1));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) s[j * n + k] = scale * std::sin((j + 1.0) * (k + 1.0) * std::numbers::pi / (n + 1));
  return s;
}

std::vector<double> laplacian_eigenvalues(int n, double h) {
  std::vector<double> lam(n);
  for (int k = 0; k < n; ++k) {
    const double s = std::sin((k + 1) * std::numbers::pi * h / 2.0);
    lam[k] = -4.0 / (h * h) * s * s;
  }
  return lam;
}

// Exact diagonalization of the constant-coefficient 2-D operator.
struct TensorSine {
  int nx;
  int ny;
  std::vector<double> sx;
  std::vector<double> sy;
  std::vector<double> step_mult;  // r(dt lambda_kl), laid out like the field
  std::vector<double> resolvent_mult;

  TensorSine(const Grid2D& g, double d, double dt)
      : nx(g.nx), ny(g.ny), sx(sine_matrix(g.nx)), sy(sine_matrix(g.ny)) {
    const auto lx = laplacian_eigenvalues(nx, g.hx());
    const auto ly = laplacian_eigenvalues(ny, g.hy());
    step_mult.resize(static_cast<std::size_t>(nx) * ny);
    resolvent_mult.resize(step_mult.size());
    for (int l = 0; l < ny; ++l)
      for (int k = 0; k < nx; ++k) {
        const double z = dt * d * (lx[k] + ly[l]);
        step_mult[l * nx + k] = (2.0 + z) / (2.0 - z);
        resolvent_mult[l * nx + k] = 2.0 / (2.0 - z);
      }
  }

  // v <- Sy v Sx, v stored ny x nx row-major.
  void transform(std::span<double> v, std::vector<double>& tmp) const {
    const auto& k = kernels::active();
    tmp.resize(v.size());
    k.gemm(v.data(), sx.data(), tmp.data(), ny, nx, nx);
    k.gemm(sy.data(), tmp.data(), v.data(), ny, ny, nx);
  }

  void apply(std::span<double> v, const std::vector<double>& mult) const {
    std::vector<double> tmp;
    transform(v, tmp);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= mult[i];
    transform(v, tmp);
  }
};

}  // namespace

struct CrankNicolson::Impl {
  std::variant<Tridiagonal, TensorSine> solver;
  Grid grid;
};

CrankNicolson::CrankNicolson(const Model& model, double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  auto impl = std::make_shared<Impl>(Impl{
      std::visit(
          [dt](const auto& m) -> std::variant<Tridiagonal, TensorSine> {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, DiffusionModel1D>) {
              return Tridiagonal(m, dt);
            } else {
              return TensorSine(m.grid(), m.d(), dt);
            }
          },
          model),
      model_grid(model)});
  impl_ = std::move(impl);
}

Field CrankNicolson::step(const Field& v) const {
  require_dims(v.grid() == impl_->grid, "cn_step: grid mismatch");
  Field out(v.grid());
  if (const auto* tri = std::get_if<Tridiagonal>(&impl_->solver)) {
    tri->apply_explicit(v.values(), out.values());
    tri->solve_in_place(out.values());
  } else {
    out = v;
    std::get<TensorSine>(impl_->solver).apply(out.values(), std::get<TensorSine>(impl_->solver).step_mult);
  }
  return out;
}

Field CrankNicolson::resolvent(const Field& v) const {
  require_dims(v.grid() == impl_->grid, "cn resolvent: grid mismatch");
  Field out = v;
  if (const auto* tri = std::get_if<Tridiagonal>(&impl_->solver)) {
    tri->solve_in_place(out.values());
  } else {
    const auto& ts = std::get<TensorSine>(impl_->solver);
    ts.apply(out.values(), ts.resolvent_mult);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Semi-Lagrangian advection

namespace {

// Shift along one axis by `cells` grid cells: out[i] = v(i - cells) with
// cubic Lagrange interpolation and zero extension.
struct AxisShift {
  int offset;  // index of the first interpolation node relative to i
  std::array<double, 4> w;

  explicit AxisShift(double cells) {
    const double p = -cells;
    const double m = std::floor(p);
    const double t = p - m;
    offset = static_cast<int>(m) - 1;
    w = {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
         -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
  }

  // Transposed operator as another 4-tap filter.
  AxisShift transposed() const {
    AxisShift r = *this;
    r.offset = -offset - 3;
    r.w = {w[3], w[2], w[1], w[0]};
    return r;
  }
};

// Rows are contiguous: apply the filter along x for each row.
void shift_x(std::span<const double> in, std::span<double> out, int nx, int ny, const AxisShift& s) {
  const int pad = std::abs(s.offset) + 4;
  std::vector<double> buf(static_cast<std::size_t>(nx) + 2 * pad, 0.0);
  const auto& k = kernels::active();
  for (int j = 0; j < ny; ++j) {
    std::copy(in.begin() + static_cast<std::ptrdiff_t>(j) * nx, in.begin() + static_cast<std::ptrdiff_t>(j + 1) * nx,
              buf.begin() + pad);
    k.fir4(buf.data() + pad + s.offset, s.w.data(), out.data() + static_cast<std::size_t>(j) * nx, nx);
  }
}

// Along y every tap is a whole-row axpy.
void shift_y(std::span<const double> in, std::span<double> out, int nx, int ny, const AxisShift& s) {
  std::fill(out.begin(), out.end(), 0.0);
  const auto& k = kernels::active();
  for (int j = 0; j < ny; ++j) {
    double* dst = out.data() + static_cast<std::size_t>(j) * nx;
    for (int q = 0; q < 4; ++q) {
      const int src = j + s.offset + q;
      if (src < 0 || src >= ny || s.w[q] == 0.0) continue;
      k.axpy(s.w[q], in.data() + static_cast<std::size_t>(src) * nx, dst, nx);
    }
  }
}

Field advect(const ConvDiffModel2D& m, const Field& v, double dt, double sign, bool transpose) {
  const Grid g(m.grid());
  require_dims(v.grid() == g, "advect_step: grid mismatch");
  AxisShift sx(sign * m.c()[0] * dt / g.hx());
  AxisShift sy(sign * m.c()[1] * dt / g.hy());
  if (transpose) {
    sx = sx.transposed();
    sy = sy.transposed();
  }
  std::vector<double> tmp(v.size());
  Field out(g);
  shift_x(v.values(), tmp, g.nx(), g.ny(), sx);
  shift_y(tmp, out.values(), g.nx(), g.ny(), sy);
  return out;
}

}  // namespace

Field advect_step(const ConvDiffModel2D& m, const Field& v, double dt, Direction dir) {
  return advect(m, v, dt, dir == Direction::forward ? 1.0 : -1.0, false);
}

Field advect_transpose(const ConvDiffModel2D& m, const Field& v, double dt) { return advect(m, v, dt, 1.0, true); }

namespace {

Field strang(const ConvDiffModel2D& m, const CrankNicolson& cn, const Field& v, double dt, Direction dir) {
  Field half = advect_step(m, v, 0.5 * dt, dir);
  return advect_step(m, cn.step(half), 0.5 * dt, dir);
}

}  // namespace

Field strang_step(const ConvDiffModel2D& m, const Field& v, double dt, Direction dir) {
  const CrankNicolson cn(Model(m.diffusion_part()), dt);
  return strang(m, cn, v, dt, dir);
}

// ---------------------------------------------------------------------------
// Propagator

namespace {

Model diffusion_only(const Model& m) {
  if (const auto* cd = std::get_if<ConvDiffModel2D>(&m)) return cd->diffusion_part();
  return m;
}

}  // namespace

Propagator::Propagator(Model model, TimeGrid time)
    : model_(std::make_shared<const Model>(std::move(model))),
      time_(time),
      cn_(diffusion_only(*model_), time.dt()) {
  if (const auto* cd = std::get_if<ConvDiffModel2D>(model_.get())) {
    const double courant = std::max(std::abs(cd->c()[0]), std::abs(cd->c()[1])) * time.dt();
    if (courant >= 1.0) {
      std::ostringstream os;
      os << "|c| dt = " << courant << " >= 1: characteristics cross the whole domain in one step";
      warnings_.push_back(os.str());
    }
  }
}

Field Propagator::step(const Field& v, Direction dir) const {
  if (const auto* cd = std::get_if<ConvDiffModel2D>(model_.get())) return strang(*cd, cn_, v, time_.dt(), dir);
  return cn_.step(v);
}

Field Propagator::step_transpose(const Field& v) const {
  if (const auto* cd = std::get_if<ConvDiffModel2D>(model_.get())) {
    const double half = 0.5 * time_.dt();
    return advect_transpose(*cd, cn_.step(advect_transpose(*cd, v, half)), half);
  }
  return cn_.step(v);
}

Field cn_step(const Propagator& p, const Field& v) { return p.cn_step(v); }

std::vector<Field> forward_trajectory(const Propagator& p, const Field& x0, const Field& f) {
  require_dims(x0.grid() == p.grid() && f.grid() == p.grid(), "forward_trajectory: grid mismatch");
  const double dt = p.time().dt();
  Field source = f;
  source += p.step(f);
  source *= 0.5 * dt;
  const bool forced = kernels::sum_abs(f.values()) > 0.0;

  std::vector<Field> traj;
  traj.reserve(p.time().n_t + 1);
  traj.push_back(x0);
  for (int k = 0; k < p.time().n_t; ++k) {
    Field next = p.step(traj.back());
    if (forced) next += source;
    traj.push_back(std::move(next));
  }
  return traj;
}

}  // namespace recon
