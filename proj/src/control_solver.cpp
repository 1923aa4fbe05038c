#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>

#include "recon/control.hpp"
#include "recon/errors.hpp"
#include "recon/kernels.hpp"
#include "recon/parallel.hpp"

namespace recon {

namespace {

using Vec = Eigen::VectorXd;

Vec to_vec(const ControlSignal& u) { return Eigen::Map<const Vec>(u.values().data(), u.values().size()); }

ControlSignal to_control(const Vec& v, const TimeGrid& time, int channels) {
  return {time, channels, std::vector<double>(v.data(), v.data() + v.size())};
}

// (D'D u) for forward differences along time, per channel; free ends.
Vec diff_normal(const Vec& u, int n, int nc, const Vec* inv_w) {
  Vec out = Vec::Zero(u.size());
  for (int k = 0; k + 1 < n; ++k)
    for (int c = 0; c < nc; ++c) {
      const Eigen::Index a = static_cast<Eigen::Index>(k) * nc + c;
      const Eigen::Index b = a + nc;
      double du = u[b] - u[a];
      if (inv_w) du *= (*inv_w)[a];
      out[b] += du;
      out[a] -= du;
    }
  return out;
}

}  // namespace

struct ControlSolver::Impl {
  bool dense = false;
  Eigen::MatrixXd columns;  // dense mode: L as a grid.size() x (n_t * channels) matrix
  Eigen::MatrixXd normal;   // dense mode: Z-metric L*L
  double cell_weight = 1.0;
  double lambda_h = 0.0;    // largest eigenvalue of the data/variance Hessian
};

namespace {

struct Problem {
  const ControlMap& map;
  const ControlSolver::Impl& impl;
  const Penalties& eta;
  int n;
  int nc;
  double dt;

  double var_scale() const { return eta.variance * eta.sigma * eta.sigma; }

  // H v with H = L*L + variance * sigma^2 V*V (Z-metric). pen_var receives
  // sigma^2/2 dt sum ||p^k||^2 when computed matrix-free.
  Vec apply_h(const Vec& v, double* pen_var = nullptr) const {
    if (impl.dense) {
      if (pen_var) *pen_var = 0.0;
      return impl.normal * v;
    }
    const auto u = to_control(v, map.time(), nc);
    const double s = var_scale();
    std::vector<Field> p;
    const Field lu = map.apply_L(u, s != 0.0 ? &p : nullptr);
    if (pen_var) {
      double e = 0.0;
      for (const auto& pk : p) e += dt * inner_x(pk, pk);
      *pen_var = 0.5 * eta.sigma * eta.sigma * e;
    }
    return to_vec(map.apply_Lstar_driven(lu, s, p));
  }

  Vec apply_lt(const Field& phi) const {
    if (impl.dense) {
      Eigen::Map<const Vec> f(phi.values().data(), phi.values().size());
      return (impl.cell_weight / dt) * (impl.columns.transpose() * f);
    }
    return to_vec(map.apply_Lstar(phi));
  }

  double zdot(const Vec& a, const Vec& b) const { return dt * a.dot(b); }

  // Smooth regularizer Z-gradient (h1, l2 and the lagged TV quadratic).
  Vec apply_r(const Vec& u, const Vec* tv_inv_w) const {
    Vec out = eta.l2 * u;
    if (eta.h1 > 0.0) out += (eta.h1 / (dt * dt)) * diff_normal(u, n, nc, nullptr);
    if (eta.tv > 0.0 && tv_inv_w) out += (eta.tv / dt) * diff_normal(u, n, nc, tv_inv_w);
    return out;
  }

  double r_bound(const Vec* tv_inv_w) const {
    double b = eta.l2 + 4.0 * eta.h1 / (dt * dt);
    if (eta.tv > 0.0 && tv_inv_w) b += 4.0 * eta.tv * tv_inv_w->maxCoeff() / dt;
    return b;
  }

  PenaltyValues penalties(const Vec& u) const {
    PenaltyValues v;
    v.l1 = dt * u.lpNorm<1>();
    v.l2 = 0.5 * dt * u.squaredNorm();
    for (int k = 0; k + 1 < n; ++k)
      for (int c = 0; c < nc; ++c) {
        const double du = u[(k + 1) * nc + c] - u[k * nc + c];
        v.h1 += 0.5 * du * du / dt;
        v.tv += std::sqrt(du * du + eta.tv_eps * eta.tv_eps) - eta.tv_eps;
      }
    return v;
  }

  double weighted(const PenaltyValues& p, double var) const {
    return eta.l1 * p.l1 + eta.h1 * p.h1 + eta.l2 * p.l2 + eta.tv * p.tv + eta.variance * var;
  }
};

double power_lambda(const Problem& pb, int iters, std::size_t size) {
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Vec v(static_cast<Eigen::Index>(size));
  for (auto& x : v) x = normal(rng);
  v /= std::sqrt(pb.zdot(v, v));
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vec hv = pb.apply_h(v);
    lambda = pb.zdot(v, hv);
    const double nrm = std::sqrt(pb.zdot(hv, hv));
    if (!(nrm > 0.0)) return 0.0;
    v = hv / nrm;
  }
  return lambda;
}

struct InnerResult {
  Vec u;
  Vec hu;
  int iterations = 0;
  bool converged = false;
};

}  // namespace

ControlSolver::ControlSolver(const ControlMap& map, RegConfig cfg) : map_(map), cfg_(std::move(cfg)) {
  const auto& e = cfg_.eta;
  for (double w : {e.l1, e.h1, e.l2, e.tv, e.variance, e.sigma})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("penalty weights must be finite and nonnegative");
  impl_ = std::make_unique<Impl>();
  impl_->cell_weight = map.grid().cell_weight();

  const std::size_t cols = static_cast<std::size_t>(map.time().n_t) * map.channels();
  const std::size_t bytes = 8 * cols * (map.grid().size() + cols);
  const bool variance = e.variance > 0.0 && e.sigma > 0.0;
  switch (cfg_.opt.assembly) {
    case Assembly::dense:
      if (variance) throw ConfigError("dense assembly does not support the variance penalty");
      impl_->dense = true;
      break;
    case Assembly::matrix_free: impl_->dense = false; break;
    case Assembly::automatic: impl_->dense = !variance && bytes <= cfg_.opt.assemble_limit_bytes; break;
  }

  if (impl_->dense) {
    // Column (k, c) of L is (F')^k b_c with b_c = dt/2 (I + F') C* e_c.
    const int n = map.time().n_t;
    const int nc = map.channels();
    const double half_dt = 0.5 * map.time().dt();
    auto& L = impl_->columns;
    L.resize(static_cast<Eigen::Index>(map.grid().size()), static_cast<Eigen::Index>(cols));
    std::vector<double> e_c(nc, 0.0);
    for (int c = 0; c < nc; ++c) {
      std::fill(e_c.begin(), e_c.end(), 0.0);
      e_c[c] = half_dt;
      Field q = map.observation().apply_adjoint(e_c);
      Field v = map.propagator().step_transpose(q);
      v += q;
      for (int k = 0; k < n; ++k) {
        L.col(static_cast<Eigen::Index>(k) * nc + c) = Eigen::Map<const Vec>(v.values().data(), v.values().size());
        if (k + 1 < n) v = map.propagator().step_transpose(v);
      }
    }
    const auto N = static_cast<Eigen::Index>(cols);
    impl_->normal = Eigen::MatrixXd::Zero(N, N);
    impl_->normal.selfadjointView<Eigen::Lower>().rankUpdate(L.transpose(), impl_->cell_weight / map.time().dt());
    impl_->normal.triangularView<Eigen::StrictlyUpper>() = impl_->normal.transpose();
  }

  if (cfg_.opt.lipschitz > 0.0) {
    impl_->lambda_h = cfg_.opt.lipschitz;
  } else if (e.l1 > 0.0) {
    const Problem pb{map, *impl_, cfg_.eta, map.time().n_t, map.channels(), map.time().dt()};
    impl_->lambda_h = 1.1 * power_lambda(pb, cfg_.opt.power_iters, cols);
  }
  lipschitz_ = impl_->lambda_h;
}

ControlSolver::~ControlSolver() = default;
ControlSolver::ControlSolver(ControlSolver&&) noexcept = default;

bool ControlSolver::dense() const { return impl_->dense; }

namespace {

// Conjugate gradient on (H + R) u = b.
InnerResult solve_cg(const Problem& pb, const Vec& b, Vec u, const Vec* inv_w, const OptimizerOptions& opt,
                     const std::function<void(const Vec&, const Vec&)>& record) {
  InnerResult res;
  Vec hu = u.isZero(0.0) ? Vec::Zero(u.size()) : pb.apply_h(u);
  Vec r = b - hu - pb.apply_r(u, inv_w);
  const double bnorm = std::sqrt(pb.zdot(b, b));
  const double stop = opt.cg_tol * (bnorm > 0.0 ? bnorm : 1.0);
  Vec d = r;
  double rr = pb.zdot(r, r);
  record(u, hu);
  for (int it = 0; it < opt.max_cg; ++it) {
    if (std::sqrt(rr) <= stop) {
      res.converged = true;
      break;
    }
    const Vec hd = pb.apply_h(d);
    const Vec qd = hd + pb.apply_r(d, inv_w);
    const double dqd = pb.zdot(d, qd);
    if (!(dqd > 0.0)) break;
    const double a = rr / dqd;
    u += a * d;
    hu += a * hd;
    r -= a * qd;
    const double rr_new = pb.zdot(r, r);
    d = r + (rr_new / rr) * d;
    rr = rr_new;
    res.iterations = it + 1;
    record(u, hu);
  }
  if (!res.converged && std::sqrt(rr) <= stop) res.converged = true;
  res.u = std::move(u);
  res.hu = std::move(hu);
  return res;
}

// Monotone FISTA for the quadratic part plus l1 * dt sum |u|.
InnerResult solve_fista(const Problem& pb, const Vec& b, double phi_sq, Vec u, const Vec* inv_w, double lambda_h,
                        const OptimizerOptions& opt,
                        const std::function<void(const Vec&, const Vec&)>& record) {
  InnerResult res;
  const double lip = lambda_h + pb.r_bound(inv_w);
  if (!(lip > 0.0)) throw NumericalError("FISTA: non-positive Lipschitz estimate");
  const double step = 1.0 / lip;

  auto objective = [&](const Vec& x, const Vec& hx) {
    const double quad = 0.5 * pb.zdot(x, hx) - pb.zdot(b, x) + 0.5 * phi_sq;
    const Vec rx = pb.apply_r(x, inv_w);
    return quad + 0.5 * pb.zdot(x, rx) + pb.eta.l1 * pb.dt * x.lpNorm<1>();
  };

  Vec x = std::move(u);
  Vec hx = x.isZero(0.0) ? Vec::Zero(x.size()) : pb.apply_h(x);
  Vec x_prev = x;
  Vec hx_prev = hx;
  Vec y = x;
  Vec hy = hx;
  double fx = objective(x, hx);
  double t = 1.0;
  int quiet = 0;
  bool restarted = true;  // y == x
  record(x, hx);
  for (int it = 0; it < opt.max_outer; ++it) {
    Vec z = y - step * (hy + pb.apply_r(y, inv_w) - b);
    kernels::soft_threshold(std::span<double>(z.data(), static_cast<std::size_t>(z.size())), step * pb.eta.l1);
    Vec hz = pb.apply_h(z);
    const double fz = objective(z, hz);
    const double f_old = fx;
    res.iterations = it + 1;
    if (fz > fx) {
      // Momentum overshot: restart from x. A rejected plain step means x is stationary up to rounding.
      quiet = restarted ? quiet + 1 : quiet;
      t = 1.0;
      y = x;
      hy = hx;
      restarted = true;
      record(x, hx);
      if (quiet >= 10) {
        res.converged = true;
        break;
      }
      continue;
    }
    x_prev = x;
    hx_prev = hx;
    x = std::move(z);
    hx = std::move(hz);
    fx = fz;
    const double t_new = opt.accelerated ? 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)) : 1.0;
    const double c = (t - 1.0) / t_new;
    y = x + c * (x - x_prev);
    hy = hx + c * (hx - hx_prev);
    t = t_new;
    restarted = false;
    record(x, hx);

    const double decrease = f_old - fx;
    quiet = decrease <= opt.tol * std::max(std::abs(fx), 1e-300) ? quiet + 1 : 0;
    if (x.isZero(0.0) && x_prev.isZero(0.0)) quiet = std::max(quiet, 10);
    if (quiet >= 10) {
      res.converged = true;
      break;
    }
  }
  res.u = std::move(x);
  res.hu = std::move(hx);
  return res;
}

}  // namespace

ControlSolution ControlSolver::solve(const Field& phi) const { return solve(phi, cfg_.eta, nullptr); }

ControlSolution ControlSolver::solve(const Field& phi, const Penalties& eta, const ControlSignal* warm) const {
  require_dims(phi.grid() == map_.grid(), "solve_control: target grid mismatch");
  for (double w : {eta.l1, eta.h1, eta.l2, eta.tv, eta.variance, eta.sigma})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("penalty weights must be finite and nonnegative");
  const bool any = eta.l1 > 0.0 || eta.h1 > 0.0 || eta.l2 > 0.0 || eta.tv > 0.0 ||
                   (eta.variance > 0.0 && eta.sigma > 0.0);
  if (!any) throw ConfigError("ill-posed configuration: every penalty weight is zero");
  if (eta.variance != cfg_.eta.variance || eta.sigma != cfg_.eta.sigma)
    throw ConfigError("variance weight differs from the one this solver was prepared for");

  const int n = map_.time().n_t;
  const int nc = map_.channels();
  const double dt = map_.time().dt();
  const Problem pb{map_, *impl_, eta, n, nc, dt};
  const auto& opt = cfg_.opt;

  double lambda_h = impl_->lambda_h;
  if (eta.l1 > 0.0 && !(lambda_h > 0.0)) lambda_h = 1.1 * power_lambda(pb, opt.power_iters, n * nc);

  const Vec b = pb.apply_lt(phi);
  const double phi_sq = inner_x(phi, phi);
  Vec u = warm ? to_vec(*warm) : Vec::Zero(static_cast<Eigen::Index>(n) * nc);

  ControlSolution sol{map_.zero_control(), 0.0, 0.0, {}, 0.0, 0.0, 0, false, {}};
  auto record = [&](const Vec& x, const Vec& hx) {
    const PenaltyValues pv = pb.penalties(x);
    const double quad = 0.5 * pb.zdot(x, hx) - pb.zdot(b, x) + 0.5 * phi_sq;
    // The variance share of quad is not separable here without another
    // sweep; the trace reports fidelity including it.
    sol.trace.push_back({static_cast<int>(sol.trace.size()), quad + pb.weighted(pv, 0.0), quad, pv});
  };

  int iterations = 0;
  bool converged = false;
  if (eta.tv > 0.0) {
    // Majorize-minimize: sqrt(s^2 + e^2) <= (s^2 + w^2) / (2 w) at w = sqrt(s_old^2 + e^2).
    Vec inv_w(u.size());
    double prev = std::numeric_limits<double>::infinity();
    auto noop = [](const Vec&, const Vec&) {};
    for (int outer = 0; outer < opt.tv_outer; ++outer) {
      inv_w.setZero();
      for (int k = 0; k + 1 < n; ++k)
        for (int c = 0; c < nc; ++c) {
          const double du = u[(k + 1) * nc + c] - u[k * nc + c];
          inv_w[k * nc + c] = 1.0 / std::sqrt(du * du + eta.tv_eps * eta.tv_eps);
        }
      InnerResult in = eta.l1 > 0.0 ? solve_fista(pb, b, phi_sq, u, &inv_w, lambda_h, opt, noop)
                                    : solve_cg(pb, b, u, &inv_w, opt, noop);
      iterations += in.iterations;
      u = std::move(in.u);
      record(u, in.hu);
      const double obj = sol.trace.back().objective;
      if (prev - obj <= opt.tol * std::max(std::abs(obj), 1e-300)) {
        converged = true;
        break;
      }
      prev = obj;
    }
  } else if (eta.l1 > 0.0) {
    InnerResult in = solve_fista(pb, b, phi_sq, u, nullptr, lambda_h, opt, record);
    iterations = in.iterations;
    converged = in.converged;
    u = std::move(in.u);
  } else {
    InnerResult in = solve_cg(pb, b, u, nullptr, opt, record);
    iterations = in.iterations;
    converged = in.converged;
    u = std::move(in.u);
  }

  sol.u = to_control(u, map_.time(), nc);
  std::vector<Field> p;
  Field lu = map_.apply_L(sol.u, &p);
  sol.p_energy = 0.0;
  for (const auto& pk : p) sol.p_energy += dt * inner_x(pk, pk);
  lu -= phi;
  sol.residual = norm_x(lu);
  sol.fidelity = 0.5 * sol.residual * sol.residual;
  sol.penalties = pb.penalties(u);
  sol.penalties.variance = 0.5 * eta.sigma * eta.sigma * sol.p_energy;
  sol.objective = sol.fidelity + pb.weighted(sol.penalties, sol.penalties.variance);
  sol.iterations = iterations;
  sol.converged = converged;
  if (!sol.u.all_finite()) throw NumericalError("control solve produced non-finite values");
  return sol;
}

ControlSolution solve_control(const ControlMap& map, const Field& phi, const RegConfig& cfg) {
  return ControlSolver(map, cfg).solve(phi);
}

std::vector<ControlSolution> solve_controls(const ControlMap& map, const std::vector<Field>& targets,
                                            const RegConfig& cfg) {
  const ControlSolver solver(map, cfg);
  std::vector<std::optional<ControlSolution>> out(targets.size());
  parallel_for(targets.size(), [&](std::size_t k) { out[k] = solver.solve(targets[k]); });
  std::vector<ControlSolution> sols;
  sols.reserve(out.size());
  for (auto& s : out) sols.push_back(std::move(*s));
  return sols;
}

}  // namespace recon
