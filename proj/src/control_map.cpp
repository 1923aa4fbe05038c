#include <Eigen/Dense>
#include <cmath>

#include "recon/control.hpp"
#include "recon/errors.hpp"
#include "recon/kernels.hpp"

namespace recon {

ControlMap::ControlMap(Propagator propagator, ObservationOp observation)
    : prop_(std::move(propagator)), obs_(std::move(observation)) {
  require_dims(prop_.grid() == obs_.grid(), "control map: propagator and observation grids differ");
}

Field ControlMap::apply_L(const ControlSignal& u, std::vector<Field>* p_nodes) const {
  require_dims(u.time() == time() && u.channels() == channels(), "apply_L: control shape mismatch");
  const int n = time().n_t;
  const double half_dt = 0.5 * time().dt();
  if (p_nodes) p_nodes->assign(n, Field(grid()));
  Field p(grid());
  Field q(grid());
  for (int k = n - 1; k >= 0; --k) {
    std::fill(q.values().begin(), q.values().end(), 0.0);
    obs_.add_adjoint(half_dt, u.sample(k), q);
    p += q;
    p = prop_.step_transpose(p);
    p += q;
    if (p_nodes) (*p_nodes)[k] = p;
  }
  return p;
}

ControlSignal ControlMap::apply_Lstar(const Field& x) const { return apply_Lstar_driven(x, 0.0, {}); }

ControlSignal ControlMap::apply_Lstar_driven(const Field& x, double s, const std::vector<Field>& p_nodes) const {
  require_dims(x.grid() == grid(), "apply_Lstar: grid mismatch");
  const int n = time().n_t;
  const double w = s * time().dt();
  if (s != 0.0) require_dims(p_nodes.size() == static_cast<std::size_t>(n), "apply_Lstar: missing adjoint states");
  ControlSignal out(time(), channels());
  Field z = x;
  if (s != 0.0) z.add_scaled(w, p_nodes[0]);
  ObsVector cz = obs_.apply(z);
  for (int k = 0; k < n; ++k) {
    Field fz = prop_.step(z);
    const ObsVector cfz = obs_.apply(fz);
    auto dst = out.sample(k);
    for (int c = 0; c < channels(); ++c) dst[c] = 0.5 * (cz[c] + cfz[c]);
    if (k + 1 < n) {
      if (s != 0.0) {
        fz.add_scaled(w, p_nodes[k + 1]);
        cz = obs_.apply(fz);
      } else {
        cz = cfz;
      }
      z = std::move(fz);
    }
  }
  return out;
}

MeasurementSeries ControlMap::apply_Lstar_series(const Field& x) const {
  require_dims(x.grid() == grid(), "apply_Lstar: grid mismatch");
  MeasurementSeries out(time(), channels());
  Field z = x;
  for (int k = 0; k <= time().n_t; ++k) {
    if (k > 0) z = prop_.step(z);
    const ObsVector cz = obs_.apply(z);
    std::copy(cz.begin(), cz.end(), out.sample(k).begin());
  }
  return out;
}

Field apply_L(const ControlMap& map, const ControlSignal& u) { return map.apply_L(u); }
ControlSignal apply_Lstar(const ControlMap& map, const Field& x) { return map.apply_Lstar(x); }

const char* penalty_name(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::l1: return "l1";
    case PenaltyKind::h1: return "h1";
    case PenaltyKind::l2: return "l2";
    case PenaltyKind::tv: return "tv";
    case PenaltyKind::variance: return "variance";
  }
  return "?";
}

PenaltyKind parse_penalty(const std::string& name) {
  for (auto k : {PenaltyKind::l1, PenaltyKind::h1, PenaltyKind::l2, PenaltyKind::tv, PenaltyKind::variance})
    if (name == penalty_name(k)) return k;
  throw ConfigError("unknown penalty '" + name + "' (expected l1, h1, l2, tv or variance)");
}

double Penalties::weight(PenaltyKind k) const {
  switch (k) {
    case PenaltyKind::l1: return l1;
    case PenaltyKind::h1: return h1;
    case PenaltyKind::l2: return l2;
    case PenaltyKind::tv: return tv;
    case PenaltyKind::variance: return variance;
  }
  return 0.0;
}

void Penalties::set_weight(PenaltyKind k, double v) {
  switch (k) {
    case PenaltyKind::l1: l1 = v; break;
    case PenaltyKind::h1: h1 = v; break;
    case PenaltyKind::l2: l2 = v; break;
    case PenaltyKind::tv: tv = v; break;
    case PenaltyKind::variance: variance = v; break;
  }
}

double PenaltyValues::get(PenaltyKind k) const {
  switch (k) {
    case PenaltyKind::l1: return l1;
    case PenaltyKind::h1: return h1;
    case PenaltyKind::l2: return l2;
    case PenaltyKind::tv: return tv;
    case PenaltyKind::variance: return variance;
  }
  return 0.0;
}

PenaltyValues evaluate_penalties(const ControlMap& map, const ControlSignal& u, const Penalties& eta,
                                 double* p_energy) {
  const double dt = u.time().dt();
  const int n = u.time().n_t;
  const int nc = u.channels();
  PenaltyValues v;
  v.l1 = dt * kernels::sum_abs(u.values());
  v.l2 = 0.5 * dt * kernels::sum_sq(u.values());
  for (int k = 0; k + 1 < n; ++k)
    for (int c = 0; c < nc; ++c) {
      const double du = u.at(k + 1, c) - u.at(k, c);
      v.h1 += 0.5 * du * du / dt;
      v.tv += std::sqrt(du * du + eta.tv_eps * eta.tv_eps) - eta.tv_eps;
    }
  if (p_energy || eta.variance > 0.0) {
    std::vector<Field> p;
    map.apply_L(u, &p);
    double e = 0.0;
    for (const auto& pk : p) e += dt * inner_x(pk, pk);
    v.variance = 0.5 * eta.sigma * eta.sigma * e;
    if (p_energy) *p_energy = e;
  }
  return v;
}

double observability_min_eig(const ControlMap& map, const std::vector<Field>& basis, int iters) {
  if (iters < 1) throw ConfigError("observability_min_eig: iters must be >= 1");
  const auto m = static_cast<Eigen::Index>(basis.size());
  if (m == 0) return 0.0;
  std::vector<ControlSignal> images;
  images.reserve(basis.size());
  for (const auto& phi : basis) images.push_back(map.apply_Lstar(phi));
  Eigen::MatrixXd gram(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = j; k < m; ++k) gram(j, k) = gram(k, j) = inner_z(images[j], images[k]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues()(0));
}

}  // namespace recon
