#include "recon/reconstruction.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <sstream>

#include "recon/errors.hpp"
#include "recon/parallel.hpp"

namespace recon {

std::vector<double> coefficient_bounds(const std::vector<double>& epsilons, const std::vector<double>& control_norms,
                                       double delta, double t_f, double x_norm_est) {
  require_dims(epsilons.size() == control_norms.size(), "error_budget: length mismatch");
  std::vector<double> b(epsilons.size());
  for (std::size_t k = 0; k < b.size(); ++k)
    b[k] = epsilons[k] * x_norm_est + delta * std::sqrt(t_f) * control_norms[k];
  return b;
}

double error_budget(const std::vector<double>& epsilons, const std::vector<double>& control_norms, double delta,
                    double t_f, double x_norm_est) {
  double s = 0.0;
  for (double v : coefficient_bounds(epsilons, control_norms, delta, t_f, x_norm_est)) s += v;
  return s;
}

namespace {

ReconstructionResult dual(const std::string& method, const Basis& basis, const std::vector<ControlSolution>& controls,
                          const MeasurementSeries& data, double sign, const std::vector<double>& offsets,
                          double delta, std::optional<double> x_norm) {
  require_dims(controls.size() == basis.size(), "reconstruction: basis and control counts differ");
  ReconstructionResult r{method, {}, Field(basis.grid()), {}, {}, {}, delta, 0.0, true, 0.0, {}};
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto& c = controls[k];
    require_dims(c.u.time() == data.time() && c.u.channels() == data.channels(),
                 "reconstruction: control and data shapes differ");
    const double a = sign * inner_z(c.u, data) + (offsets.empty() ? 0.0 : offsets[k]);
    r.coefficients.push_back(a);
    r.epsilons.push_back(c.residual);
    r.control_norms.push_back(norm_z(c.u));
    r.reliable.push_back(c.reliable());
    if (!c.reliable()) r.warnings.push_back("coefficient " + std::to_string(k + 1) + " unreliable: residual > 0.5");
    r.field.add_scaled(a, basis[k]);
  }
  r.x_norm_est = x_norm.value_or(norm_x(r.field));
  r.x_norm_is_estimate = !x_norm.has_value();
  r.error_budget = error_budget(r.epsilons, r.control_norms, delta, data.time().t_f, r.x_norm_est);
  return r;
}

}  // namespace

ReconstructionResult reconstruct_initial(const Basis& basis, const std::vector<ControlSolution>& controls,
                                         const MeasurementSeries& y, const MeasurementSeries& xi, double delta,
                                         std::optional<double> x_norm) {
  require_dims(y.same_shape(xi), "reconstruction: y and xi shapes differ");
  return dual("dual_initial", basis, controls, y - xi, 1.0, {}, delta, x_norm);
}

std::vector<Field> forecast_targets(const ControlMap& map, const Basis& basis) {
  std::vector<Field> targets(basis.size(), Field(map.grid()));
  parallel_for(basis.size(), [&](std::size_t k) {
    Field v = basis[k];
    for (int s = 0; s < map.time().n_t; ++s) v = map.propagator().step_transpose(v);
    v *= -1.0;
    targets[k] = std::move(v);
  });
  return targets;
}

ReconstructionResult reconstruct_final(const Basis& basis, const std::vector<ControlSolution>& controls,
                                       const MeasurementSeries& y, const MeasurementSeries& xi,
                                       const std::optional<Field>& forced_final, double delta,
                                       std::optional<double> x_norm) {
  require_dims(y.same_shape(xi), "reconstruction: y and xi shapes differ");
  std::vector<double> offsets;
  if (forced_final) offsets = project(basis, *forced_final);
  return dual("dual_final", basis, controls, xi - y, 1.0, offsets, delta, x_norm);
}

ReconstructionResult reconstruct_final(const Basis& basis, const ControlMap& map, const RegConfig& cfg,
                                       const MeasurementSeries& y, const MeasurementSeries& xi,
                                       const std::optional<Field>& forced_final, double delta) {
  const auto controls = solve_controls(map, forecast_targets(map, basis), cfg);
  return reconstruct_final(basis, controls, y, xi, forced_final, delta);
}

std::vector<ControlSignal> sine_control_basis(const TimeGrid& time, int channels, int modes) {
  if (modes < 1) throw ConfigError("control basis needs at least one mode");
  std::vector<ControlSignal> out;
  for (int c = 0; c < channels; ++c)
    for (int j = 1; j <= modes; ++j) {
      ControlSignal u(time, channels);
      for (int k = 0; k < time.n_t; ++k)
        u.at(k, c) = std::sqrt(2.0) * std::sin(j * std::numbers::pi * time.mid(k) / time.t_f);
      out.push_back(std::move(u));
    }
  return out;
}

VariationResult variation_reconstruct(const std::vector<ControlSignal>& u_basis, const ControlMap& map,
                                      const MeasurementSeries& y, const MeasurementSeries& xi,
                                      const VariationOptions& opt, double delta) {
  require_dims(y.same_shape(xi), "variation: y and xi shapes differ");
  if (u_basis.empty()) throw ConfigError("variation: empty control basis");
  const std::size_t m = u_basis.size();
  VariationResult vr{{"variation", {}, Field(map.grid()), {}, {}, {}, delta, 0.0, true, 0.0, {}},
                     std::vector<Field>(m, Field(map.grid())),
                     u_basis,
                     {},
                     {},
                     0.0,
                     0.0};
  parallel_for(m, [&](std::size_t k) { vr.p[k] = map.apply_L(u_basis[k]); });

  if (opt.orthonormalize) {
    for (std::size_t k = 0; k < m; ++k) {
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t j = 0; j < k; ++j) {
          const double r = inner_x(vr.p[j], vr.p[k]);
          vr.p[k].add_scaled(-r, vr.p[j]);
          vr.u[k].add_scaled(-r, vr.u[j]);
        }
      const double nrm = norm_x(vr.p[k]);
      if (!(nrm > 0.0)) throw NumericalError("variation: L u_" + std::to_string(k + 1) + " is dependent");
      vr.p[k] *= 1.0 / nrm;
      vr.u[k] *= 1.0 / nrm;
    }
  }

  const auto data = y - xi;
  const auto M = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd G(M, M);
  Eigen::VectorXd rhs(M);
  for (Eigen::Index k = 0; k < M; ++k) {
    rhs[k] = inner_z(vr.u[k], data);
    for (Eigen::Index l = k; l < M; ++l) G(k, l) = G(l, k) = inner_x(vr.p[k], vr.p[l]);
  }
  vr.ridge = opt.ridge >= 0.0 ? opt.ridge : 1e-10 * G.trace() / static_cast<double>(m);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues()(0);
  const double lmax = eig.eigenvalues()(M - 1);
  vr.condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  auto& res = vr.result;
  if (vr.condition > 1e12) {
    std::ostringstream os;
    os << "Gram matrix is nearly singular (cond " << vr.condition << "); the control basis is close to dependent";
    res.warnings.push_back(os.str());
  }

  Eigen::MatrixXd A = G;
  A.diagonal().array() += vr.ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError("variation: Cholesky failed; G + ridge I is not positive definite, increase the ridge");
  const Eigen::VectorXd beta = llt.solve(rhs);

  vr.gram.assign(G.data(), G.data() + G.size());
  vr.rhs.assign(rhs.data(), rhs.data() + rhs.size());
  double noise_sq = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    res.coefficients.push_back(beta[static_cast<Eigen::Index>(k)]);
    res.field.add_scaled(beta[static_cast<Eigen::Index>(k)], vr.p[k]);
    const double un = norm_z(vr.u[k]);
    res.control_norms.push_back(un);
    res.epsilons.push_back(0.0);
    res.reliable.push_back(true);
    const double e = delta * std::sqrt(y.time().t_f) * un;
    noise_sq += e * e;
  }
  res.x_norm_est = norm_x(res.field);
  // Noise part of the field error: sqrt(e' (G + ridge)^-1 e) <= ||e|| / sqrt(lambda_min).
  res.error_budget = std::sqrt(noise_sq / (std::max(lmin, 0.0) + vr.ridge));
  return vr;
}

}  // namespace recon
