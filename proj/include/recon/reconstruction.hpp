#pragma once

// Dual-method reconstruction of x(0) and x(t_f), the Gram-matrix variation
// and the coefficient error budget.

#include <optional>
#include <string>
#include <vector>

#include "recon/bases.hpp"
#include "recon/control.hpp"

namespace recon {

struct ReconstructionResult {
  std::string method;  // dual_initial | dual_final | variation
  std::vector<double> coefficients;
  Field field;
  std::vector<double> epsilons;
  std::vector<double> control_norms;
  std::vector<bool> reliable;
  double delta = 0.0;
  /// ||x_0|| used in the budget; ||x_0^m|| unless supplied.
  double x_norm_est = 0.0;
  bool x_norm_is_estimate = true;
  double error_budget = 0.0;
  std::vector<std::string> warnings;
};

/// sum_k (eps_k x_norm + delta sqrt(t_f) ||u_k||_Z)
double error_budget(const std::vector<double>& epsilons, const std::vector<double>& control_norms, double delta,
                    double t_f, double x_norm_est);
/// Per-coefficient terms of the same bound.
std::vector<double> coefficient_bounds(const std::vector<double>& epsilons, const std::vector<double>& control_norms,
                                       double delta, double t_f, double x_norm_est);

/// alpha_k = inner_z(u_k, y - xi), x_0^m = sum alpha_k phi_k.
ReconstructionResult reconstruct_initial(const Basis& basis, const std::vector<ControlSolution>& controls,
                                         const MeasurementSeries& y, const MeasurementSeries& xi, double delta = 0.0,
                                         std::optional<double> x_norm = std::nullopt);

/// Targets -(F')^{n_t} phi_k for the forecast: L u_k = -S*_{t_f} phi_k.
std::vector<Field> forecast_targets(const ControlMap& map, const Basis& basis);

/// alpha_k = inner_z(u_k, xi - y) + <r, phi_k>, r the source response at t_f
/// (zero when f = 0).
ReconstructionResult reconstruct_final(const Basis& basis, const std::vector<ControlSolution>& controls,
                                       const MeasurementSeries& y, const MeasurementSeries& xi,
                                       const std::optional<Field>& forced_final = std::nullopt, double delta = 0.0,
                                       std::optional<double> x_norm = std::nullopt);

/// Solves the forecast controls with cfg and reconstructs x(t_f).
ReconstructionResult reconstruct_final(const Basis& basis, const ControlMap& map, const RegConfig& cfg,
                                       const MeasurementSeries& y, const MeasurementSeries& xi,
                                       const std::optional<Field>& forced_final = std::nullopt, double delta = 0.0);

struct VariationOptions {
  /// < 0 selects 1e-10 trace(G) / m.
  double ridge = -1.0;
  /// Gram-Schmidt the p_k (and the matching control combinations) first.
  bool orthonormalize = false;
};

struct VariationResult {
  ReconstructionResult result;
  std::vector<Field> p;             // L u_k after the optional pre-pass
  std::vector<ControlSignal> u;     // matching controls
  std::vector<double> gram;         // m x m, row-major
  std::vector<double> rhs;
  double ridge = 0.0;
  double condition = 0.0;
};

/// x_0 ~ sum beta_k L u_k with (G + ridge I) beta = rhs, G_kl = <L u_k, L u_l>,
/// rhs_k = inner_z(u_k, y - xi).
VariationResult variation_reconstruct(const std::vector<ControlSignal>& u_basis, const ControlMap& map,
                                      const MeasurementSeries& y, const MeasurementSeries& xi,
                                      const VariationOptions& opt = {}, double delta = 0.0);

/// sqrt(2) sin(j pi t / t_f) at the midpoints, j = 1..J, for every sensor.
std::vector<ControlSignal> sine_control_basis(const TimeGrid& time, int channels, int modes);

}  // namespace recon
