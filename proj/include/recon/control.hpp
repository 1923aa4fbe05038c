#pragma once

// The control map L u = int_0^tf S*_s C* u(s) ds, its transpose, the
// regularized solve of L u = phi and balance-principle parameter selection.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "recon/observation.hpp"
#include "recon/propagators.hpp"
#include "recon/spaces.hpp"

namespace recon {

/// Discrete L with midpoint controls. With F the forward step and F' its
/// transpose, p^n = 0 and
///   p^k = F'(p^{k+1} + dt/2 C* u_{k+1/2}) + dt/2 C* u_{k+1/2},
/// so that L u = p^0. The transpose under (inner_x, inner_z) is
///   (L* x)_{k+1/2} = C (F^k x + F^{k+1} x) / 2.
class ControlMap {
 public:
  ControlMap(Propagator propagator, ObservationOp observation);

  const Propagator& propagator() const { return prop_; }
  const ObservationOp& observation() const { return obs_; }
  const TimeGrid& time() const { return prop_.time(); }
  const Grid grid() const { return prop_.grid(); }
  int channels() const { return obs_.channels(); }

  /// L u. If p_nodes is given it receives p^0..p^{n_t - 1}.
  Field apply_L(const ControlSignal& u, std::vector<Field>* p_nodes = nullptr) const;
  ControlSignal apply_Lstar(const Field& x) const;
  /// C F^k x at every node; inner_z(u, apply_Lstar_series(x)) equals
  /// inner_z(u, apply_Lstar(x)).
  MeasurementSeries apply_Lstar_series(const Field& x) const;
  /// C (z_k + F z_k) / 2 with z_0 = x + s dt p^0, z_k = F z_{k-1} + s dt p^k.
  /// For s = 0 this is apply_Lstar; otherwise the extra part is s times the
  /// Z-gradient of (1/2) dt sum_k ||p^k||^2.
  ControlSignal apply_Lstar_driven(const Field& x, double s, const std::vector<Field>& p_nodes) const;

  ControlSignal zero_control() const { return {time(), channels()}; }

 private:
  Propagator prop_;
  ObservationOp obs_;
};

Field apply_L(const ControlMap& map, const ControlSignal& u);
ControlSignal apply_Lstar(const ControlMap& map, const Field& x);

enum class PenaltyKind { l1, h1, l2, tv, variance };
const char* penalty_name(PenaltyKind k);
PenaltyKind parse_penalty(const std::string& name);

/// Weights of the penalty terms
///   l1 * dt sum |u| + h1 / 2 sum |u_{k+1} - u_k|^2 / dt + l2 / 2 ||u||_Z^2
///   + tv * sum (sqrt(|u_{k+1} - u_k|^2 + eps^2) - eps)
///   + variance * sigma^2 / 2 * dt sum_k ||p^k||_X^2.
struct Penalties {
  double l1 = 0.0;
  double h1 = 0.0;
  double l2 = 0.0;
  double tv = 0.0;
  double variance = 0.0;
  double sigma = 0.0;
  double tv_eps = 1e-8;

  double weight(PenaltyKind k) const;
  void set_weight(PenaltyKind k, double v);
};

/// How the normal operator L*L is applied inside the solver.
enum class Assembly {
  automatic,  // dense when the columns of L fit in assemble_limit_bytes
  matrix_free,
  dense,
};

struct OptimizerOptions {
  int max_outer = 500;
  /// Stop when the relative objective decrease of an outer step is below this.
  double tol = 1e-10;
  double cg_tol = 1e-10;
  int max_cg = 2000;
  int power_iters = 40;
  /// Lipschitz constant of the smooth gradient; 0 means estimate it.
  double lipschitz = 0.0;
  bool accelerated = true;
  int tv_outer = 8;
  Assembly assembly = Assembly::automatic;
  std::size_t assemble_limit_bytes = std::size_t{768} << 20;
};

struct BalanceOptions {
  PenaltyKind controlled = PenaltyKind::l1;
  double alpha = 1.0;
  double d = 0.5;
  double eta0 = 1e-12;
  double rel_tol = 1e-3;
  int max_iters = 30;
};

struct RegConfig {
  Penalties eta;
  OptimizerOptions opt;
  BalanceOptions balance;
};

/// Penalty values without their weights.
struct PenaltyValues {
  double l1 = 0.0;
  double h1 = 0.0;
  double l2 = 0.0;
  double tv = 0.0;
  double variance = 0.0;  // sigma^2 / 2 * int ||p||^2

  double get(PenaltyKind k) const;
};

struct TraceRow {
  int iter;
  double objective;
  double fidelity;
  PenaltyValues penalties;
};

struct ControlSolution {
  ControlSignal u;
  double residual = 0.0;  // ||L u - phi||_X
  double fidelity = 0.0;  // residual^2 / 2
  PenaltyValues penalties;
  double objective = 0.0;
  double p_energy = 0.0;  // dt sum_k ||p^k||_X^2
  int iterations = 0;
  bool converged = false;
  std::vector<TraceRow> trace;

  /// residual <= 0.5
  bool reliable() const { return residual <= 0.5; }
};

/// Prepared solver state shared by all targets of one (map, penalties)
/// pair: Lipschitz estimate and, in dense mode, the assembled L*L.
class ControlSolver {
 public:
  ControlSolver(const ControlMap& map, RegConfig cfg);
  ~ControlSolver();
  ControlSolver(ControlSolver&&) noexcept;

  const RegConfig& config() const { return cfg_; }
  bool dense() const;
  double lipschitz() const { return lipschitz_; }

  ControlSolution solve(const Field& phi) const;
  /// Same prepared operator with other weights (the variance weight and
  /// sigma must match) and an optional warm start.
  ControlSolution solve(const Field& phi, const Penalties& eta, const ControlSignal* warm) const;

  struct Impl;

 private:
  const ControlMap& map_;
  RegConfig cfg_;
  std::unique_ptr<Impl> impl_;
  double lipschitz_ = 0.0;
};

ControlSolution solve_control(const ControlMap& map, const Field& phi, const RegConfig& cfg);
/// Solves for every target, in parallel over targets.
std::vector<ControlSolution> solve_controls(const ControlMap& map, const std::vector<Field>& targets,
                                            const RegConfig& cfg);

/// Evaluates the (unweighted) penalties of u. The variance term and
/// p_energy cost one adjoint sweep and are filled when requested.
PenaltyValues evaluate_penalties(const ControlMap& map, const ControlSignal& u, const Penalties& eta,
                                 double* p_energy = nullptr);

struct BalanceStep {
  double beta;
  double fidelity;
  double penalty;
};

struct BalanceResult {
  double beta = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<BalanceStep> history;
};

/// Fixed-point iteration beta <- alpha * phi^{1-d} / (psi + eta0) around a
/// user solve returning (fidelity, penalty) for a given beta.
BalanceResult balance_iterate(const std::function<std::pair<double, double>(double)>& solve, double beta0,
                              const BalanceOptions& opt);

/// Balance principle on the penalty selected by cfg.balance.controlled,
/// started from its current weight.
std::pair<RegConfig, ControlSolution> select_parameters_balance(const ControlMap& map, const Field& phi,
                                                                const RegConfig& cfg,
                                                                BalanceResult* info = nullptr);

/// Smallest eigenvalue of the m x m Gram <L* phi_j, L* phi_k>_Z.
double observability_min_eig(const ControlMap& map, const std::vector<Field>& basis, int iters);

}  // namespace recon
