#include <cmath>

#include "recon/control.hpp"
#include "recon/errors.hpp"

namespace recon {

BalanceResult balance_iterate(const std::function<std::pair<double, double>(double)>& solve, double beta0,
                              const BalanceOptions& opt) {
  if (!(beta0 > 0.0) || !std::isfinite(beta0)) throw ConfigError("balance principle: initial beta must be positive");
  if (!(opt.alpha > 0.0)) throw ConfigError("balance principle: alpha must be positive");
  if (!(opt.d > 0.0 && opt.d < 1.0)) throw ConfigError("balance principle: d must lie in (0, 1)");
  if (!(opt.eta0 >= 0.0)) throw ConfigError("balance principle: eta0 must be nonnegative");
  if (opt.max_iters < 1) throw ConfigError("balance principle: max_iters must be at least 1");

  BalanceResult res;
  double beta = beta0;
  for (int it = 0; it < opt.max_iters; ++it) {
    const auto [fid, pen] = solve(beta);
    res.history.push_back({beta, fid, pen});
    res.beta = beta;
    res.iterations = it + 1;
    const double denom = pen + opt.eta0;
    if (!(denom > 0.0)) throw NumericalError("balance principle: penalty is zero; use eta0 > 0");
    const double next = opt.alpha * std::pow(std::max(fid, 0.0), 1.0 - opt.d) / denom;
    if (!(next > 0.0) || !std::isfinite(next)) break;
    if (std::abs(next - beta) <= opt.rel_tol * beta) {
      res.converged = true;
      break;
    }
    beta = next;
  }
  return res;
}

std::pair<RegConfig, ControlSolution> select_parameters_balance(const ControlMap& map, const Field& phi,
                                                                const RegConfig& cfg, BalanceResult* info) {
  const PenaltyKind kind = cfg.balance.controlled;
  RegConfig work = cfg;
  std::optional<ControlSolver> shared;
  if (kind != PenaltyKind::variance) shared.emplace(map, cfg);
  std::optional<ControlSolution> last;

  auto solve = [&](double beta) {
    work.eta.set_weight(kind, beta);
    const ControlSignal* warm = last ? &last->u : nullptr;
    if (shared) {
      last = shared->solve(phi, work.eta, warm);
    } else {
      last = ControlSolver(map, work).solve(phi, work.eta, warm);
    }
    return std::make_pair(last->fidelity, last->penalties.get(kind));
  };
  BalanceResult res = balance_iterate(solve, cfg.eta.weight(kind), cfg.balance);
  work.eta.set_weight(kind, res.beta);
  if (info) *info = res;
  return {work, std::move(*last)};
}

}  // namespace recon
