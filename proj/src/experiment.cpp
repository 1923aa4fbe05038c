#include <chrono>
#include <cmath>
#include <fstream>

#include "recon/csv.hpp"
#include "recon/errors.hpp"
#include "recon/experiment.hpp"
#include "recon/expression.hpp"
#include "recon/parallel.hpp"

namespace recon {

using nlohmann::json;

namespace {

Expression parse_field(const std::string& key, const std::string& text) {
  try {
    return Expression::parse(text);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

Field sample_expr(const Grid& grid, const std::string& key, const std::string& text) {
  const Expression e = parse_field(key, text);
  Field f = Field::sample(grid, [&](double x, double y) { return e(x, y); });
  if (!f.all_finite()) throw ConfigError(key + ": expression is not finite on the grid");
  return f;
}

double constant_expr(const Grid& grid, const std::string& key, const std::string& text) {
  const Field f = sample_expr(grid, key, text);
  const double v = f[0];
  for (double w : f.values())
    if (std::abs(w - v) > 1e-12 * std::max(1.0, std::abs(v)))
      throw ConfigError(key + ": 2-D models need a constant value");
  return v;
}

bool is_zero(const Field& f) {
  for (double v : f.values())
    if (v != 0.0) return false;
  return true;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_err(const Field& x, const Field& ref) {
  const double r = norm_x(ref);
  const double e = norm_x(x - ref);
  return r > 0.0 ? e / r : e;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
  csv::Table t{{"iter", "objective", "fidelity", "l1", "h1", "l2", "tv", "variance"}, {}};
  for (const auto& r : trace)
    t.rows.push_back({static_cast<double>(r.iter), r.objective, r.fidelity, r.penalties.l1, r.penalties.h1,
                      r.penalties.l2, r.penalties.tv, r.penalties.variance});
  csv::write_table(path, t);
}

std::string numbered(const std::string& stem, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02zu.csv", stem.c_str(), k + 1);
  return buf;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing artifact " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

Problem build_problem(const ExperimentConfig& cfg) {
  if (cfg.n_t < 1) throw ConfigError("time.n_t: must be at least 1");
  if (!(cfg.t_f > 0.0)) throw ConfigError("time.t_f: must be positive");
  const TimeGrid time(cfg.t_f, cfg.n_t);
  const bool one_d = cfg.model == ModelKind::diffusion1d;
  if (one_d && cfg.n < 2) throw ConfigError("grid.n: must be at least 2");
  if (!one_d && (cfg.nx < 2 || cfg.ny < 2)) throw ConfigError("grid.nx, grid.ny: must be at least 2");
  const Grid grid = one_d ? Grid(Grid1D(cfg.n)) : Grid(Grid2D(cfg.nx, cfg.ny));

  std::optional<Model> model;
  if (one_d) {
    const Expression d = parse_field("model.d", cfg.d);
    model.emplace(DiffusionModel1D(Grid1D(cfg.n), [&](double x) { return d(x); }));
  } else {
    const double d = constant_expr(grid, "model.d", cfg.d);
    if (!(d > 0.0)) throw ConfigError("model.d: diffusivity must be positive");
    if (cfg.model == ModelKind::diffusion2d)
      model.emplace(DiffusionModel2D(Grid2D(cfg.nx, cfg.ny), d));
    else
      model.emplace(ConvDiffModel2D(Grid2D(cfg.nx, cfg.ny), d, cfg.c));
  }
  Propagator prop(std::move(*model), time);
  ObservationOp obs = cfg.sensors.empty() ? full_domain_sensor(grid) : ObservationOp(grid, cfg.sensors);

  Basis basis;
  if (cfg.basis == BasisKind::sine) {
    basis = one_d ? sine_basis_1d(Grid1D(cfg.n), cfg.m) : sine_basis_2d(Grid2D(cfg.nx, cfg.ny), cfg.m);
  } else {
    if (!one_d) throw ConfigError("basis.kind: the Daubechies basis is 1-D only");
    basis = daubechies_basis_1d(Grid1D(cfg.n), cfg.m);
  }

  Field truth = sample_expr(grid, "truth", cfg.truth);
  Field source = sample_expr(grid, "model.f", cfg.f);
  ControlMap map(prop, obs);
  return Problem{cfg, grid, time, std::move(prop), std::move(obs), std::move(truth), std::move(source),
                 std::move(basis), std::move(map)};
}

std::vector<Field> control_targets(const Problem& p) {
  switch (p.cfg.method) {
    case Method::dual_initial: return p.basis.vectors;
    case Method::dual_final: return forecast_targets(p.map, p.basis);
    case Method::variation: return {};
  }
  return {};
}

Synthetic synthesize(const Problem& p) {
  MeasurementSeries clean = simulate_measurements(p.propagator, p.observation, p.truth, p.source);
  MeasurementSeries xi = compute_xi(p.propagator, p.observation, p.source);
  NoisyData noisy = add_noise(clean, p.cfg.noise_level, p.cfg.seed, p.cfg.noise_scale);
  return {std::move(clean), std::move(noisy.series), std::move(xi), noisy.delta};
}

namespace detail {

// Solves the controls for cfg (balance-selected weights when enabled).
std::vector<ControlSolution> solve_for(const Problem& p, std::vector<BalanceResult>* balance) {
  const auto targets = control_targets(p);
  if (!p.cfg.balance) return solve_controls(p.map, targets, p.cfg.reg);
  std::vector<std::optional<ControlSolution>> slots(targets.size());
  if (balance) balance->assign(targets.size(), {});
  parallel_for(targets.size(), [&](std::size_t k) {
    BalanceResult info;
    auto [cfg, sol] = select_parameters_balance(p.map, targets[k], p.cfg.reg, &info);
    slots[k] = std::move(sol);
    if (balance) (*balance)[k] = std::move(info);
  });
  std::vector<ControlSolution> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace detail

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, bool write) {
  using clock = std::chrono::steady_clock;
  const auto t_total = clock::now();
  json timing;

  auto t0 = clock::now();
  const Problem p = build_problem(cfg);
  timing["build_s"] = seconds_since(t0);

  t0 = clock::now();
  const Synthetic data = synthesize(p);
  timing["synthesize_s"] = seconds_since(t0);

  ExperimentOutcome out{ReconstructionResult{"", {}, Field(p.grid), {}, {}, {}, 0.0, 0.0, true, 0.0, {}},
                        {}, Field(p.grid), 0.0, 0.0, {}, json::object(), 0};
  for (const auto& w : p.propagator.warnings()) out.warnings.push_back(w);

  std::optional<Field> forced_final;
  std::vector<Field> forward;
  if (cfg.method == Method::dual_final) {
    forward = forward_trajectory(p.propagator, p.truth, p.source);
    out.reference = forward.back();
    if (!is_zero(p.source)) forced_final = forward_trajectory(p.propagator, Field(p.grid), p.source).back();
  } else {
    out.reference = p.truth;
  }

  std::vector<BalanceResult> balance;
  std::optional<VariationResult> variation;
  bool banked = false;
  t0 = clock::now();
  if (cfg.method == Method::variation) {
    const auto u_basis = sine_control_basis(p.time, p.observation.channels(), cfg.variation_modes);
    variation = variation_reconstruct(u_basis, p.map, data.noisy, data.xi,
                                      {cfg.variation_ridge, cfg.variation_orthonormalize}, data.delta);
  } else if (!cfg.bank.empty()) {
    out.controls = load_controls(cfg, cfg.bank);
    banked = true;
  } else {
    out.controls = detail::solve_for(p, &balance);
  }
  timing["controls_s"] = seconds_since(t0);

  t0 = clock::now();
  if (variation) {
    out.result = variation->result;
  } else if (cfg.method == Method::dual_initial) {
    out.result = reconstruct_initial(p.basis, out.controls, data.noisy, data.xi, data.delta);
  } else {
    out.result = reconstruct_final(p.basis, out.controls, data.noisy, data.xi, forced_final, data.delta);
  }
  timing["reconstruct_s"] = seconds_since(t0);
  out.rel_error = rel_err(out.result.field, out.reference);

  t0 = clock::now();
  if (cfg.observability && cfg.method != Method::variation) out.observability = observability_min_eig(p.map, p.basis.vectors, 1);
  timing["observability_s"] = seconds_since(t0);

  for (const auto& w : out.result.warnings) out.warnings.push_back(w);
  std::vector<bool> converged;
  std::vector<int> iterations;
  std::vector<double> residuals;
  for (std::size_t k = 0; k < out.controls.size(); ++k) {
    const auto& c = out.controls[k];
    converged.push_back(c.converged);
    iterations.push_back(c.iterations);
    residuals.push_back(c.residual);
    if (!c.converged)
      out.warnings.push_back("control " + std::to_string(k + 1) + " stopped at the iteration limit (" +
                             std::to_string(c.iterations) + ")");
  }
  json betas = json::array();
  for (std::size_t k = 0; k < balance.size(); ++k) {
    betas.push_back({{"beta", balance[k].beta}, {"iterations", balance[k].iterations},
                     {"converged", balance[k].converged}});
    if (!balance[k].converged)
      out.warnings.push_back("balance iteration for control " + std::to_string(k + 1) + " did not converge");
  }
  if (!out.result.field.all_finite()) throw NumericalError("reconstruction is not finite");
  out.exit_code = out.warnings.empty() ? 0 : 2;

  json& m = out.metrics;
  m["name"] = cfg.name;
  m["method"] = out.result.method;
  m["m"] = out.result.coefficients.size();
  m["seed"] = cfg.seed;
  m["noise_level"] = cfg.noise_level;
  m["rel_error"] = out.rel_error;
  m["coefficients"] = out.result.coefficients;
  m["epsilons"] = out.result.epsilons;
  m["control_norms"] = out.result.control_norms;
  m["budget"] = out.result.error_budget;
  m["delta"] = out.result.delta;
  m["x_norm_est"] = out.result.x_norm_est;
  m["observability_min_eig"] = out.observability;
  m["converged"] = converged;
  m["iterations"] = iterations;
  m["residuals"] = residuals;
  if (!balance.empty()) m["balance"] = betas;
  if (variation) {
    m["variation"] = {{"ridge", variation->ridge}, {"condition", variation->condition}};
  }
  m["banked_controls"] = banked;
  m["fingerprint"] = control_fingerprint(cfg);
  m["warnings"] = out.warnings;
  m["exit_code"] = out.exit_code;
  timing["total_s"] = seconds_since(t_total);
  m["timing"] = timing;

  if (!write) return out;

  namespace fs = std::filesystem;
  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  write_json(dir / "config.json", config_to_json(cfg));
  csv::write_field(dir / "truth.csv", p.truth);
  csv::write_field(dir / "reference.csv", out.reference);
  if (p.grid.dims() == 1) {
    const auto& d1 = std::get<DiffusionModel1D>(p.propagator.model());
    csv::Table t{{"x", "d"}, {}};
    for (int i = 0; i < p.grid.nx(); ++i) t.rows.push_back({p.grid.x(i), d1.d_nodes()[i]});
    csv::write_table(dir / "conductivity.csv", t);
  }
  csv::write_series(dir / "clean.csv", data.clean);
  csv::write_series(dir / "noisy.csv", data.noisy);
  csv::write_series(dir / "xi.csv", data.xi);
  fs::remove_all(dir / "controls");
  fs::remove_all(dir / "traces");
  if (variation) {
    write_basis((dir / "basis.csv").string(), Basis{"variation-p", variation->p});
    fs::create_directories(dir / "controls");
    for (std::size_t k = 0; k < variation->u.size(); ++k)
      csv::write_control(dir / "controls" / numbered("u", k), variation->u[k]);
  } else {
    write_basis((dir / "basis.csv").string(), p.basis);
    fs::create_directories(dir / "controls");
    fs::create_directories(dir / "traces");
    for (std::size_t k = 0; k < out.controls.size(); ++k) {
      csv::write_control(dir / "controls" / numbered("u", k), out.controls[k].u);
      write_trace(dir / "traces" / numbered("trace", k), out.controls[k].trace);
    }
  }
  csv::write_field(dir / "reconstruction.csv", out.result.field);
  json r;
  r["method"] = out.result.method;
  r["m"] = out.result.coefficients.size();
  r["coefficients"] = out.result.coefficients;
  r["epsilons"] = out.result.epsilons;
  r["control_norms"] = out.result.control_norms;
  r["budget"] = out.result.error_budget;
  r["rel_error_if_truth_known"] = out.rel_error;
  r["delta"] = out.result.delta;
  r["x_norm_est"] = out.result.x_norm_est;
  r["x_norm_is_estimate"] = out.result.x_norm_is_estimate;
  r["reliable"] = out.result.reliable;
  if (forced_final) r["offsets"] = project(p.basis, *forced_final);
  if (variation) r["orthonormalized"] = cfg.variation_orthonormalize;
  write_json(dir / "reconstruction.json", r);
  write_json(dir / "metrics.json", m);
  return out;
}

VerifyReport verify_artifacts(const std::filesystem::path& dir) {
  VerifyReport rep;
  auto check = [&](bool ok, const std::string& what) {
    (ok ? rep.checks : rep.failures).push_back(what);
  };
  auto close = [](double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };

  const ExperimentConfig cfg = config_from_json(read_json(dir / "config.json"));
  const json metrics = read_json(dir / "metrics.json");
  const json recon = read_json(dir / "reconstruction.json");
  const TimeGrid time(cfg.t_f, cfg.n_t);
  const bool one_d = cfg.model == ModelKind::diffusion1d;
  const Grid grid = one_d ? Grid(Grid1D(cfg.n)) : Grid(Grid2D(cfg.nx, cfg.ny));

  const Field truth = csv::read_field(dir / "truth.csv", grid);
  const Field reference = csv::read_field(dir / "reference.csv", grid);
  const Field field = csv::read_field(dir / "reconstruction.csv", grid);
  const auto clean = csv::read_series(dir / "clean.csv", time);
  const auto noisy = csv::read_series(dir / "noisy.csv", time);
  const auto xi = csv::read_series(dir / "xi.csv", time);
  check(truth.all_finite() && reference.all_finite() && field.all_finite(), "fields are finite");
  check(clean.all_finite() && noisy.all_finite() && xi.all_finite(), "measurement series are finite");

  const auto table = csv::read_table(dir / "basis.csv");
  const std::size_t lead = one_d ? 1 : 2;
  const std::size_t m = table.header.size() - lead;
  std::vector<Field> vectors(m, Field(grid));
  check(table.rows.size() == grid.size(), "basis.csv has one row per node");
  for (std::size_t i = 0; i < table.rows.size() && i < grid.size(); ++i)
    for (std::size_t k = 0; k < m; ++k) vectors[k][i] = table.rows[i][lead + k];

  const auto coeffs = recon.at("coefficients").get<std::vector<double>>();
  const auto method = recon.at("method").get<std::string>();
  check(coeffs.size() == m, "coefficient count matches the basis");
  if (method != "variation" || recon.value("orthonormalized", false)) {
    const auto g = gram_matrix(vectors);
    double defect = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) defect = std::max(defect, std::abs(g[j * m + k] - (j == k ? 1.0 : 0.0)));
    check(defect <= 1e-10, "basis Gram = I within 1e-10");
  }
  if (coeffs.size() == m) {
    Field sum(grid);
    for (std::size_t k = 0; k < m; ++k) sum.add_scaled(coeffs[k], vectors[k]);
    check(norm_x(sum - field) <= 1e-12 * std::max(1.0, norm_x(field)), "field equals sum of coefficient * vector");
  }

  std::vector<ControlSignal> controls;
  for (std::size_t k = 0; k < m; ++k) {
    const auto path = dir / "controls" / numbered("u", k);
    if (!std::filesystem::exists(path)) break;
    controls.push_back(csv::read_control(path, time));
  }
  if (method != "variation") {
    check(controls.size() == m, "one control per coefficient");
    const auto residual = noisy - xi;
    const auto offsets = recon.value("offsets", std::vector<double>(m, 0.0));
    const auto norms = recon.at("control_norms").get<std::vector<double>>();
    bool alpha_ok = controls.size() == m, norm_ok = alpha_ok;
    for (std::size_t k = 0; k < controls.size(); ++k) {
      const double a = (method == "dual_final" ? -1.0 : 1.0) * inner_z(controls[k], residual) + offsets[k];
      alpha_ok = alpha_ok && close(a, coeffs[k], 1e-12);
      norm_ok = norm_ok && close(norm_z(controls[k]), norms[k], 1e-12);
    }
    check(alpha_ok, "coefficients equal inner_z(u_k, data)");
    check(norm_ok, "control norms match the stored controls");
    const auto eps = recon.at("epsilons").get<std::vector<double>>();
    const double b = error_budget(eps, norms, recon.at("delta").get<double>(), cfg.t_f,
                                  recon.at("x_norm_est").get<double>());
    check(close(b, recon.at("budget").get<double>(), 1e-12), "budget recomputes from its terms");
  }

  double delta = 0.0;
  for (int k = 0; k < noisy.samples(); ++k) {
    double e2 = 0.0;
    for (int c = 0; c < noisy.channels(); ++c) e2 += std::pow(noisy.at(k, c) - clean.at(k, c), 2);
    delta = std::max(delta, std::sqrt(e2));
  }
  check(close(delta, metrics.at("delta").get<double>(), 1e-12), "delta equals the realized noise maximum");
  check(close(rel_err(field, reference), metrics.at("rel_error").get<double>(), 1e-10),
        "rel_error recomputes from reconstruction and reference");
  check(metrics.at("rel_error") == recon.at("rel_error_if_truth_known"), "metrics and reconstruction agree");
  return rep;
}

}  // namespace recon
