#include <fstream>

#include "recon/errors.hpp"
#include "recon/expression.hpp"
#include "recon/experiment.hpp"

namespace recon {

using nlohmann::json;

namespace {

template <class T>
T get(const json& j, const std::string& path, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

const json& block(const json& j, const std::string& path, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  const json& b = j.at(key);
  if (!b.is_object()) throw ConfigError(path + "." + key + ": expected an object");
  return b;
}

// Accepts a number or an expression string.
std::string expr_field(const json& j, const std::string& path, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  std::string text;
  if (v.is_number()) {
    text = json(v.get<double>()).dump();
  } else if (v.is_string()) {
    text = v.get<std::string>();
  } else {
    throw ConfigError(path + "." + key + ": expected a number or an expression string");
  }
  try {
    Expression::parse(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
  return text;
}

template <class E>
E parse_enum(const std::string& path, const std::string& value, std::initializer_list<std::pair<const char*, E>> map) {
  std::string options;
  for (const auto& [name, e] : map) {
    if (value == name) return e;
    options += std::string(options.empty() ? "" : ", ") + name;
  }
  throw ConfigError(path + ": unknown value '" + value + "' (expected " + options + ")");
}

const char* model_name(ModelKind k) {
  switch (k) {
    case ModelKind::diffusion1d: return "diffusion1d";
    case ModelKind::diffusion2d: return "diffusion2d";
    case ModelKind::convdiff2d: return "convdiff2d";
  }
  return "?";
}

const char* method_name(Method m) {
  switch (m) {
    case Method::dual_initial: return "dual_initial";
    case Method::dual_final: return "dual_final";
    case Method::variation: return "variation";
  }
  return "?";
}

const char* assembly_name(Assembly a) {
  switch (a) {
    case Assembly::automatic: return "auto";
    case Assembly::matrix_free: return "matrix_free";
    case Assembly::dense: return "dense";
  }
  return "?";
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig c;
  c.name = get<std::string>(j, "config", "name", c.name);
  c.output = get<std::string>(j, "config", "output", c.output);
  c.bank = get<std::string>(j, "config", "bank", c.bank);

  const json& model = block(j, "config", "model");
  c.model = parse_enum<ModelKind>("model.kind", get<std::string>(model, "model", "kind", "diffusion1d"),
                                  {{"diffusion1d", ModelKind::diffusion1d},
                                   {"diffusion2d", ModelKind::diffusion2d},
                                   {"convdiff2d", ModelKind::convdiff2d}});
  c.d = expr_field(model, "model", "d", c.d);
  c.f = expr_field(model, "model", "f", c.f);
  if (model.contains("c")) {
    const auto v = get<std::vector<double>>(model, "model", "c", {});
    if (v.size() != 2) throw ConfigError("model.c: expected two numbers");
    c.c = {v[0], v[1]};
  }

  const json& grid = block(j, "config", "grid");
  c.n = get<int>(grid, "grid", "n", c.n);
  c.nx = get<int>(grid, "grid", "nx", c.nx);
  c.ny = get<int>(grid, "grid", "ny", c.ny);
  const json& time = block(j, "config", "time");
  c.t_f = get<double>(time, "time", "t_f", c.t_f);
  c.n_t = get<int>(time, "time", "n_t", c.n_t);

  const json& sensors = block(j, "config", "sensors");
  const auto layout = get<std::string>(sensors, "sensors", "layout", "full");
  if (layout == "full") {
    c.sensors.clear();
  } else if (layout == "lattice") {
    const double side = get<double>(sensors, "sensors", "side", 0.1);
    for (int jj = 1; jj <= 3; ++jj)
      for (int ii = 1; ii <= 3; ++ii)
        c.sensors.push_back({ii / 4.0 - side / 2, ii / 4.0 + side / 2, jj / 4.0 - side / 2, jj / 4.0 + side / 2});
  } else if (layout == "regions") {
    const auto regions = get<std::vector<std::vector<double>>>(sensors, "sensors", "regions", {});
    if (regions.empty()) throw ConfigError("sensors.regions: at least one region is required");
    for (std::size_t i = 0; i < regions.size(); ++i) {
      const auto& r = regions[i];
      if (r.size() == 2) {
        c.sensors.push_back({r[0], r[1], 0.0, 1.0});
      } else if (r.size() == 4) {
        c.sensors.push_back({r[0], r[1], r[2], r[3]});
      } else {
        throw ConfigError("sensors.regions[" + std::to_string(i) + "]: expected [x0,x1] or [x0,x1,y0,y1]");
      }
    }
  } else {
    throw ConfigError("sensors.layout: unknown value '" + layout + "' (expected full, lattice, regions)");
  }

  c.truth = expr_field(j, "config", "truth", c.truth);

  const json& noise = block(j, "config", "noise");
  c.noise_level = get<double>(noise, "noise", "level", c.noise_level);
  c.seed = get<std::uint64_t>(noise, "noise", "seed", c.seed);
  c.noise_scale = parse_enum<NoiseScale>("noise.scale", get<std::string>(noise, "noise", "scale", "rms"),
                                         {{"rms", NoiseScale::rms}, {"max", NoiseScale::max}});

  const json& basis = block(j, "config", "basis");
  c.basis = parse_enum<BasisKind>("basis.kind", get<std::string>(basis, "basis", "kind", "sine"),
                                  {{"sine", BasisKind::sine}, {"daubechies", BasisKind::daubechies}});
  c.m = get<int>(basis, "basis", "m", c.m);

  const json& reg = block(j, "config", "regularization");
  auto& eta = c.reg.eta;
  eta.l1 = get<double>(reg, "regularization", "l1", eta.l1);
  eta.h1 = get<double>(reg, "regularization", "h1", eta.h1);
  eta.l2 = get<double>(reg, "regularization", "l2", eta.l2);
  eta.tv = get<double>(reg, "regularization", "tv", eta.tv);
  eta.variance = get<double>(reg, "regularization", "variance", eta.variance);
  eta.sigma = get<double>(reg, "regularization", "sigma", eta.sigma);
  eta.tv_eps = get<double>(reg, "regularization", "tv_eps", eta.tv_eps);
  if (reg.contains("balance") && reg.at("balance").is_boolean()) {
    c.balance = reg.at("balance").get<bool>();
  } else if (reg.contains("balance")) {
    const json& b = block(reg, "regularization", "balance");
    c.balance = get<bool>(b, "regularization.balance", "enabled", true);
    auto& bo = c.reg.balance;
    bo.controlled = parse_penalty(get<std::string>(b, "regularization.balance", "penalty", "l1"));
    bo.alpha = get<double>(b, "regularization.balance", "alpha", bo.alpha);
    bo.d = get<double>(b, "regularization.balance", "d", bo.d);
    bo.eta0 = get<double>(b, "regularization.balance", "eta0", bo.eta0);
    bo.rel_tol = get<double>(b, "regularization.balance", "rel_tol", bo.rel_tol);
    bo.max_iters = get<int>(b, "regularization.balance", "max_iters", bo.max_iters);
  }
  const json& opt = block(reg, "regularization", "optimizer");
  auto& o = c.reg.opt;
  o.max_outer = get<int>(opt, "regularization.optimizer", "max_outer", o.max_outer);
  o.tol = get<double>(opt, "regularization.optimizer", "tol", o.tol);
  o.cg_tol = get<double>(opt, "regularization.optimizer", "cg_tol", o.cg_tol);
  o.max_cg = get<int>(opt, "regularization.optimizer", "max_cg", o.max_cg);
  o.power_iters = get<int>(opt, "regularization.optimizer", "power_iters", o.power_iters);
  o.accelerated = get<bool>(opt, "regularization.optimizer", "accelerated", o.accelerated);
  o.tv_outer = get<int>(opt, "regularization.optimizer", "tv_outer", o.tv_outer);
  o.assembly = parse_enum<Assembly>(
      "regularization.optimizer.assembly", get<std::string>(opt, "regularization.optimizer", "assembly", "auto"),
      {{"auto", Assembly::automatic}, {"matrix_free", Assembly::matrix_free}, {"dense", Assembly::dense}});

  c.method = parse_enum<Method>("method", get<std::string>(j, "config", "method", "dual_initial"),
                                {{"dual_initial", Method::dual_initial},
                                 {"dual_final", Method::dual_final},
                                 {"variation", Method::variation}});
  const json& var = block(j, "config", "variation");
  c.variation_modes = get<int>(var, "variation", "modes", c.variation_modes);
  c.variation_ridge = get<double>(var, "variation", "ridge", c.variation_ridge);
  c.variation_orthonormalize = get<bool>(var, "variation", "orthonormalize", c.variation_orthonormalize);
  const json& diag = block(j, "config", "diagnostics");
  c.observability = get<bool>(diag, "diagnostics", "observability", c.observability);

  if (c.m < 1) throw ConfigError("basis.m: must be at least 1");
  if (c.noise_level < 0.0) throw ConfigError("noise.level: must be nonnegative");
  if (c.balance && !(c.reg.balance.d > 0.0 && c.reg.balance.d < 1.0))
    throw ConfigError("regularization.balance.d: must lie in (0, 1)");
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["output"] = c.output;
  if (!c.bank.empty()) j["bank"] = c.bank;
  j["model"] = {{"kind", model_name(c.model)}, {"d", c.d}, {"c", {c.c[0], c.c[1]}}, {"f", c.f}};
  j["grid"] = {{"n", c.n}, {"nx", c.nx}, {"ny", c.ny}};
  j["time"] = {{"t_f", c.t_f}, {"n_t", c.n_t}};
  if (c.sensors.empty()) {
    j["sensors"] = {{"layout", "full"}};
  } else {
    json regions = json::array();
    const bool two_d = c.model != ModelKind::diffusion1d;
    for (const auto& r : c.sensors)
      regions.push_back(two_d ? json{r.x0, r.x1, r.y0, r.y1} : json{r.x0, r.x1});
    j["sensors"] = {{"layout", "regions"}, {"regions", regions}};
  }
  j["truth"] = c.truth;
  j["noise"] = {{"level", c.noise_level}, {"seed", c.seed}, {"scale", c.noise_scale == NoiseScale::rms ? "rms" : "max"}};
  j["basis"] = {{"kind", c.basis == BasisKind::sine ? "sine" : "daubechies"}, {"m", c.m}};
  const auto& e = c.reg.eta;
  const auto& o = c.reg.opt;
  const auto& b = c.reg.balance;
  j["regularization"] = {
      {"l1", e.l1},
      {"h1", e.h1},
      {"l2", e.l2},
      {"tv", e.tv},
      {"variance", e.variance},
      {"sigma", e.sigma},
      {"tv_eps", e.tv_eps},
      {"balance",
       {{"enabled", c.balance},
        {"penalty", penalty_name(b.controlled)},
        {"alpha", b.alpha},
        {"d", b.d},
        {"eta0", b.eta0},
        {"rel_tol", b.rel_tol},
        {"max_iters", b.max_iters}}},
      {"optimizer",
       {{"max_outer", o.max_outer},
        {"tol", o.tol},
        {"cg_tol", o.cg_tol},
        {"max_cg", o.max_cg},
        {"power_iters", o.power_iters},
        {"accelerated", o.accelerated},
        {"tv_outer", o.tv_outer},
        {"assembly", assembly_name(o.assembly)}}}};
  j["method"] = method_name(c.method);
  j["variation"] = {
      {"modes", c.variation_modes}, {"ridge", c.variation_ridge}, {"orthonormalize", c.variation_orthonormalize}};
  j["diagnostics"] = {{"observability", c.observability}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::vector<std::string> preset_names() { return {"example1", "example2-daub", "example2-sine", "example3-convdiff"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.output = "out/" + name;
  const std::vector<SensorRegion> intervals{{0.23, 0.31, 0.0, 1.0}, {0.46, 0.53, 0.0, 1.0}};
  if (name == "example1") {
    c.model = ModelKind::diffusion1d;
    c.d = "1.0625 - (x - 0.5)^4";
    c.truth = "exp(-200*(x - 0.5)^4)";
    c.sensors = intervals;
    c.noise_level = 0.10;
    c.basis = BasisKind::sine;
    c.m = 8;
    c.reg.eta.l1 = 5e-8;
    c.reg.eta.h1 = 1e-10;
  } else if (name == "example2-daub" || name == "example2-sine") {
    c.model = ModelKind::diffusion1d;
    c.d = "piecewise(x < 0.5, 1.3125 - 5*(x - 0.5)^4, 1.1875 + 1/(8 + exp(-50*(x - 0.65))))";
    c.truth = "exp(-200*(x - 0.5)^4)";
    c.sensors = intervals;
    c.noise_level = 0.05;
    c.m = 8;
    if (name == "example2-daub") {
      c.basis = BasisKind::daubechies;
      c.reg.eta.l1 = 5e-7;
      c.reg.eta.h1 = 1e-11;
    } else {
      c.basis = BasisKind::sine;
      c.reg.eta.l1 = 5e-6;
      c.reg.eta.h1 = 1e-10;
    }
  } else if (name == "example3-convdiff") {
    c.model = ModelKind::convdiff2d;
    c.d = "0.1";
    c.c = {0.5, 0.5};
    c.nx = 63;
    c.ny = 63;
    c.truth = "exp(-100*((x - 0.55)^2 + (y - 0.5)^2))";
    for (int j = 1; j <= 3; ++j)
      for (int i = 1; i <= 3; ++i) c.sensors.push_back({i / 4.0 - 0.05, i / 4.0 + 0.05, j / 4.0 - 0.05, j / 4.0 + 0.05});
    c.noise_level = 0.10;
    c.basis = BasisKind::sine;
    c.m = 8;
    c.reg.eta.l1 = 0.03;
    c.reg.eta.h1 = 1e-8;
  } else {
    std::string names;
    for (const auto& n : preset_names()) names += " " + n;
    throw ConfigError("unknown preset '" + name + "' (available:" + names + ")");
  }
  return c;
}

}  // namespace recon
