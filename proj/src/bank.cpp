#include <cstdio>
#include <fstream>

#include "recon/csv.hpp"
#include "recon/errors.hpp"
#include "recon/experiment.hpp"

namespace recon {

using nlohmann::json;

namespace detail {
std::vector<ControlSolution> solve_for(const Problem& p, std::vector<BalanceResult>* balance);
}

namespace {

// The config subset the controls depend on.
json control_inputs(const ExperimentConfig& cfg) {
  json full = config_to_json(cfg);
  json j;
  j["model"] = full["model"];
  j["model"].erase("f");
  if (cfg.model == ModelKind::diffusion1d)
    j["grid"] = {{"n", cfg.n}};
  else
    j["grid"] = {{"nx", cfg.nx}, {"ny", cfg.ny}};
  j["time"] = full["time"];
  j["sensors"] = full["sensors"];
  j["basis"] = full["basis"];
  j["method"] = full["method"];
  j["regularization"] = full["regularization"];
  if (!cfg.balance) j["regularization"].erase("balance");
  return j;
}

std::string control_file(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u_%02zu.csv", k + 1);
  return buf;
}

}  // namespace

std::string control_fingerprint(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : control_inputs(cfg).dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void bank_controls(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  if (cfg.method == Method::variation) throw ConfigError("method: the variation method has no controls to bank");
  const Problem p = build_problem(cfg);
  const auto controls = detail::solve_for(p, nullptr);
  std::filesystem::create_directories(dir);
  json entries = json::array();
  for (std::size_t k = 0; k < controls.size(); ++k) {
    const auto& c = controls[k];
    csv::write_control(dir / control_file(k), c.u);
    entries.push_back({{"file", control_file(k)},
                       {"residual", c.residual},
                       {"fidelity", c.fidelity},
                       {"objective", c.objective},
                       {"p_energy", c.p_energy},
                       {"iterations", c.iterations},
                       {"converged", c.converged},
                       {"penalties",
                        {{"l1", c.penalties.l1},
                         {"h1", c.penalties.h1},
                         {"l2", c.penalties.l2},
                         {"tv", c.penalties.tv},
                         {"variance", c.penalties.variance}}}});
  }
  const json manifest{{"fingerprint", control_fingerprint(cfg)}, {"inputs", control_inputs(cfg)}, {"controls", entries}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

std::vector<ControlSolution> load_controls(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw ConfigError("no control bank at " + dir.string() + " (missing manifest.json)");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  const std::string want = control_fingerprint(cfg);
  const std::string have = manifest.value("fingerprint", "");
  if (have != want) {
    std::string diff;
    const json now = control_inputs(cfg);
    const json& then = manifest.contains("inputs") ? manifest["inputs"] : json::object();
    for (const auto& [key, value] : now.items())
      if (!then.contains(key) || then[key] != value) diff += " " + key;
    throw ConfigError("control bank " + dir.string() + " was built for a different setup (fingerprint " + have +
                      ", expected " + want + "; differing:" + (diff.empty() ? " unknown" : diff) + ")");
  }
  const TimeGrid time(cfg.t_f, cfg.n_t);
  std::vector<ControlSolution> out;
  for (const auto& e : manifest.at("controls")) {
    ControlSolution s{csv::read_control(dir / e.at("file").get<std::string>(), time),
                      e.at("residual").get<double>(),
                      e.at("fidelity").get<double>(),
                      {e["penalties"].at("l1").get<double>(), e["penalties"].at("h1").get<double>(),
                       e["penalties"].at("l2").get<double>(), e["penalties"].at("tv").get<double>(),
                       e["penalties"].at("variance").get<double>()},
                      e.at("objective").get<double>(),
                      e.at("p_energy").get<double>(),
                      e.at("iterations").get<int>(),
                      e.at("converged").get<bool>(),
                      {}};
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace recon
