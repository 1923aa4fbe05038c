// recon: run experiments, presets, control banks and artifact checks.
//
//   recon run <config.json> [--out DIR]
//   recon preset <name> --out DIR [--seed N] [--noise L] [--m K] [--balance]
//   recon bank <config.json> [--dir DIR]
//   recon verify <dir>
//
// RECON_THREADS sets the worker count, RECON_SIMD=scalar|avx2 the kernels.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "recon/errors.hpp"
#include "recon/experiment.hpp"

namespace {

int report(const recon::ExperimentOutcome& o, const recon::ExperimentConfig& cfg) {
  std::printf("%s: method=%s m=%zu rel_error=%.6g budget=%.6g delta=%.6g\n", cfg.name.c_str(),
              o.result.method.c_str(), o.result.coefficients.size(), o.rel_error, o.result.error_budget,
              o.result.delta);
  std::printf("artifacts: %s\n", cfg.output.c_str());
  for (const auto& w : o.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return o.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adjoint-control reconstruction of initial and final states from sparse measurements"};
  app.require_subcommand(1);

  std::string config_path, out_dir, preset_name, bank_dir, verify_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::optional<int> m;
  bool balance = false, list = false;

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Override the output directory");

  auto* pre = app.add_subcommand("preset", "Run a built-in experiment");
  pre->add_option("name", preset_name, "Preset name");
  pre->add_option("--out", out_dir, "Output directory");
  pre->add_option("--seed", seed, "Noise seed");
  pre->add_option("--noise", noise, "Noise level (fraction of channel RMS)");
  pre->add_option("--m", m, "Basis size (per axis in 2-D)");
  pre->add_flag("--balance", balance, "Select the l1 weight by the balance principle");
  pre->add_flag("--list", list, "List the presets");

  auto* bank = app.add_subcommand("bank", "Solve and store the controls of a config");
  bank->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  bank->add_option("--dir", bank_dir, "Bank directory (default <output>/bank)");

  auto* verify = app.add_subcommand("verify", "Re-check invariants on stored artifacts");
  verify->add_option("dir", verify_dir, "Artifact directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = recon::load_config(config_path);
      if (!out_dir.empty()) cfg.output = out_dir;
      return report(recon::run_experiment(cfg), cfg);
    }
    if (*pre) {
      if (list || preset_name.empty()) {
        for (const auto& n : recon::preset_names()) std::printf("%s\n", n.c_str());
        return preset_name.empty() && !list ? 1 : 0;
      }
      auto cfg = recon::preset(preset_name);
      if (!out_dir.empty()) cfg.output = out_dir;
      if (seed) cfg.seed = *seed;
      if (noise) cfg.noise_level = *noise;
      if (m) cfg.m = *m;
      if (balance) cfg.balance = true;
      return report(recon::run_experiment(cfg), cfg);
    }
    if (*bank) {
      const auto cfg = recon::load_config(config_path);
      const std::filesystem::path dir = bank_dir.empty() ? std::filesystem::path(cfg.output) / "bank" : std::filesystem::path(bank_dir);
      recon::bank_controls(cfg, dir);
      std::printf("banked controls in %s (fingerprint %s)\n", dir.c_str(), recon::control_fingerprint(cfg).c_str());
      return 0;
    }
    if (*verify) {
      const auto rep = recon::verify_artifacts(verify_dir);
      for (const auto& c : rep.checks) std::printf("ok    %s\n", c.c_str());
      for (const auto& f : rep.failures) std::printf("FAIL  %s\n", f.c_str());
      return rep.ok() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
