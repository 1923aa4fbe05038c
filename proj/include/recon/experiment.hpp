#pragma once

// Config-driven experiments: parse a JSON config (or a named preset), build
// the model, synthesize data, solve the controls, reconstruct and write the
// artifacts.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recon/control.hpp"
#include "recon/observation.hpp"
#include "recon/reconstruction.hpp"

namespace recon {

enum class ModelKind { diffusion1d, diffusion2d, convdiff2d };
enum class BasisKind { sine, daubechies };
enum class Method { dual_initial, dual_final, variation };

struct ExperimentConfig {
  std::string name = "experiment";
  ModelKind model = ModelKind::diffusion1d;
  std::string d = "1";      // expression in x (1-D) or constant (2-D)
  std::array<double, 2> c{0.0, 0.0};
  std::string f = "0";      // source expression
  int n = 199;
  int nx = 63;
  int ny = 63;
  double t_f = 1.0;
  int n_t = 200;
  std::vector<SensorRegion> sensors;  // empty: one sensor over the whole domain
  std::string truth = "0";
  double noise_level = 0.0;
  std::uint64_t seed = 1;
  NoiseScale noise_scale = NoiseScale::rms;
  BasisKind basis = BasisKind::sine;
  int m = 8;                // per axis for the 2-D sine basis
  RegConfig reg;
  bool balance = false;
  Method method = Method::dual_initial;
  int variation_modes = 8;
  double variation_ridge = -1.0;
  bool variation_orthonormalize = false;
  bool observability = true;
  /// Directory of banked controls to load instead of solving.
  std::string bank;
  std::string output = "out";
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name);

/// Everything an experiment builds before solving for controls.
struct Problem {
  ExperimentConfig cfg;
  Grid grid;
  TimeGrid time;
  Propagator propagator;
  ObservationOp observation;
  Field truth;
  Field source;
  Basis basis;
  ControlMap map;
};

Problem build_problem(const ExperimentConfig& cfg);

/// Controls for the configured method (basis targets, or forecast targets).
std::vector<Field> control_targets(const Problem& p);

struct Synthetic {
  MeasurementSeries clean;
  MeasurementSeries noisy;
  MeasurementSeries xi;
  double delta;
};

Synthetic synthesize(const Problem& p);

struct ExperimentOutcome {
  ReconstructionResult result;
  std::vector<ControlSolution> controls;  // empty for the variation method
  Field reference;                        // truth at t = 0 or t_f
  double rel_error = 0.0;
  double observability = 0.0;
  std::vector<std::string> warnings;
  nlohmann::json metrics;
  int exit_code = 0;                      // 0 ok, 2 finished with warnings
};

/// Runs the experiment and writes artifacts to cfg.output when write is set.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, bool write = true);

/// Fingerprint of everything the controls depend on (model, grids, sensors,
/// basis, method, regularization); not the data.
std::string control_fingerprint(const ExperimentConfig& cfg);

/// Solves the controls and stores them (CSV per control plus manifest.json)
/// in dir.
void bank_controls(const ExperimentConfig& cfg, const std::filesystem::path& dir);
/// Loads banked controls; throws ConfigError on a fingerprint mismatch.
std::vector<ControlSolution> load_controls(const ExperimentConfig& cfg, const std::filesystem::path& dir);

struct VerifyReport {
  std::vector<std::string> checks;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Re-checks invariants on the artifacts of a finished run.
VerifyReport verify_artifacts(const std::filesystem::path& dir);

}  // namespace recon
