#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "recon/csv.hpp"
#include "recon/errors.hpp"
#include "recon/experiment.hpp"
#include "recon/expression.hpp"

using namespace recon;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("recon_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c = preset("example1");
  c.n = 63;
  c.n_t = 80;
  c.m = 5;
  c.reg.eta.l1 = 1e-4;
  c.reg.eta.h1 = 1e-8;
  c.reg.opt.max_outer = 200;
  c.output = out.string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

nlohmann::json without_timing(nlohmann::json j) {
  j.erase("timing");
  return j;
}

}  // namespace

TEST(Expression, Arithmetic) {
  EXPECT_DOUBLE_EQ(Expression::parse("1 + 2*3 - 4/8")(0), 6.5);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(0), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-x^2")(3), -9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("x*y + pi")(2, 3), 6 + std::numbers::pi);
  EXPECT_DOUBLE_EQ(Expression::parse("exp(0) + log(1) + sqrt(4) + abs(-1) + min(2, 3) + max(2, 3)")(0), 9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("(x < 0.5) + (x >= 0.5)*10")(0.7), 10.0);
}

TEST(Expression, PiecewiseConductivity) {
  const auto d = Expression::parse("piecewise(x < 0.5, 1.3125 - 5*(x-0.5)^4, 1.1875 + 1/(8 + exp(-50*(x-0.65))))");
  EXPECT_DOUBLE_EQ(d(0.25), 1.3125 - 5 * std::pow(-0.25, 4));
  EXPECT_DOUBLE_EQ(d(0.65), 1.1875 + 1.0 / 9.0);
}

TEST(Expression, SyntaxErrorsCarryPosition) {
  try {
    Expression::parse("1 + * 2");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(Expression::parse("foo(1)"), ConfigError);
  EXPECT_THROW(Expression::parse("z + 1"), ConfigError);
  EXPECT_THROW(Expression::parse("(1 + 2"), ConfigError);
}

TEST(Config, ErrorsNameTheKeyPath) {
  auto message = [](const std::string& text) {
    try {
      config_from_json(nlohmann::json::parse(text));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"grid": {"n": "many"}})").find("grid.n"), std::string::npos);
  EXPECT_NE(message(R"({"model": {"kind": "wave"}})").find("model.kind"), std::string::npos);
  EXPECT_NE(message(R"({"model": {"d": "1 +"}})").find("model.d"), std::string::npos);
  EXPECT_NE(message(R"({"basis": {"m": 0}})").find("basis.m"), std::string::npos);
  EXPECT_NE(message(R"({"sensors": {"layout": "regions", "regions": [[1, 2, 3]]}})").find("sensors.regions[0]"),
            std::string::npos);
  EXPECT_NE(message(R"({"regularization": {"optimizer": {"assembly": "sparse"}}})")
                .find("regularization.optimizer.assembly"),
            std::string::npos);
}

TEST(Config, JsonRoundTrip) {
  for (const auto& name : preset_names()) {
    const auto c = preset(name);
    const auto j = config_to_json(c);
    EXPECT_EQ(config_to_json(config_from_json(j)), j) << name;
  }
  EXPECT_THROW(preset("example4"), ConfigError);
}

TEST(Config, PresetParametersAreFixed) {
  const auto e1 = preset("example1");
  EXPECT_EQ(e1.m, 8);
  EXPECT_EQ(e1.reg.eta.l1, 5e-8);
  EXPECT_EQ(e1.reg.eta.h1, 1e-10);
  EXPECT_EQ(e1.noise_level, 0.10);
  EXPECT_EQ(e1.sensors.size(), 2u);
  EXPECT_EQ(preset("example2-daub").reg.eta.l1, 5e-7);
  EXPECT_EQ(preset("example2-daub").reg.eta.h1, 1e-11);
  EXPECT_EQ(preset("example2-sine").reg.eta.l1, 5e-6);
  EXPECT_EQ(preset("example2-sine").noise_level, 0.05);
  const auto e3 = preset("example3-convdiff");
  EXPECT_EQ(e3.reg.eta.l1, 0.03);
  EXPECT_EQ(e3.reg.eta.h1, 1e-8);
  EXPECT_EQ(e3.sensors.size(), 9u);
  EXPECT_EQ(build_problem(e3).observation.channels(), 9);
}

TEST(Config, LatticeLayout) {
  const auto c = config_from_json(nlohmann::json::parse(
      R"({"model": {"kind": "convdiff2d", "d": 0.1, "c": [0.5, 0.5]}, "sensors": {"layout": "lattice"}})"));
  ASSERT_EQ(c.sensors.size(), 9u);
  EXPECT_DOUBLE_EQ(c.sensors[4].x0, 0.45);
  EXPECT_DOUBLE_EQ(c.sensors[4].y1, 0.55);
}

TEST(Experiment, WritesArtifactsAndVerifies) {
  const auto dir = scratch("artifacts");
  const auto out = run_experiment(small_config(dir));
  for (const char* f : {"config.json", "truth.csv", "reference.csv", "conductivity.csv", "clean.csv", "noisy.csv",
                        "xi.csv", "basis.csv", "reconstruction.csv", "reconstruction.json", "metrics.json",
                        "controls/u_01.csv", "traces/trace_01.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_TRUE(out.result.field.all_finite());
  const auto rep = verify_artifacts(dir);
  EXPECT_TRUE(rep.ok()) << (rep.failures.empty() ? "" : rep.failures.front());
  EXPECT_GE(rep.checks.size(), 10u);
  const auto trace = csv::read_table(dir / "traces/trace_01.csv");
  EXPECT_EQ(trace.header.front(), "iter");
}

TEST(Experiment, VerifyDetectsTampering) {
  const auto dir = scratch("tamper");
  run_experiment(small_config(dir));
  auto j = nlohmann::json::parse(slurp(dir / "reconstruction.json"));
  j["coefficients"][0] = j["coefficients"][0].get<double>() + 1e-3;
  std::ofstream(dir / "reconstruction.json") << j.dump();
  EXPECT_FALSE(verify_artifacts(dir).ok());
}

TEST(Experiment, DeterministicGivenSeed) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  run_experiment(small_config(a));
  run_experiment(small_config(b));
  const auto ma = nlohmann::json::parse(slurp(a / "metrics.json"));
  const auto mb = nlohmann::json::parse(slurp(b / "metrics.json"));
  EXPECT_EQ(without_timing(ma).dump(), without_timing(mb).dump());
  EXPECT_EQ(slurp(a / "reconstruction.csv"), slurp(b / "reconstruction.csv"));
  EXPECT_EQ(slurp(a / "noisy.csv"), slurp(b / "noisy.csv"));
}

TEST(Experiment, ForecastAndVariationMethodsRun) {
  auto c = small_config(scratch("final"));
  c.method = Method::dual_final;
  const auto fin = run_experiment(c);
  EXPECT_EQ(fin.result.method, "dual_final");
  EXPECT_TRUE(verify_artifacts(c.output).ok());
  c.output = scratch("variation").string();
  c.method = Method::variation;
  c.variation_orthonormalize = true;
  const auto var = run_experiment(c);
  EXPECT_EQ(var.result.method, "variation");
  EXPECT_TRUE(verify_artifacts(c.output).ok());
}

TEST(Experiment, TwoDimensionalDiffusionRuns) {
  ExperimentConfig c;
  c.model = ModelKind::diffusion2d;
  c.d = "0.1";
  c.nx = c.ny = 15;
  c.n_t = 40;
  c.m = 2;
  c.truth = "sin(pi*x)*sin(pi*y)";
  c.reg.eta.l2 = 1e-8;
  c.output = scratch("diff2d").string();
  const auto out = run_experiment(c);
  EXPECT_LT(out.rel_error, 0.05);
  EXPECT_TRUE(verify_artifacts(c.output).ok());
  c.d = "0.1 + x";
  EXPECT_THROW(build_problem(c), ConfigError);
  c.d = "0.1";
  c.basis = BasisKind::daubechies;
  EXPECT_THROW(build_problem(c), ConfigError);
}

TEST(Bank, RoundTripIsBitIdentical) {
  const auto dir = scratch("bank");
  auto c = small_config(dir / "run");
  const auto solved = run_experiment(c, false);
  bank_controls(c, dir / "bank");
  c.bank = (dir / "bank").string();
  const auto loaded = run_experiment(c, false);
  ASSERT_EQ(solved.result.coefficients.size(), loaded.result.coefficients.size());
  for (std::size_t k = 0; k < solved.result.coefficients.size(); ++k) {
    EXPECT_EQ(solved.result.coefficients[k], loaded.result.coefficients[k]);
    EXPECT_EQ(solved.result.epsilons[k], loaded.result.epsilons[k]);
  }
  EXPECT_EQ(solved.result.error_budget, loaded.result.error_budget);
  EXPECT_TRUE(loaded.metrics["banked_controls"].get<bool>());
}

TEST(Bank, FreshSeedChangesOnlyTheDataTerm) {
  const auto dir = scratch("bank_seed");
  auto c = small_config(dir / "run");
  bank_controls(c, dir / "bank");
  c.bank = (dir / "bank").string();
  c.seed = 99;
  const auto loaded = run_experiment(c, false);
  c.bank.clear();
  const auto solved = run_experiment(c, false);
  for (std::size_t k = 0; k < solved.result.coefficients.size(); ++k)
    EXPECT_EQ(solved.result.coefficients[k], loaded.result.coefficients[k]);
}

TEST(Bank, ChangedSensorsRefuseToLoad) {
  const auto dir = scratch("bank_mismatch");
  auto c = small_config(dir / "run");
  bank_controls(c, dir / "bank");
  c.sensors[0].x1 = 0.35;
  try {
    load_controls(c, dir / "bank");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sensors"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_controls(c, dir / "nowhere"), ConfigError);
}
