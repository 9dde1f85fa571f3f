#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sys/wait.h>

#include "echolab/commands.hpp"
#include "echolab/decoherence.hpp"
#include "echolab/error.hpp"
#include "echolab/io.hpp"
#include "echolab/parallel.hpp"
#include "echolab/synth.hpp"

using namespace echolab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("echolab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ECHOLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

const json* find_row(const json& rows, const std::string& name) {
  for (const auto& r : rows)
    if (r["name"] == name) return &r;
  return nullptr;
}

}  // namespace

TEST_CASE("estimate with defaults") {
  const auto report = run_command("estimate", RunConfig{});
  const auto& rows = report.document["results"]["rows"];
  const auto* sigma = find_row(rows, "Sigma_ph");
  REQUIRE(sigma);
  CHECK((*sigma)["value"].get<double>() == doctest::Approx(1.86e17).epsilon(0.01));
  const auto* b = find_row(rows, "b_saturated");
  REQUIRE(b);
  CHECK((*b)["value"].get<double>() == doctest::Approx(2e3).epsilon(0.05));
  const auto& flags = report.document["flags"];
  CHECK(std::find(flags.begin(), flags.end(), "nqp_discrepancy") != flags.end());
  CHECK(report.table.find("Sigma_ph") != std::string::npos);
}

TEST_CASE("reports embed their config and are deterministic") {
  RunConfig cfg;
  cfg.seed = 17;
  const auto a = run_command("simulate", cfg);
  const auto b = run_command("simulate", cfg);
  CHECK(a.document.dump() == b.document.dump());
  CHECK(a.files == b.files);
  CHECK(a.document["provenance"]["config"] == cfg.to_json());
  CHECK(a.document["provenance"]["seed"] == 17);
  CHECK(a.document["provenance"]["rng"] == std::string(kRngVersion));
  // The embedded config reproduces the run.
  const auto again = run_command("simulate", RunConfig::from_json(a.document["provenance"]["config"]));
  CHECK(again.document.dump() == a.document.dump());
}

TEST_CASE("config parsing") {
  const json j = json::parse(R"({"conditions": {"B": 0.1, "g_env": 5},
                                  "model": {"tm_variant": "paper", "thermal_divisor": 2},
                                  "seed": 9})");
  const auto cfg = RunConfig::from_json(j);
  CHECK(cfg.conditions.B == 0.1);
  CHECK(cfg.conditions.g_env == 5.0);
  CHECK(cfg.model.tm_variant == TmVariant::kLiteral);
  CHECK(cfg.model.thermal_divisor == 2);
  CHECK(cfg.seed == 9);
  CHECK(RunConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());

  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"colour": 1})")), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"conditions": {"Bfield": 1}})")), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"conditions": {"B": "high"}})")), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"model": {"tm_variant": "exact"}})")), ValidationError);

  RunConfig missing;
  missing.inputs.push_back("/nonexistent/echolab.csv");
  CHECK_THROWS_AS(run_command("fit-decay", missing), ValidationError);
  CHECK_THROWS_AS(run_command("dance", RunConfig{}), ValidationError);
}

TEST_CASE("simulate then fit-decay recovers the truth") {
  const auto dir = scratch("roundtrip");
  RunConfig sim;
  sim.out_dir = dir / "sim";
  sim.seed = 5;
  write_report(run_command("simulate", sim), sim);
  REQUIRE(fs::exists(dir / "sim" / "decay.csv"));
  REQUIRE(fs::exists(dir / "sim" / "report.json"));
  REQUIRE(fs::exists(dir / "sim" / "report.txt"));

  RunConfig fit;
  fit.inputs.push_back(dir / "sim" / "decay.csv");
  fit.out_dir = dir / "fit";
  const auto report = run_command("fit-decay", fit);
  write_report(report, fit);
  const auto& p = report.document["results"]["fit"]["parameters"];
  const auto& truth = sim.simulate.truth;
  CHECK(p["Gamma0"]["value"].get<double>() == doctest::Approx(truth.Gamma0).epsilon(0.05));
  CHECK(p["GammaSD"]["value"].get<double>() == doctest::Approx(truth.GammaSD).epsilon(0.05));
  CHECK(p["R"]["value"].get<double>() == doctest::Approx(truth.R).epsilon(0.05));
  CHECK(p["T1"]["value"].get<double>() == doctest::Approx(truth.T1).epsilon(0.05));
  CHECK(report.document["results"]["phase_memory"]["sqrt"]["physical"] == true);
  CHECK(fs::exists(dir / "fit" / "fit_overlay.csv"));
  CHECK(slurp(dir / "fit" / "fit_overlay.csv").rfind("t12_s,t23_s,intensity,sigma,model\n", 0) == 0);
}

TEST_CASE("sweep pipeline with overlay output") {
  const auto dir = scratch("sweep");
  RunConfig sim;
  sim.out_dir = dir / "sim";
  sim.simulate.sweep.enabled = true;
  sim.simulate.sweep.observable = Observable::kR;
  sim.simulate.sweep.values = logspace(0.03, 0.3, 25);
  sim.simulate.sweep.truth = {10e3, 7.5e3, 0.074, 0, 0, 0};
  sim.conditions.T = 0.012;
  write_report(run_command("simulate", sim), sim);

  RunConfig fit;
  fit.conditions.T = 0.012;
  fit.fit_sweep.inputs.push_back(dir / "sim" / "sweep.csv");
  fit.fit_sweep.inputs.push_back(dir / "sim" / "sweep.csv");
  fit.out_dir = dir / "fit";
  const auto report = run_command("fit-sweep", fit);
  write_report(report, fit);
  REQUIRE(report.document["results"].size() == 2);
  CHECK(report.document["results"][0] == report.document["results"][1]);
  const auto& p = report.document["results"][0]["fit"]["parameters"];
  CHECK(p["Wff"]["value"].get<double>() == doctest::Approx(10e3).epsilon(0.05));
  CHECK(slurp(dir / "fit" / "sweep_fit_0.csv").rfind("B_T,R_per_s,sigma,model\n", 0) == 0);
}

TEST_CASE("non-convergence sets the exit status") {
  const auto dir = scratch("nonconv");
  // Rates that sag at low field ask for a negative Wff, which parks it on its bound.
  SweepSpec spec{SweepAxis::kB, logspace(0.03, 0.3, 12), Observable::kR, {}, {}};
  spec.fixed.T = 0.012;
  auto s = generate_sweep({0, 7.5e3, 0.074, 0, 0, 0}, spec, {NoiseKind::kMultiplicative, 0.02, 1});
  for (auto& p : s.points) p.value *= 1.0 - 0.3 * (0.3 - p.axis);
  save_sweep_csv(dir / "sag.csv", s);
  RunConfig cfg;
  cfg.inputs.push_back(dir / "sag.csv");
  const auto strict = run_command("fit-sweep", cfg);
  CHECK(strict.exit_code == ExitCode::kNonConvergence);
  const auto& flags = strict.document["results"][0]["fit"]["flags"];
  CHECK(std::find(flags.begin(), flags.end(), "Wff_at_bound") != flags.end());
  cfg.allow_nonconverged = true;
  CHECK(run_command("fit-sweep", cfg).exit_code == ExitCode::kSuccess);
  CHECK(run_cli("fit-sweep -q " + (dir / "sag.csv").string() + " --out " + (dir / "o1").string()) == 3);
  CHECK(run_cli("fit-sweep -q --allow-nonconverged " + (dir / "sag.csv").string() + " --out " +
                (dir / "o2").string()) == 0);
}

TEST_CASE("extract-traces builds a decay dataset") {
  const auto dir = scratch("traces");
  const MimsParams p{1.0, 40e-6, 1.3};
  json inputs = json::array();
  for (const double tau : {7e-6, 14e-6, 21e-6}) {
    const auto name = "trace_" + std::to_string(static_cast<int>(tau * 1e6)) + ".csv";
    save_trace_csv(dir / name, generate_trace(mims_amplitude(tau, p), tau, {}, {}));
    inputs.push_back({{"path", name}, {"t12", tau}});
  }
  const json j = {{"traces", {{"inputs", inputs}, {"mode", "peak"}}}, {"out", "out"}};
  std::ofstream(dir / "config.json") << j.dump(2);

  const auto cfg = RunConfig::load(dir / "config.json");
  const auto report = run_command("extract-traces", cfg);
  write_report(report, cfg);
  CHECK(report.document["results"]["metric_mode"] == "peak");
  const auto d = load_decay_csv(dir / "out" / "decay.csv");
  REQUIRE(d.samples.size() == 3);
  const double a0 = std::pow(mims_amplitude(7e-6, p), 2);
  for (const auto& s : d.samples)
    CHECK(s.intensity / d.samples[0].intensity ==
          doctest::Approx(std::pow(mims_amplitude(s.t12, p), 2) / a0).epsilon(0.03));
}

TEST_CASE("table1 flags the known discrepancies") {
  RunConfig cfg;
  cfg.seed = 4;
  const auto report = run_command("table1", cfg);
  const auto& flags = report.document["flags"];
  CHECK(std::find(flags.begin(), flags.end(), "nqp_discrepancy") != flags.end());
  CHECK(std::find(flags.begin(), flags.end(), "tm_literal_variant_discrepancy") != flags.end());
  CHECK(report.document["results"]["rows"].size() == 6);
  CHECK(report.document["results"]["phase_memory_ratio"].get<double>() >= 5.0);
}

TEST_CASE("worker count does not change results") {
  auto square = [](std::size_t i) { return static_cast<double>(i * i); };
  setenv("ECHO_LAB_THREADS", "1", 1);
  CHECK(worker_count() == 1);
  const auto serial = parallel_map<double>(100, square);
  setenv("ECHO_LAB_THREADS", "8", 1);
  CHECK(worker_count() == 8);
  const auto parallel = parallel_map<double>(100, square);
  CHECK(serial == parallel);

  RunConfig cfg;
  const auto a = run_command("table1", cfg);
  setenv("ECHO_LAB_THREADS", "1", 1);
  const auto b = run_command("table1", cfg);
  CHECK(a.document.dump() == b.document.dump());
  unsetenv("ECHO_LAB_THREADS");
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("exit");
  std::ofstream(dir / "empty.csv").close();
  CHECK(run_cli("fit-decay " + (dir / "empty.csv").string() + " --out " + (dir / "e").string()) == 2);
  CHECK(run_cli("dance") == 2);
  CHECK(run_cli("estimate --thermal-divisor 3") == 2);
  CHECK(run_cli("fit-decay /nonexistent/file.csv --out " + (dir / "m").string()) == 2);
  CHECK(run_cli("estimate -q --out " + (dir / "est").string()) == 0);
  CHECK(fs::exists(dir / "est" / "report.json"));

  CHECK(run_cli("simulate -q --seed 3 --out " + (dir / "s1").string()) == 0);
  CHECK(run_cli("simulate -q --seed 3 --out " + (dir / "s2").string()) == 0);
  CHECK(slurp(dir / "s1" / "report.json") == slurp(dir / "s2" / "report.json"));
  CHECK(slurp(dir / "s1" / "decay.csv") == slurp(dir / "s2" / "decay.csv"));

  CHECK(run_cli("fit-decay -q " + (dir / "s1" / "decay.csv").string() + " --tm-variant paper --out " +
                (dir / "f").string()) == 0);
  const auto doc = json::parse(slurp(dir / "f" / "report.json"));
  CHECK(doc["results"]["phase_memory_selected"] == "paper");
  CHECK(doc["provenance"]["config"]["model"]["tm_variant"] == "paper");

  std::ofstream(dir / "bad.json") << R"({"unknown_key": 1})";
  CHECK(run_cli("estimate --config " + (dir / "bad.json").string()) == 2);
}
