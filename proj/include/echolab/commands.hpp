#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "echolab/datasets.hpp"
#include "echolab/error.hpp"
#include "echolab/fit.hpp"
#include "echolab/estimators.hpp"
#include "echolab/synth.hpp"
#include "echolab/trace.hpp"
#include "echolab/types.hpp"

namespace echolab {

inline constexpr std::string_view kVersion = "0.1.0";

struct EstimateConfig {
  double omega_ref = 1.40857e10;        // spin transition frequency behind Sigma_ph [rad/s]
  double delta_omega = 2.0 * 3.141592653589793 * 30e6;  // inhomogeneous spin linewidth [rad/s]
  double tau_ph = 500e-9;               // phonon lifetime [s]
  double tau_1d = 1e-5;                 // ion-phonon relaxation time [s]
  double T_bath = 0.012;                // [K]
  double Tmin = 0.074;                  // [K]
  double schottky_B = 0.2;              // [T]
  double schottky_T = 0.2;              // [K]
  double transport_T = 1.0;             // [K]
  double reference_nqp = 10e3;          // published NQP linewidth [Hz]
};

struct SweepSimulation {
  bool enabled = false;
  Observable observable = Observable::kR;
  SweepAxis axis = SweepAxis::kB;
  std::vector<double> values;
  DependenceParams truth;
};

struct SimulateConfig {
  std::string kind = "3PE";  // 3PE | 2PE | mims
  DecayParams truth{1.0, 300.0, 20e3, 5e3, 3e-3};
  MimsParams mims{1.0, 120e-6, 1.6};
  std::vector<double> t12{10e-6, 15e-6, 20e-6, 30e-6};
  std::vector<double> t23;  // empty: 25 log-spaced values from 10 us to 10 ms
  NoiseSpec noise{NoiseKind::kMultiplicative, 0.01, 0};
  SweepSimulation sweep;
};

struct FitDecayConfig {
  std::optional<std::filesystem::path> input;
  std::string model = "auto";  // auto | mims | surface | 2pe-sd
  double R = 0.0;              // frozen rate for 2pe-sd [1/s]
  double R_sigma = 0.0;
  bool propagate_R = true;
};

struct FitSweepConfig {
  std::vector<std::filesystem::path> inputs;
  NamedValues frozen;
};

struct TraceInput {
  std::filesystem::path path;
  double t12 = 0.0;
  double t23 = 0.0;
  std::optional<Gate> gate;  // default: 2 (t12 + t23) +- gate_half_width
};

struct TraceConfig {
  std::vector<TraceInput> inputs;
  double f_if = 30e6;
  double lp_cutoff = 0.0;  // <= 0: f_if / 6
  double gate_half_width = 2.5e-6;
  MetricMode mode = MetricMode::kPeak;
  NoiseFloor noise_floor = NoiseFloor::kOff;
  double sigma_rel = 0.01;
};

struct Table1Input {
  std::filesystem::path path;
  double t12 = 0.0;  // for GammaSD rows
};

struct Table1Config {
  std::size_t points = 25;
  double noise_level = 0.02;
  std::vector<Table1Input> inputs;
};

/// Everything a command needs. Parsed from JSON; unknown keys are rejected.
struct RunConfig {
  ExperimentConditions conditions{0.28, 0.012, 7.0, 7.0, 7.0};
  ModelOptions model;
  MaterialConstants material;
  EstimateConfig estimate;
  SimulateConfig simulate;
  FitDecayConfig fit_decay;
  FitSweepConfig fit_sweep;
  TraceConfig traces;
  Table1Config table1;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
  bool allow_nonconverged = false;
  std::vector<std::filesystem::path> inputs;  // positional command inputs

  /// Relative paths inside the JSON resolve against `base_dir`.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  /// Invariants: valid physics inputs and every referenced input path exists.
  void validate() const;
};

struct Report {
  std::string command;
  nlohmann::json document;  // machine-readable, deterministic
  std::string table;        // human-readable summary
  ExitCode exit_code = ExitCode::kSuccess;
  std::vector<std::pair<std::string, std::string>> files;  // relative name -> contents
};

/// Commands: simulate, fit-decay, fit-sweep, extract-traces, estimate, table1.
Report run_command(std::string_view command, const RunConfig& config);

/// Writes report.json, report.txt and the command's CSV outputs into config.out_dir.
void write_report(const Report& report, const RunConfig& config);

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace echolab
