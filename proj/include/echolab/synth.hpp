#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "echolab/datasets.hpp"
#include "echolab/trace.hpp"
#include "echolab/types.hpp"

namespace echolab {

/// Generator family identifier written into reports; bump when the stream changes.
inline constexpr std::string_view kRngVersion = "splitmix64-boxmuller-v1";

/// Counter-based generator: every draw is a pure function of (seed, index), so any sample
/// can be reproduced independently of evaluation order or thread count.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t index) const;
  /// Uniform on (0, 1].
  double uniform(std::uint64_t index) const;
  /// Standard normal (Box-Muller on draws 2 index and 2 index + 1).
  double normal(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
};

/// Independent child seed for dataset `index` under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

enum class NoiseKind { kNone, kMultiplicative, kAdditive };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kNone;
  double level = 0.0;  // relative (multiplicative) or absolute (additive) sigma
  std::uint64_t seed = 0;

  void validate() const;
};

/// Perturbs `clean[i]` with draw i and returns the per-point sigma. Without noise the
/// sigma is |clean| (relative weighting at unit level), floored to stay positive.
struct NoisySample {
  double value;
  double sigma;
};
NoisySample apply_noise(double clean, const NoiseSpec& noise, std::uint64_t index);

/// Cartesian delay grid. A t23 list of {0} produces a two-pulse dataset.
struct DelayGrid {
  std::vector<double> t12;
  std::vector<double> t23{0.0};
};

std::vector<double> linspace(double a, double b, std::size_t n);
std::vector<double> logspace(double a, double b, std::size_t n);

DecayDataset generate_decay_dataset(const DecayParams& truth, const DelayGrid& grid,
                                    const NoiseSpec& noise, const ExperimentConditions& conditions = {});

/// Two-pulse dataset following the squared stretched-exponential law.
DecayDataset generate_mims_dataset(const MimsParams& truth, const std::vector<double>& tau,
                                   const NoiseSpec& noise, const ExperimentConditions& conditions = {});

struct SweepSpec {
  SweepAxis axis = SweepAxis::kB;
  std::vector<double> values;
  Observable observable = Observable::kGammaSD;
  ExperimentConditions fixed;
  NamedValues frozen;
};

SweepDataset generate_sweep(const DependenceParams& truth, const SweepSpec& spec, const NoiseSpec& noise,
                            const ModelOptions& opts = {});

struct TraceSynthesis {
  double f_if = 30e6;     // [Hz]
  double dt = 2e-9;       // [s]
  double width = 0.5e-6;  // Gaussian envelope standard deviation [s]
  double phase = 0.0;     // carrier phase [rad]
  double margin = 10e-6;  // record extends this far past the echo [s]
  double gate_half_width = 2.5e-6;
};

/// Gaussian-envelope tone at f_if centred on the two-pulse echo time 2 delay, plus noise
/// (additive noise adds a white voltage; multiplicative scales the amplitude).
HeterodyneTrace generate_trace(double amplitude, double delay, const TraceSynthesis& spec,
                               const NoiseSpec& noise);

}  // namespace echolab
