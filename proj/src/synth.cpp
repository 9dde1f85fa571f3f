#include "echolab/synth.hpp"

#include <cmath>

#include "echolab/constants.hpp"
#include "echolab/decoherence.hpp"
#include "echolab/error.hpp"
#include "echolab/sweep_fits.hpp"

namespace echolab {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t CounterRng::bits(std::uint64_t index) const {
  return splitmix64(seed_ ^ splitmix64(index));
}

double CounterRng::uniform(std::uint64_t index) const {
  return static_cast<double>((bits(index) >> 11) + 1) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index) const {
  const double u1 = uniform(2 * index);
  const double u2 = uniform(2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) + 0xD1B54A32D192ED03ULL * (index + 1));
}

void NoiseSpec::validate() const {
  if (!(level >= 0.0)) throw ValidationError("noise level must be >= 0");
}

NoisySample apply_noise(double clean, const NoiseSpec& noise, std::uint64_t index) {
  constexpr double kFloor = 1e-300;
  const CounterRng rng(noise.seed);
  switch (noise.kind) {
    case NoiseKind::kNone: return {clean, std::max(std::abs(clean), kFloor)};
    case NoiseKind::kMultiplicative:
      return {clean * (1.0 + noise.level * rng.normal(index)),
              std::max(noise.level * std::abs(clean), kFloor)};
    case NoiseKind::kAdditive:
      return {clean + noise.level * rng.normal(index), std::max(noise.level, kFloor)};
  }
  return {clean, 1.0};
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("logspace: endpoints must be > 0");
  auto out = linspace(std::log(a), std::log(b), n);
  for (auto& v : out) v = std::exp(v);
  if (n > 1) {
    out.front() = a;
    out.back() = b;
  }
  return out;
}

DecayDataset generate_decay_dataset(const DecayParams& truth, const DelayGrid& grid,
                                    const NoiseSpec& noise, const ExperimentConditions& conditions) {
  truth.validate();
  noise.validate();
  if (grid.t12.empty() || grid.t23.empty()) throw ValidationError("delay grid is empty");
  DecayDataset d;
  d.conditions = conditions;
  std::uint64_t index = 0;
  for (const double t12 : grid.t12) {
    for (const double t23 : grid.t23) {
      const auto s = apply_noise(echo_intensity(t12, t23, truth), noise, index++);
      d.samples.push_back({t12, t23, s.value, s.sigma});
    }
  }
  d.kind = DecayDataset::infer_kind(d.samples);
  return d;
}

DecayDataset generate_mims_dataset(const MimsParams& truth, const std::vector<double>& tau,
                                   const NoiseSpec& noise, const ExperimentConditions& conditions) {
  truth.validate();
  noise.validate();
  DecayDataset d;
  d.conditions = conditions;
  d.kind = EchoKind::k2PE;
  std::uint64_t index = 0;
  for (const double t : tau) {
    const double a = mims_amplitude(t, truth);
    const auto s = apply_noise(a * a, noise, index++);
    d.samples.push_back({t, 0.0, s.value, s.sigma});
  }
  return d;
}

SweepDataset generate_sweep(const DependenceParams& truth, const SweepSpec& spec, const NoiseSpec& noise,
                            const ModelOptions& opts) {
  truth.validate();
  noise.validate();
  SweepDataset s;
  s.axis = spec.axis;
  s.observable = spec.observable;
  s.fixed = spec.fixed;
  s.frozen = spec.frozen;
  std::uint64_t index = 0;
  for (const double v : spec.values) {
    const double clean = dependence_value(spec.observable, s.conditions_at(v), truth, opts);
    const auto n = apply_noise(clean, noise, index++);
    s.points.push_back({v, n.value, n.sigma});
  }
  return s;
}

HeterodyneTrace generate_trace(double amplitude, double delay, const TraceSynthesis& spec,
                               const NoiseSpec& noise) {
  noise.validate();
  if (!(delay >= 0.0)) throw DomainError("generate_trace: delay must be >= 0");
  if (!(spec.dt > 0.0) || !(spec.f_if < 0.5 / spec.dt))
    throw ValidationError("generate_trace: f_if violates the Nyquist limit");
  const double echo = 2.0 * delay;
  const double duration = echo + spec.margin;
  const auto n = static_cast<std::size_t>(std::ceil(duration / spec.dt));

  HeterodyneTrace tr;
  tr.dt = spec.dt;
  tr.f_if = spec.f_if;
  tr.samples.resize(n);
  tr.gate = {std::max(0.0, echo - spec.gate_half_width), std::min(duration, echo + spec.gate_half_width)};

  const CounterRng rng(noise.seed);
  double amp = amplitude;
  if (noise.kind == NoiseKind::kMultiplicative) amp *= 1.0 + noise.level * rng.normal(0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = spec.dt * static_cast<double>(k);
    const double u = (t - echo) / spec.width;
    double v = amp * std::exp(-0.5 * u * u) * std::cos(kTwoPi * spec.f_if * t + spec.phase);
    if (noise.kind == NoiseKind::kAdditive) v += noise.level * rng.normal(k + 1);
    tr.samples[k] = v;
  }
  return tr;
}

}  // namespace echolab
