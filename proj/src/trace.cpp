#include "echolab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "echolab/constants.hpp"
#include "echolab/error.hpp"

namespace echolab {

void HeterodyneTrace::validate() const {
  if (!(dt > 0.0)) throw ValidationError("trace: dt must be > 0");
  if (samples.empty()) throw ValidationError("trace: empty record");
  if (!(f_if > 0.0) || !(f_if < 0.5 / dt))
    throw ValidationError("trace: intermediate frequency violates the Nyquist limit 1/(2 dt)");
  const double end = t0 + duration();
  if (!(gate.start < gate.end) || gate.start < t0 || gate.end > end)
    throw ValidationError("trace: gate lies outside the record");
}

std::vector<double> lowpass_taps(double cutoff, double dt) {
  const double fc = cutoff * dt;  // cycles per sample
  const auto half = static_cast<std::size_t>(std::ceil(2.75 / fc));
  const std::size_t n = 2 * half + 1;
  std::vector<double> h(n);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double m = static_cast<double>(k) - static_cast<double>(half);
    const double sinc = m == 0.0 ? 2.0 * fc : std::sin(kTwoPi * fc * m) / (kPi * m);
    const double phase = kTwoPi * static_cast<double>(k) / static_cast<double>(n - 1);
    const double window = 0.42 - 0.5 * std::cos(phase) + 0.08 * std::cos(2.0 * phase);
    h[k] = sinc * window;
    sum += h[k];
  }
  for (auto& v : h) v /= sum;
  return h;
}

namespace {

// Zero-padded "same" convolution with a symmetric odd-length kernel.
std::vector<double> filter_same(const std::vector<double>& x, const std::vector<double>& h) {
  const std::size_t n = x.size();
  const std::size_t half = h.size() / 2;
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k_lo = i + half >= n ? i + half - (n - 1) : 0;
    const std::size_t k_hi = std::min(h.size() - 1, i + half);
    double acc = 0.0;
    for (std::size_t k = k_lo; k <= k_hi; ++k) acc += h[k] * x[i + half - k];
    y[i] = acc;
  }
  return y;
}

}  // namespace

Envelope demodulate_envelope(const HeterodyneTrace& trace, double lp_cutoff) {
  trace.validate();
  const double cutoff = lp_cutoff > 0.0 ? lp_cutoff : default_cutoff(trace.f_if);
  if (!(cutoff < trace.f_if / 2.0))
    throw ValidationError("demodulate_envelope: cutoff must be below f_if / 2");

  const std::size_t n = trace.samples.size();
  std::vector<double> in_phase(n), quadrature(n);
  const double w = kTwoPi * trace.f_if;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = trace.t0 + trace.dt * static_cast<double>(k);
    in_phase[k] = trace.samples[k] * std::cos(w * t);
    quadrature[k] = -trace.samples[k] * std::sin(w * t);
  }
  const auto taps = lowpass_taps(cutoff, trace.dt);
  in_phase = filter_same(in_phase, taps);
  quadrature = filter_same(quadrature, taps);

  Envelope env;
  env.dt = trace.dt;
  env.t0 = trace.t0;
  env.edge = 3.0 / cutoff;
  env.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) env.values[k] = 2.0 * std::hypot(in_phase[k], quadrature[k]);
  return env;
}

double echo_metric(const Envelope& envelope, Gate gate, MetricMode mode, NoiseFloor floor) {
  const std::size_t n = envelope.values.size();
  if (n == 0) throw ValidationError("echo_metric: empty envelope");
  const double record_end = envelope.t0 + envelope.dt * static_cast<double>(n);
  if (!(gate.start < gate.end) || gate.start < envelope.t0 || gate.end > record_end)
    throw ValidationError("echo_metric: gate lies outside the record");

  const double usable_lo = envelope.t0 + envelope.edge;
  const double usable_hi = record_end - envelope.edge;
  const double lo = std::max(gate.start, usable_lo);
  const double hi = std::min(gate.end, usable_hi);

  auto index_at = [&](double t) {
    return static_cast<std::size_t>(std::clamp(std::ceil((t - envelope.t0) / envelope.dt - 1e-9), 0.0,
                                                static_cast<double>(n)));
  };
  const std::size_t k_lo = index_at(lo);
  const std::size_t k_hi = index_at(hi);  // exclusive
  if (!(lo < hi) || k_lo >= k_hi) throw ValidationError("echo_metric: gate is empty after edge exclusion");

  double noise = 0.0;
  if (floor == NoiseFloor::kPreGateSubtract) {
    const std::size_t p_lo = index_at(usable_lo);
    const std::size_t p_hi = index_at(gate.start);
    if (p_lo >= p_hi) throw ValidationError("echo_metric: no pre-gate samples for the noise floor");
    for (std::size_t k = p_lo; k < p_hi; ++k) noise += envelope.values[k] * envelope.values[k];
    noise /= static_cast<double>(p_hi - p_lo);
  }

  if (mode == MetricMode::kPeak) {
    double peak = 0.0;
    for (std::size_t k = k_lo; k < k_hi; ++k) peak = std::max(peak, envelope.values[k] * envelope.values[k]);
    return peak - noise;
  }
  double sum = 0.0;
  for (std::size_t k = k_lo; k < k_hi; ++k) sum += envelope.values[k] * envelope.values[k] - noise;
  return sum * envelope.dt;
}

}  // namespace echolab
