#pragma once

#include <vector>

namespace echolab {

struct Gate {
  double start = 0.0;  // [s]
  double end = 0.0;    // [s]
};

/// Digitized heterodyne record; sample k sits at t0 + k dt.
struct HeterodyneTrace {
  double dt = 2e-9;      // [s]
  double t0 = 0.0;       // [s]
  std::vector<double> samples;  // [V]
  double f_if = 30e6;    // intermediate frequency [Hz]
  Gate gate;             // expected echo window

  double duration() const { return dt * static_cast<double>(samples.size()); }
  /// dt > 0, f_if below Nyquist, non-empty record, gate inside the record.
  void validate() const;
};

struct Envelope {
  double dt = 0.0;
  double t0 = 0.0;
  std::vector<double> values;  // [V], non-negative
  double edge = 0.0;           // transient span excluded at both record ends [s]

  double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
};

/// Linear-phase low-pass FIR (Blackman-windowed sinc), unit DC gain, odd length.
/// Transition width equals the cutoff, so the half-length stays below 3/cutoff.
std::vector<double> lowpass_taps(double cutoff, double dt);

/// Default low-pass cutoff relative to the intermediate frequency.
inline double default_cutoff(double f_if) { return f_if / 6.0; }

/// Quadrature demodulation: mix with cos/sin at f_if, low-pass both arms, take
/// 2 |I + iQ|. A cutoff <= 0 selects default_cutoff(f_if). Throws ValidationError on a
/// Nyquist violation or a cutoff at or above f_if / 2.
Envelope demodulate_envelope(const HeterodyneTrace& trace, double lp_cutoff = 0.0);

enum class MetricMode { kPeak, kIntegral };
enum class NoiseFloor { kOff, kPreGateSubtract };

/// Echo intensity from an envelope inside `gate`, restricted to the transient-free span.
/// Peak: max envelope^2. Integral: sum envelope^2 dt. The optional floor is the mean
/// envelope^2 between the leading edge and the gate start.
double echo_metric(const Envelope& envelope, Gate gate, MetricMode mode,
                   NoiseFloor floor = NoiseFloor::kOff);

}  // namespace echolab
