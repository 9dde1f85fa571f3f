#pragma once

namespace echolab {

// Linewidths and rate coefficients (Gamma*, W*) are ordinary frequencies in Hz.
// Angular quantities (omega, delta_omega) are rad/s. Rates R are 1/s.

/// One measurement point.
struct ExperimentConditions {
  double B = 0.0;        // magnetic flux density [T]
  double T = 0.012;      // bath temperature [K]
  double g_spin = 7.0;   // effective ground-state electron g-factor
  double g_env = 7.0;    // spin-bath g-factor
  double g_g = 7.0;      // ground-state g-factor of the spin-flip broadening term

  void validate() const;
};

/// Per-curve quantities of the stimulated-echo decay law.
struct DecayParams {
  double I0 = 1.0;       // peak echo intensity [a.u.]
  double Gamma0 = 0.0;   // effective homogeneous linewidth [Hz]
  double GammaSD = 0.0;  // spectral diffusion linewidth [Hz]
  double R = 0.0;        // spectral diffusion rate [1/s]
  double T1 = 1.0;       // excited-state lifetime [s]

  void validate() const;
};

/// Stretched-exponential amplitude decay.
struct MimsParams {
  double A0 = 1.0;   // [a.u.]
  double TM = 1.0;   // phase-memory time [s]
  double x = 1.0;    // stretch exponent, 1..3

  void validate() const;
};

/// Sweep-level parameters shared by the field and temperature dependences.
struct DependenceParams {
  double Wff = 0.0;        // flip-flop coefficient [Hz]
  double WBN = 0.0;        // bottleneck coefficient [Hz/T^2]
  double Tmin = 0.074;     // minimal attainable temperature [K]
  double GammaMax = 0.0;   // maximal spectral diffusion broadening [Hz]
  double GammaH = 0.0;     // intrinsic homogeneous linewidth [Hz]
  double GammaMaxH = 0.0;  // fast spectral diffusion amplitude inside Gamma0 [Hz]

  void validate() const;
};

enum class TmVariant {
  kLiteral,        // (2G0/P)(-1 + P/(pi G0^2)), P = GammaSD*R
  kSqrtCorrected,  // (2G0/P)(-1 + sqrt(1 + P/(pi G0^2)))
};

/// Conventions that the published expressions leave open.
struct ModelOptions {
  // Divisor d in the tanh/coth argument hbar*omega/(d*kB*Teff).
  int thermal_divisor = 1;
  TmVariant tm_variant = TmVariant::kSqrtCorrected;

  void validate() const;
};

}  // namespace echolab
