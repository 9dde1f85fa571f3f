#pragma once

#include "echolab/types.hpp"

namespace echolab {

/// Arguments below this magnitude switch removable singularities to their series form.
inline constexpr double kSeriesThreshold = 1e-4;

/// A(tau) = A0 exp(-(2 tau / TM)^x). Throws DomainError for tau < 0.
double mims_amplitude(double tau, const MimsParams& p);

/// Stimulated (3PE) echo intensity; the two-pulse echo is t23 = 0.
///   I = I0 exp(-2 t23/T1) exp(-4 pi t12 (Gamma0 + GammaSD/2 (R t12 + 1 - exp(-R t23))))
double echo_intensity(double t12, double t23, const DecayParams& p);

struct PhaseMemory {
  double value = 0.0;     // [s]; may be negative for the literal variant
  bool physical = true;   // value > 0
  bool series = false;    // evaluated through the small-argument expansion
};

/// Phase-memory time derived from the decay parameters.
///
/// Requires Gamma0 > 0 and GammaSD*R > 0; GammaSD*R == 0 raises DegenerateInputError
/// (the pure-exponential limit is 1/(pi Gamma0)). The sqrt-corrected variant switches to
/// its series expansion when GammaSD*R/(pi Gamma0^2) < kSeriesThreshold.
PhaseMemory phase_memory_time(double gamma0, double gamma_sd, double rate,
                              TmVariant variant = TmVariant::kSqrtCorrected);

/// Teff = Tmin sqrt(1 + (T/Tmin)^2).
double effective_temperature(double T, double Tmin);
/// dTeff/dT.
double effective_temperature_slope(double T, double Tmin);

/// Gamma_SD = GammaMax sech^2(g_env muB B / (2 kB Teff)), Teff from (c.T, Tmin).
double spectral_diffusion_linewidth(const ExperimentConditions& c, double gamma_max, double Tmin);

/// omega = g muB B / hbar [rad/s].
double spin_transition_frequency(double g, double B);

/// Resonant flip-flop rate 2 pi Wff tanh^2(hbar omega / (d kB Teff)) [1/s].
double flip_flop_rate(double wff, double omega, double Teff, const ModelOptions& opts = {});

/// Density of phonons resonant with a spin line of width delta_omega:
/// 2 omega^2 delta_omega / (2 pi v^3) [1/m^3].
double resonant_phonon_density(double omega, double delta_omega, double v);

/// Bottleneck factor b = (n_at / Sigma_ph) tanh^2(hbar omega / (d kB Teff)).
double bottleneck_coefficient(double n_at, double sigma_ph, double omega, double Teff,
                              const ModelOptions& opts = {});

/// 1 / (tau_1d + (1 + b) tau_ph).
double direct_rate_general(double tau_1d, double tau_ph, double b);
/// Strong-bottleneck form 1 / (b tau_ph).
double direct_rate_bottleneck(double tau_ph, double b);

/// Total spectral diffusion rate
///   R = 2 pi (WBN g^2 B^2 coth^2 y + Wff tanh^2 y),  y = g muB B / (d kB Teff).
/// Finite at B = 0: g^2 B^2 coth^2 y -> (d kB Teff / muB)^2.
double relaxation_rate(const ExperimentConditions& c, const DependenceParams& p,
                       const ModelOptions& opts = {});

/// Analytic B -> 0 value of relaxation_rate at the temperature in `c`.
double relaxation_rate_zero_field(const ExperimentConditions& c, const DependenceParams& p,
                                  const ModelOptions& opts = {});

/// Delta Gamma_h = R/(4 pi) exp(-g_g muB B/(2 kB T)) sech(g_env muB B/(2 kB T)) [Hz],
/// evaluated at the temperature carried by `c`.
double spin_flip_broadening(const ExperimentConditions& c, double rate);

/// Gamma0 = GammaH + Delta Gamma_h + GammaMaxH sech^2(g_env muB B/(2 kB Teff)).
/// The spin-flip and fast-SD factors are evaluated at Teff(c.T, p.Tmin).
double effective_homogeneous_linewidth(const ExperimentConditions& c, const DependenceParams& p,
                                       double rate);

namespace detail {
// x coth x and its derivative, exact at x = 0.
double x_coth_x(double x);
double x_coth_x_derivative(double x);
double sech(double x);
}  // namespace detail

}  // namespace echolab
