#include "echolab/decoherence.hpp"

#include <cmath>
#include <string>

#include "echolab/constants.hpp"
#include "echolab/error.hpp"

namespace echolab {

namespace {

using C = PhysicalConstants;

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

double thermal_argument(double omega, double Teff, const ModelOptions& opts) {
  return C::hbar * omega / (opts.thermal_divisor * C::kB * Teff);
}

double zeeman_argument(double g, double B, double T) { return g * C::muB * B / (2.0 * C::kB * T); }

}  // namespace

void ExperimentConditions::validate() const {
  if (!(B >= 0.0)) throw ValidationError("conditions: B must be >= 0");
  if (!(T > 0.0)) throw ValidationError("conditions: T must be > 0");
  if (!(g_spin > 0.0 && g_env > 0.0 && g_g > 0.0))
    throw ValidationError("conditions: g-factors must be > 0");
}

void DecayParams::validate() const {
  if (!(I0 > 0.0)) throw ValidationError("decay params: I0 must be > 0");
  if (!(Gamma0 >= 0.0 && GammaSD >= 0.0 && R >= 0.0))
    throw ValidationError("decay params: Gamma0, GammaSD, R must be >= 0");
  if (!(T1 > 0.0)) throw ValidationError("decay params: T1 must be > 0");
}

void MimsParams::validate() const {
  if (!(A0 > 0.0 && TM > 0.0)) throw ValidationError("mims params: A0 and TM must be > 0");
  if (!(x >= 1.0 && x <= 3.0)) throw ValidationError("mims params: x must lie in [1, 3]");
}

void DependenceParams::validate() const {
  if (!(Wff >= 0.0 && WBN >= 0.0 && GammaMax >= 0.0 && GammaH >= 0.0 && GammaMaxH >= 0.0))
    throw ValidationError("dependence params: coefficients must be >= 0");
  if (!(Tmin > 0.0)) throw ValidationError("dependence params: Tmin must be > 0");
}

void ModelOptions::validate() const {
  if (thermal_divisor != 1 && thermal_divisor != 2)
    throw ValidationError("thermal divisor must be 1 or 2, got " + std::to_string(thermal_divisor));
}

namespace detail {

double x_coth_x(double x) {
  if (std::abs(x) < kSeriesThreshold) return 1.0 + x * x / 3.0;
  return x / std::tanh(x);
}

double x_coth_x_derivative(double x) {
  if (std::abs(x) < kSeriesThreshold) return 2.0 * x / 3.0;
  const double s = std::sinh(x);
  if (!std::isfinite(s)) return std::copysign(1.0, x);
  return 1.0 / std::tanh(x) - x / (s * s);
}

double sech(double x) {
  const double c = std::cosh(x);
  return std::isfinite(c) ? 1.0 / c : 0.0;
}

}  // namespace detail

double mims_amplitude(double tau, const MimsParams& p) {
  require(tau >= 0.0, "mims_amplitude: tau must be >= 0");
  return p.A0 * std::exp(-std::pow(2.0 * tau / p.TM, p.x));
}

double echo_intensity(double t12, double t23, const DecayParams& p) {
  require(t12 >= 0.0 && t23 >= 0.0, "echo_intensity: delays must be >= 0");
  const double sd = 0.5 * p.GammaSD * (p.R * t12 - std::expm1(-p.R * t23));
  return p.I0 * std::exp(-2.0 * t23 / p.T1) * std::exp(-4.0 * kPi * t12 * (p.Gamma0 + sd));
}

PhaseMemory phase_memory_time(double gamma0, double gamma_sd, double rate, TmVariant variant) {
  require(gamma0 > 0.0, "phase_memory_time: Gamma0 must be > 0");
  require(gamma_sd >= 0.0 && rate >= 0.0, "phase_memory_time: GammaSD and R must be >= 0");
  const double product = gamma_sd * rate;
  if (product == 0.0)
    throw DegenerateInputError(
        "phase_memory_time: GammaSD*R = 0; use the pure-exponential limit 1/(pi Gamma0)");

  const double k = product / (kPi * gamma0 * gamma0);
  PhaseMemory out;
  if (variant == TmVariant::kLiteral) {
    out.value = 2.0 * gamma0 / product * (-1.0 + k);
  } else if (k < kSeriesThreshold) {
    // 2(sqrt(1+k) - 1)/k = 1 - k/4 + k^2/8 - ...
    out.value = (1.0 - k / 4.0 + k * k / 8.0) / (kPi * gamma0);
    out.series = true;
  } else {
    // sqrt(1+k) - 1 written without cancellation.
    out.value = 2.0 * gamma0 / product * (k / (std::sqrt(1.0 + k) + 1.0));
  }
  out.physical = out.value > 0.0;
  return out;
}

double effective_temperature(double T, double Tmin) {
  require(Tmin > 0.0, "effective_temperature: Tmin must be > 0");
  require(T >= 0.0, "effective_temperature: T must be >= 0");
  return std::hypot(Tmin, T);
}

double effective_temperature_slope(double T, double Tmin) {
  return T / effective_temperature(T, Tmin);
}

double spectral_diffusion_linewidth(const ExperimentConditions& c, double gamma_max, double Tmin) {
  const double teff = effective_temperature(c.T, Tmin);
  const double s = detail::sech(zeeman_argument(c.g_env, c.B, teff));
  return gamma_max * s * s;
}

double spin_transition_frequency(double g, double B) { return g * C::muB * B / C::hbar; }

double flip_flop_rate(double wff, double omega, double Teff, const ModelOptions& opts) {
  require(Teff > 0.0, "flip_flop_rate: Teff must be > 0");
  const double t = std::tanh(thermal_argument(omega, Teff, opts));
  return kTwoPi * wff * t * t;
}

double resonant_phonon_density(double omega, double delta_omega, double v) {
  require(v > 0.0, "resonant_phonon_density: v must be > 0");
  return 2.0 * omega * omega * delta_omega / (kTwoPi * v * v * v);
}

double bottleneck_coefficient(double n_at, double sigma_ph, double omega, double Teff,
                              const ModelOptions& opts) {
  require(sigma_ph > 0.0, "bottleneck_coefficient: Sigma_ph must be > 0");
  require(Teff > 0.0, "bottleneck_coefficient: Teff must be > 0");
  const double t = std::tanh(thermal_argument(omega, Teff, opts));
  return n_at / sigma_ph * t * t;
}

double direct_rate_general(double tau_1d, double tau_ph, double b) {
  require(tau_1d >= 0.0 && tau_ph >= 0.0 && b >= 0.0, "direct_rate_general: inputs must be >= 0");
  const double denom = tau_1d + (1.0 + b) * tau_ph;
  if (denom == 0.0) throw DegenerateInputError("direct_rate_general: zero denominator");
  return 1.0 / denom;
}

double direct_rate_bottleneck(double tau_ph, double b) {
  const double denom = b * tau_ph;
  if (!(denom > 0.0)) throw DegenerateInputError("direct_rate_bottleneck: b*tau_ph must be > 0");
  return 1.0 / denom;
}

double relaxation_rate(const ExperimentConditions& c, const DependenceParams& p,
                       const ModelOptions& opts) {
  const double teff = effective_temperature(c.T, p.Tmin);
  // g^2 B^2 coth^2 y == K^2 (y coth y)^2 with K = d kB Teff / muB, y = g B / K.
  const double K = opts.thermal_divisor * C::kB * teff / C::muB;
  const double y = c.g_spin * c.B / K;
  const double xc = detail::x_coth_x(y);
  const double t = std::tanh(y);
  return kTwoPi * (p.WBN * K * K * xc * xc + p.Wff * t * t);
}

double relaxation_rate_zero_field(const ExperimentConditions& c, const DependenceParams& p,
                                  const ModelOptions& opts) {
  const double teff = effective_temperature(c.T, p.Tmin);
  const double K = opts.thermal_divisor * C::kB * teff / C::muB;
  return kTwoPi * p.WBN * K * K;
}

double spin_flip_broadening(const ExperimentConditions& c, double rate) {
  require(rate >= 0.0, "spin_flip_broadening: R must be >= 0");
  require(c.T > 0.0, "spin_flip_broadening: T must be > 0");
  return rate / (4.0 * kPi) * std::exp(-zeeman_argument(c.g_g, c.B, c.T)) *
         detail::sech(zeeman_argument(c.g_env, c.B, c.T));
}

double effective_homogeneous_linewidth(const ExperimentConditions& c, const DependenceParams& p,
                                       double rate) {
  ExperimentConditions eff = c;
  eff.T = effective_temperature(c.T, p.Tmin);
  const double s = detail::sech(zeeman_argument(c.g_env, c.B, eff.T));
  return p.GammaH + spin_flip_broadening(eff, rate) + p.GammaMaxH * s * s;
}

}  // namespace echolab
