#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace echolab {

/// Host-crystal and dopant constants. Defaults describe Er-doped Y2SiO5.
struct MaterialConstants {
  double c_coeff = 0.22;      // Debye heat capacity coefficient [J m^-3 K^-4]
  double kappa_coeff = 0.02;  // thermal conductivity coefficient [W m^-1 K^-3]
  double v = 4000.0;          // speed of sound [m/s]
  double sigma0 = 10e-18;     // phonon scattering cross-section [m^2]
  double n_at = 3.66e20;      // dopant density [1/m^3]

  void validate() const;
};

/// Empirical decay of the spectral diffusion amplitude with the first pulse delay.
struct NqpModel {
  double GammaMax0 = 90e3;  // [Hz]
  double tau_t12 = 25e-6;   // [s]
};

/// Two-level heat capacity per spin in units of kB, with x = deltaE/(kB T):
/// x^2 e^-x / (1 + e^-x)^2.
double schottky_heat_capacity(double delta_e, double T);

/// c_coeff T^3 [J m^-3 K^-1].
double debye_heat_capacity(double T, const MaterialConstants& m);
/// kappa_coeff T^2 [W m^-1 K^-1].
double thermal_conductivity(double T, const MaterialConstants& m);

enum class TransportConvention {
  kKinetic,     // l = 3 kappa / (c v)
  kCalibrated,  // l = 7e-6 m K / T
};

struct PhononTransport {
  double mean_free_path = 0.0;  // [m]
  double lifetime = 0.0;        // [s], mean_free_path / v
};

inline constexpr double kCalibratedMeanFreePath = 7e-6;  // [m K]

PhononTransport phonon_transport(double T, const MaterialConstants& m,
                                 TransportConvention convention = TransportConvention::kKinetic);

/// Line broadening from non-equilibrium phonons: sigma0 v Sigma_ph / pi [Hz].
double nqp_linewidth(const MaterialConstants& m, double sigma_ph);

/// GammaMax0 exp(-t12 / tau_t12).
double gamma_max_vs_t12(double t12, const NqpModel& nqp);

struct NqpFit {
  NqpModel model;
  double sigma_log_gamma0 = 0.0;  // 1 sigma of ln GammaMax0
  double sigma_tau = 0.0;         // 1 sigma of tau_t12 [s]
};

/// Least-squares line through ln GammaMax versus t12. Optional per-point sigmas on GammaMax
/// weight the log residuals by (GammaMax/sigma)^2. Needs at least two distinct delays.
NqpFit fit_gamma_max_law(std::span<const double> t12, std::span<const double> gamma_max,
                         std::span<const double> sigma = {});

/// Strong-bottleneck prefactor 3 muB^2 dnu / (hbar^2 v^3 n_at tau_ph), converted from
/// angular rate to the ordinary-frequency convention [Hz/T^2].
double bottleneck_coefficient_estimate(const MaterialConstants& m, double delta_nu, double tau_ph);

/// Room-temperature thermal data of common optical hosts.
struct HostReference {
  std::string_view host;
  double heat_capacity_j_per_g_k;
  double conductivity_low_w_per_m_k;
  double conductivity_high_w_per_m_k;  // equal to low when a single value is known
};

std::span<const HostReference> host_reference_table();

}  // namespace echolab
