#include "echolab/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "echolab/constants.hpp"
#include "echolab/error.hpp"

namespace echolab {

using C = PhysicalConstants;

void MaterialConstants::validate() const {
  if (!(c_coeff > 0 && kappa_coeff > 0 && v > 0 && sigma0 > 0 && n_at > 0))
    throw ValidationError("material constants must all be > 0");
}

double schottky_heat_capacity(double delta_e, double T) {
  if (!(T > 0.0)) throw DomainError("schottky_heat_capacity: T must be > 0");
  const double x = delta_e / (C::kB * T);
  // e^-x/(1+e^-x)^2 == 1/(4 cosh^2(x/2)), symmetric and overflow-free.
  const double ch = std::cosh(0.5 * x);
  if (!std::isfinite(ch)) return 0.0;
  return x * x / (4.0 * ch * ch);
}

double debye_heat_capacity(double T, const MaterialConstants& m) {
  if (!(T >= 0.0)) throw DomainError("debye_heat_capacity: T must be >= 0");
  return m.c_coeff * T * T * T;
}

double thermal_conductivity(double T, const MaterialConstants& m) {
  if (!(T >= 0.0)) throw DomainError("thermal_conductivity: T must be >= 0");
  return m.kappa_coeff * T * T;
}

PhononTransport phonon_transport(double T, const MaterialConstants& m,
                                 TransportConvention convention) {
  if (!(T > 0.0)) throw DomainError("phonon_transport: T must be > 0");
  PhononTransport out;
  if (convention == TransportConvention::kKinetic) {
    out.mean_free_path = 3.0 * thermal_conductivity(T, m) / (debye_heat_capacity(T, m) * m.v);
  } else {
    out.mean_free_path = kCalibratedMeanFreePath / T;
  }
  out.lifetime = out.mean_free_path / m.v;
  return out;
}

double nqp_linewidth(const MaterialConstants& m, double sigma_ph) {
  return m.sigma0 * m.v * sigma_ph / kPi;
}

double gamma_max_vs_t12(double t12, const NqpModel& nqp) {
  if (!(t12 >= 0.0)) throw DomainError("gamma_max_vs_t12: t12 must be >= 0");
  return nqp.GammaMax0 * std::exp(-t12 / nqp.tau_t12);
}

NqpFit fit_gamma_max_law(std::span<const double> t12, std::span<const double> gamma_max,
                         std::span<const double> sigma) {
  const std::size_t n = t12.size();
  if (gamma_max.size() != n || (!sigma.empty() && sigma.size() != n))
    throw ValidationError("fit_gamma_max_law: input lengths differ");
  if (n < 2) throw ValidationError("fit_gamma_max_law: need at least two points");

  // Weighted line y = a + b t through y = ln GammaMax.
  double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(gamma_max[i] > 0.0)) throw DomainError("fit_gamma_max_law: GammaMax must be > 0");
    const double w = sigma.empty() ? 1.0 : std::pow(gamma_max[i] / sigma[i], 2);
    const double y = std::log(gamma_max[i]);
    sw += w;
    st += w * t12[i];
    sy += w * y;
    stt += w * t12[i] * t12[i];
    sty += w * t12[i] * y;
  }
  const double det = sw * stt - st * st;
  if (!(det > 0.0)) throw IdentifiabilityError("fit_gamma_max_law: delays are not distinct");
  const double slope = (sw * sty - st * sy) / det;
  const double intercept = (stt * sy - st * sty) / det;
  const auto [tlo, thi] = std::minmax_element(t12.begin(), t12.end());
  // Change of ln GammaMax across the delay span; rounding noise on flat data stays far below this.
  if (!(slope * (*thi - *tlo) < -1e-9)) throw ValidationError("fit_gamma_max_law: GammaMax does not decay with t12");

  // Unweighted fits scale the covariance by the residual variance.
  double scale = 1.0;
  if (sigma.empty()) {
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = std::log(gamma_max[i]) - intercept - slope * t12[i];
      ss += r * r;
    }
    scale = n > 2 ? ss / static_cast<double>(n - 2) : 0.0;
  }
  NqpFit out;
  out.model = {std::exp(intercept), -1.0 / slope};
  out.sigma_log_gamma0 = std::sqrt(scale * stt / det);
  out.sigma_tau = std::sqrt(scale * sw / det) / (slope * slope);
  return out;
}

double bottleneck_coefficient_estimate(const MaterialConstants& m, double delta_nu, double tau_ph) {
  if (!(delta_nu > 0.0 && tau_ph > 0.0))
    throw DomainError("bottleneck_coefficient_estimate: delta_nu and tau_ph must be > 0");
  const double gyro = C::muB / C::hbar;
  const double angular = 3.0 * gyro * gyro * delta_nu / (m.v * m.v * m.v * m.n_at * tau_ph);
  return angular / kTwoPi;
}

std::span<const HostReference> host_reference_table() {
  static constexpr std::array<HostReference, 4> kTable{{
      {"LiYF4", 0.79, 6.3, 6.3},
      {"SiO2", 0.74, 7.5, 12.7},
      {"YAlO3", 0.42, 11.0, 11.0},
      {"Y3Al5O12", 0.625, 14.0, 14.0},
  }};
  return kTable;
}

}  // namespace echolab
