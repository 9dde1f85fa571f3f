#include "echolab/sweep_fits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "echolab/constants.hpp"
#include "echolab/decoherence.hpp"
#include "echolab/error.hpp"

namespace echolab {

namespace {

using C = PhysicalConstants;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTminFloor = 1e-4;  // [K]

// Value and parameter gradient of one observable at one point. Gradient order follows
// dependence_parameter_names().
struct Evaluation {
  double value = 0.0;
  std::array<double, 5> grad{};
};

struct RateTerms {
  double value, d_wff, d_wbn, d_tmin;
};

// R and its derivatives; dteff = dTeff/dTmin.
RateTerms rate_terms(const ExperimentConditions& c, double wff, double wbn, double teff, double dteff,
                     const ModelOptions& opts) {
  const double K = opts.thermal_divisor * C::kB * teff / C::muB;
  const double y = c.g_spin * c.B / K;
  const double xc = detail::x_coth_x(y);
  const double h = xc * xc;
  const double dh = 2.0 * xc * detail::x_coth_x_derivative(y);
  const double t = std::tanh(y);
  const double dy = -y / teff * dteff;
  RateTerms r{};
  r.value = kTwoPi * (wbn * K * K * h + wff * t * t);
  r.d_wff = kTwoPi * t * t;
  r.d_wbn = kTwoPi * K * K * h;
  r.d_tmin = kTwoPi * (wbn * K * K * dteff / teff * (2.0 * h - y * dh) + wff * 2.0 * t * (1.0 - t * t) * dy);
  return r;
}

Evaluation evaluate_point(Observable obs, const ExperimentConditions& c, std::span<const double> p,
                          const ModelOptions& opts) {
  Evaluation e;
  switch (obs) {
    case Observable::kGammaSD: {
      const double gmax = p[0], tmin = p[1];
      const double teff = effective_temperature(c.T, tmin);
      const double dteff = tmin / teff;
      const double a = c.g_env * C::muB * c.B / (2.0 * C::kB * teff);
      const double s = detail::sech(a);
      e.value = gmax * s * s;
      e.grad[0] = s * s;
      e.grad[1] = gmax * 2.0 * s * s * std::tanh(a) * a * dteff / teff;
      return e;
    }
    case Observable::kR: {
      const double tmin = p[2];
      const double teff = effective_temperature(c.T, tmin);
      const auto r = rate_terms(c, p[0], p[1], teff, tmin / teff, opts);
      e.value = r.value;
      e.grad[0] = r.d_wff;
      e.grad[1] = r.d_wbn;
      e.grad[2] = r.d_tmin;
      return e;
    }
    case Observable::kGamma0: {
      const double gh = p[0], gmh = p[1], tmin = p[2], wff = p[3], wbn = p[4];
      const double teff = effective_temperature(c.T, tmin);
      const double dteff = tmin / teff;
      const auto r = rate_terms(c, wff, wbn, teff, dteff, opts);
      const double a = c.g_env * C::muB * c.B / (2.0 * C::kB * teff);
      const double cg = c.g_g * C::muB * c.B / (2.0 * C::kB * teff);
      const double s = detail::sech(a);
      const double f = std::exp(-cg) * s / (4.0 * kPi);
      const double ta = std::tanh(a);
      const double df = f * (cg + a * ta) * dteff / teff;
      const double ds2 = s * s * 2.0 * a * ta * dteff / teff;
      e.value = gh + r.value * f + gmh * s * s;
      e.grad[0] = 1.0;
      e.grad[1] = s * s;
      e.grad[2] = f * r.d_tmin + r.value * df + gmh * ds2;
      e.grad[3] = f * r.d_wff;
      e.grad[4] = f * r.d_wbn;
      return e;
    }
    case Observable::kT1:
    case Observable::kTM:
      break;
  }
  throw ValidationError("no closed-form dependence model for observable " + std::string(to_string(obs)));
}

class SweepModel final : public Model {
 public:
  SweepModel(const SweepDataset& s, const ModelOptions& opts)
      : observable_(s.observable), names_(dependence_parameter_names(s.observable)), opts_(opts) {
    for (const auto& pt : s.sorted_points()) conditions_.push_back(s.conditions_at(pt.axis));
  }

  const std::vector<std::string>& parameter_names() const override { return names_; }
  std::size_t num_observations() const override { return conditions_.size(); }

  void evaluate(std::span<const double> p, std::span<double> values,
                Eigen::MatrixXd* jacobian) const override {
    const auto np = static_cast<Eigen::Index>(names_.size());
    if (jacobian) jacobian->resize(static_cast<Eigen::Index>(conditions_.size()), np);
    for (std::size_t i = 0; i < conditions_.size(); ++i) {
      const Evaluation e = evaluate_point(observable_, conditions_[i], p, opts_);
      values[i] = e.value;
      if (jacobian)
        for (Eigen::Index j = 0; j < np; ++j)
          (*jacobian)(static_cast<Eigen::Index>(i), j) = e.grad[static_cast<std::size_t>(j)];
    }
  }

 private:
  Observable observable_;
  std::vector<std::string> names_;
  ModelOptions opts_;
  std::vector<ExperimentConditions> conditions_;
};

// The dependence models are linear in every parameter except Tmin. Scan Tmin on a log grid,
// solve the linear part by weighted least squares, keep the best.
NamedValues initial_guess(const SweepDataset& s, const SweepModel& model) {
  const auto& names = model.parameter_names();
  const auto points = s.sorted_points();
  const auto n = static_cast<Eigen::Index>(points.size());
  const std::size_t tmin_index =
      static_cast<std::size_t>(std::find(names.begin(), names.end(), "Tmin") - names.begin());

  std::vector<double> grid;
  if (const auto it = s.frozen.find("Tmin"); it != s.frozen.end()) {
    grid.push_back(it->second);
  } else {
    for (int k = 0; k <= 60; ++k) grid.push_back(1e-3 * std::pow(10.0, k * 3.5 / 60.0));
  }

  std::vector<std::size_t> linear;
  for (std::size_t j = 0; j < names.size(); ++j)
    if (j != tmin_index && !s.frozen.contains(names[j])) linear.push_back(j);

  double best_chi2 = kInf;
  NamedValues best;
  std::vector<double> params(names.size(), 1.0);
  std::vector<double> values(points.size());
  for (const double tmin : grid) {
    for (std::size_t j = 0; j < names.size(); ++j) params[j] = 1.0;
    params[tmin_index] = tmin;
    Eigen::MatrixXd J;
    model.evaluate(params, values, &J);
    // Column j is the basis function of linear parameter j at this Tmin.
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = points[static_cast<std::size_t>(i)].value;
      for (const auto& [name, val] : s.frozen) {
        const auto j = static_cast<Eigen::Index>(std::find(names.begin(), names.end(), name) - names.begin());
        if (name != "Tmin" && j < static_cast<Eigen::Index>(names.size())) v -= val * J(i, j);
      }
      rhs(i) = v / points[static_cast<std::size_t>(i)].sigma;
    }
    const auto nl = static_cast<Eigen::Index>(linear.size());
    Eigen::MatrixXd A(n, nl);
    for (Eigen::Index k = 0; k < nl; ++k)
      for (Eigen::Index i = 0; i < n; ++i)
        A(i, k) = J(i, static_cast<Eigen::Index>(linear[static_cast<std::size_t>(k)])) /
                  points[static_cast<std::size_t>(i)].sigma;
    Eigen::VectorXd theta = nl > 0 ? Eigen::VectorXd(A.colPivHouseholderQr().solve(rhs)) : Eigen::VectorXd();
    // Non-negative start values; anything pushed below zero restarts from a small positive share.
    for (Eigen::Index k = 0; k < nl; ++k)
      if (!(theta(k) > 0.0)) theta(k) = 0.0;
    const double chi2 = nl > 0 ? (A * theta - rhs).squaredNorm() : rhs.squaredNorm();
    if (chi2 < best_chi2) {
      best_chi2 = chi2;
      best.clear();
      best["Tmin"] = tmin;
      for (Eigen::Index k = 0; k < nl; ++k) best[names[linear[static_cast<std::size_t>(k)]]] = theta(k);
    }
  }
  // Zero-valued linear starts sit on the bound; give them a small share of the data scale.
  double scale = 0.0;
  for (const auto& pt : points) scale = std::max(scale, std::abs(pt.value));
  for (auto& [name, v] : best) {
    if (name == "Tmin") continue;
    if (!(v > 0.0)) v = 1e-3 * std::max(scale, 1.0);
  }
  for (const auto& [name, v] : s.frozen) best.erase(name);
  return best;
}

FitResult fit_sweep(const SweepDataset& s, const ModelOptions& opts, const FitOptions& options) {
  s.validate();
  opts.validate();
  const SweepModel model(s, opts);
  for (const auto& [name, _] : s.frozen)
    if (std::find(model.parameter_names().begin(), model.parameter_names().end(), name) ==
        model.parameter_names().end())
      throw ValidationError("sweep: cannot freeze unknown parameter '" + name + "'");

  const auto points = s.sorted_points();
  std::vector<double> y, sigma;
  for (const auto& pt : points) {
    y.push_back(pt.value);
    sigma.push_back(pt.sigma);
  }
  NamedBounds bounds;
  for (const auto& name : model.parameter_names()) bounds[name] = {0.0, kInf};
  bounds["Tmin"] = {kTminFloor, kInf};

  FitResult r = fit_curve(model, y, sigma, initial_guess(s, model), bounds, s.frozen, options);
  r.variant_flags["observable"] = std::string(to_string(s.observable));
  r.variant_flags["axis"] = std::string(to_string(s.axis));
  r.variant_flags["thermal_divisor"] = std::to_string(opts.thermal_divisor);
  if (!r.is_frozen("Tmin")) {
    const double tmin = r.value("Tmin");
    if (r.has_flag("Tmin_at_bound") || r.sigma("Tmin") > tmin) r.flags.push_back("Tmin_unidentifiable");
  }
  return r;
}

}  // namespace

const std::vector<std::string>& dependence_parameter_names(Observable observable) {
  static const std::vector<std::string> kSd{"GammaMax", "Tmin"};
  static const std::vector<std::string> kRate{"Wff", "WBN", "Tmin"};
  static const std::vector<std::string> kGamma0{"GammaH", "GammaMaxH", "Tmin", "Wff", "WBN"};
  switch (observable) {
    case Observable::kGammaSD: return kSd;
    case Observable::kR: return kRate;
    case Observable::kGamma0: return kGamma0;
    default: break;
  }
  throw ValidationError("no closed-form dependence model for observable " +
                        std::string(to_string(observable)));
}

double dependence_value(Observable observable, const ExperimentConditions& c,
                        const DependenceParams& p, const ModelOptions& opts) {
  switch (observable) {
    case Observable::kGammaSD: return spectral_diffusion_linewidth(c, p.GammaMax, p.Tmin);
    case Observable::kR: return relaxation_rate(c, p, opts);
    case Observable::kGamma0: return effective_homogeneous_linewidth(c, p, relaxation_rate(c, p, opts));
    default: break;
  }
  throw ValidationError("no closed-form dependence model for observable " +
                        std::string(to_string(observable)));
}

std::unique_ptr<Model> make_sweep_model(const SweepDataset& s, const ModelOptions& opts) {
  return std::make_unique<SweepModel>(s, opts);
}

FitResult fit_field_dependence(const SweepDataset& s, const ModelOptions& opts, const FitOptions& options) {
  if (s.axis != SweepAxis::kB) throw ValidationError("fit_field_dependence: sweep axis must be B");
  return fit_sweep(s, opts, options);
}

FitResult fit_temperature_dependence(const SweepDataset& s, const ModelOptions& opts,
                                     const FitOptions& options) {
  if (s.axis != SweepAxis::kT) throw ValidationError("fit_temperature_dependence: sweep axis must be T");
  return fit_sweep(s, opts, options);
}

FitResult fit_dependence(const SweepDataset& s, const ModelOptions& opts, const FitOptions& options) {
  return s.axis == SweepAxis::kB ? fit_field_dependence(s, opts, options)
                                 : fit_temperature_dependence(s, opts, options);
}

DependenceParams to_dependence_params(const FitResult& fit, DependenceParams base) {
  auto take = [&](const char* name, double& field) {
    if (fit.has(name)) field = fit.value(name);
  };
  take("Wff", base.Wff);
  take("WBN", base.WBN);
  take("Tmin", base.Tmin);
  take("GammaMax", base.GammaMax);
  take("GammaH", base.GammaH);
  take("GammaMaxH", base.GammaMaxH);
  return base;
}

}  // namespace echolab
