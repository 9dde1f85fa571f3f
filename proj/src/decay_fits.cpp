#include "echolab/decay_fits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "echolab/constants.hpp"
#include "echolab/decoherence.hpp"
#include "echolab/error.hpp"

namespace echolab {

namespace {

class MimsIntensityModel final : public Model {
 public:
  explicit MimsIntensityModel(std::vector<double> tau) : tau_(std::move(tau)) {}

  const std::vector<std::string>& parameter_names() const override { return names_; }
  std::size_t num_observations() const override { return tau_.size(); }

  void evaluate(std::span<const double> p, std::span<double> values,
                Eigen::MatrixXd* jacobian) const override {
    const double a0 = p[0], tm = p[1], x = p[2];
    if (jacobian) jacobian->resize(static_cast<Eigen::Index>(tau_.size()), 3);
    for (std::size_t i = 0; i < tau_.size(); ++i) {
      const double ratio = 2.0 * tau_[i] / tm;
      const double z = ratio > 0.0 ? std::pow(ratio, x) : 0.0;
      const double v = a0 * a0 * std::exp(-2.0 * z);
      values[i] = v;
      if (!jacobian) continue;
      const auto row = static_cast<Eigen::Index>(i);
      (*jacobian)(row, 0) = 2.0 * v / a0;
      (*jacobian)(row, 1) = v * 2.0 * x * z / tm;
      (*jacobian)(row, 2) = ratio > 0.0 ? -2.0 * v * z * std::log(ratio) : 0.0;
    }
  }

 private:
  std::vector<std::string> names_{"A0", "TM", "x"};
  std::vector<double> tau_;
};

class EchoSurfaceModel final : public Model {
 public:
  explicit EchoSurfaceModel(std::vector<DecaySample> samples) : samples_(std::move(samples)) {}

  const std::vector<std::string>& parameter_names() const override { return names_; }
  std::size_t num_observations() const override { return samples_.size(); }

  void evaluate(std::span<const double> p, std::span<double> values,
                Eigen::MatrixXd* jacobian) const override {
    const DecayParams dp{p[0], p[1], p[2], p[3], p[4]};
    if (jacobian) jacobian->resize(static_cast<Eigen::Index>(samples_.size()), 5);
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const double t12 = samples_[i].t12, t23 = samples_[i].t23;
      const double decay = std::exp(-dp.R * t23);
      const double s = dp.R * t12 - std::expm1(-dp.R * t23);
      const double v = dp.I0 * std::exp(-2.0 * t23 / dp.T1) *
                       std::exp(-4.0 * kPi * t12 * (dp.Gamma0 + 0.5 * dp.GammaSD * s));
      values[i] = v;
      if (!jacobian) continue;
      const auto row = static_cast<Eigen::Index>(i);
      (*jacobian)(row, 0) = v / dp.I0;
      (*jacobian)(row, 1) = -4.0 * kPi * t12 * v;
      (*jacobian)(row, 2) = -2.0 * kPi * t12 * s * v;
      (*jacobian)(row, 3) = -2.0 * kPi * t12 * dp.GammaSD * (t12 + t23 * decay) * v;
      (*jacobian)(row, 4) = 2.0 * t23 / (dp.T1 * dp.T1) * v;
    }
  }

 private:
  std::vector<std::string> names_{"I0", "Gamma0", "GammaSD", "R", "T1"};
  std::vector<DecaySample> samples_;
};

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Least-squares line; returns {intercept, slope}.
std::pair<double, double> line_fit(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  return {my - slope * mx, slope};
}

std::vector<double> split(const std::vector<DecaySample>& s, double DecaySample::*field) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(x.*field);
  return out;
}

NamedValues mims_initial_guess(const std::vector<DecaySample>& samples) {
  const double i_max = std::max_element(samples.begin(), samples.end(), [](auto& a, auto& b) {
                         return a.intensity < b.intensity;
                       })->intensity;
  const double i0 = i_max > 0.0 ? i_max : 1.0;
  // ln(-ln(I/I0)/2) = x ln(2 tau) - x ln TM
  std::vector<double> lx, ly;
  for (const auto& s : samples) {
    const double r = s.intensity / i0;
    if (s.t12 > 0.0 && r > 1e-8 && r < 1.0 - 1e-6) {
      lx.push_back(std::log(2.0 * s.t12));
      ly.push_back(std::log(-std::log(r) / 2.0));
    }
  }
  double x = 1.5;
  double tm = 2.0 * samples.back().t12;
  if (lx.size() >= 2) {
    const auto [icpt, slope] = line_fit(lx, ly);
    if (slope > 0.0 && std::isfinite(icpt)) {
      x = std::clamp(slope, 1.05, 2.95);
      tm = std::exp(-icpt / slope);
    }
  }
  if (!(tm > 0.0) || !std::isfinite(tm)) tm = 1e-4;
  tm = std::clamp(tm, 1e-8, 0.5);
  return {{"A0", std::sqrt(i0)}, {"TM", tm}, {"x", x}};
}

NamedValues surface_initial_guess(const std::vector<DecaySample>& samples) {
  std::map<double, std::vector<DecaySample>> groups;
  for (const auto& s : samples)
    if (s.intensity > 0.0) groups[s.t12].push_back(s);

  std::vector<double> t1s;
  for (auto& [t12, g] : groups) {
    if (g.size() < 3) continue;
    std::vector<double> tx, ty;
    for (std::size_t i = g.size() - 3; i < g.size(); ++i) {
      tx.push_back(g[i].t23);
      ty.push_back(std::log(g[i].intensity));
    }
    const double slope = line_fit(tx, ty).second;
    if (slope < 0.0) t1s.push_back(-2.0 / slope);
  }
  double t23_max = 0.0;
  for (const auto& s : samples) t23_max = std::max(t23_max, s.t23);
  if (t23_max <= 0.0) t23_max = 1.0;
  double t1 = t1s.empty() ? 2.0 * t23_max : median(t1s);

  std::vector<double> gsds, rates;
  struct Head {
    double t12, y0, t23_0;
  };
  std::vector<Head> heads;
  for (auto& [t12, g] : groups) {
    if (g.size() < 2 || t12 <= 0.0) continue;
    std::vector<double> y;
    for (const auto& s : g) y.push_back(std::log(s.intensity) + 2.0 * s.t23 / t1);
    const double drop = std::max(y.front() - y.back(), 0.0);
    heads.push_back({t12, y.front(), g.front().t23});
    if (drop <= 0.0) continue;
    gsds.push_back(drop / (kTwoPi * t12));
    const double target = y.front() - 0.5 * drop;
    for (std::size_t i = 1; i < y.size(); ++i) {
      if (y[i] <= target) {
        const double f = (y[i - 1] - target) / (y[i - 1] - y[i]);
        const double t_half = g[i - 1].t23 + f * (g[i].t23 - g[i - 1].t23);
        if (t_half > 0.0) rates.push_back(std::log(2.0) / t_half);
        break;
      }
    }
  }
  double gsd = gsds.empty() ? 1e3 : median(gsds);
  double rate = rates.empty() ? 1.0 / std::max(t23_max / 10.0, 1e-9) : median(rates);
  if (!(gsd > 0.0)) gsd = 1e3;

  // ln I0 - 4 pi t12 Gamma0 = y0 + 2 pi t12 GammaSD (1 - e^{-R t23_0}) + 2 pi GammaSD R t12^2
  std::vector<double> hx, hy;
  for (const auto& h : heads) {
    hx.push_back(h.t12);
    hy.push_back(h.y0 + kTwoPi * h.t12 * gsd * -std::expm1(-rate * h.t23_0) +
                 kTwoPi * gsd * rate * h.t12 * h.t12);
  }
  double i0 = samples.front().intensity;
  double gamma0 = 0.01 * gsd;
  if (hx.size() >= 2) {
    const auto [icpt, slope] = line_fit(hx, hy);
    i0 = std::exp(icpt);
    gamma0 = -slope / (4.0 * kPi);
  }
  if (!(gamma0 > 0.0)) gamma0 = 0.01 * gsd;
  if (!(i0 > 0.0) || !std::isfinite(i0)) i0 = samples.front().intensity > 0 ? samples.front().intensity : 1.0;
  if (!(t1 > 0.0) || !std::isfinite(t1)) t1 = t23_max;
  return {{"I0", i0}, {"Gamma0", gamma0}, {"GammaSD", gsd}, {"R", rate}, {"T1", t1}};
}

const NamedBounds& surface_bounds() {
  static const NamedBounds kBounds{
      {"I0", {0.0, std::numeric_limits<double>::infinity()}},
      {"Gamma0", {0.0, std::numeric_limits<double>::infinity()}},
      {"GammaSD", {0.0, std::numeric_limits<double>::infinity()}},
      {"R", {0.0, std::numeric_limits<double>::infinity()}},
      {"T1", {0.0, std::numeric_limits<double>::infinity()}},
  };
  return kBounds;
}

}  // namespace

std::unique_ptr<Model> make_mims_intensity_model(std::vector<double> tau) {
  return std::make_unique<MimsIntensityModel>(std::move(tau));
}

std::unique_ptr<Model> make_echo_surface_model(std::vector<DecaySample> samples) {
  return std::make_unique<EchoSurfaceModel>(std::move(samples));
}

FitResult fit_mims_decay(const DecayDataset& d, const FitOptions& options) {
  if (d.kind != EchoKind::k2PE) throw ValidationError("fit_mims_decay: dataset must be 2PE");
  d.validate();
  const auto samples = d.canonical_samples();
  const MimsIntensityModel model(split(samples, &DecaySample::t12));
  const NamedBounds bounds{{"A0", {0.0, std::numeric_limits<double>::infinity()}},
                           {"TM", {1e-9, 1.0}},
                           {"x", {1.0, 3.0}}};
  FitResult r = fit_curve(model, split(samples, &DecaySample::intensity),
                          split(samples, &DecaySample::sigma), mims_initial_guess(samples), bounds, {},
                          options);
  r.variant_flags["model"] = "mims_intensity";
  return r;
}

FitResult fit_3pe_surface(const DecayDataset& d, const FitOptions& options) {
  if (d.kind != EchoKind::k3PE) throw ValidationError("fit_3pe_surface: dataset must be 3PE");
  d.validate();
  const auto samples = d.canonical_samples();
  std::set<double> t12s, t23s;
  for (const auto& s : samples) {
    t12s.insert(s.t12);
    t23s.insert(s.t23);
  }
  if (t12s.size() < 2 || t23s.size() < 5)
    throw ValidationError("fit_3pe_surface: need >= 2 distinct t12 and >= 5 distinct t23 values");

  const EchoSurfaceModel model(samples);
  FitResult r = fit_curve(model, split(samples, &DecaySample::intensity),
                          split(samples, &DecaySample::sigma), surface_initial_guess(samples),
                          surface_bounds(), {}, options);
  r.variant_flags["model"] = "echo_surface";

  const double span = *t23s.rbegin() - *t23s.begin();
  const double rate = r.value("R");
  if (rate > 0.0 && span < 1.0 / rate)
    throw IdentifiabilityError("fit_3pe_surface: t23 span " + std::to_string(span) +
                               " s is shorter than 1/R = " + std::to_string(1.0 / rate) +
                               " s; R and T1 cannot be separated");
  if (std::abs(r.correlation("GammaSD", "R")) > 0.99) r.flags.push_back("GammaSD_R_degenerate");
  return r;
}

FitResult fit_2pe_spectral_diffusion(const DecayDataset& d, double rate, double rate_sigma,
                                     RatePropagation propagation, const FitOptions& options) {
  if (d.kind != EchoKind::k2PE)
    throw ValidationError("fit_2pe_spectral_diffusion: dataset must be 2PE");
  if (!(rate > 0.0)) throw ValidationError("fit_2pe_spectral_diffusion: R must be > 0");
  if (!(rate_sigma >= 0.0)) throw ValidationError("fit_2pe_spectral_diffusion: sigma(R) must be >= 0");
  d.validate();
  const auto samples = d.canonical_samples();

  // ln I = ln I0 - 4 pi Gamma0 t12 - 2 pi (GammaSD R) t12^2
  std::vector<double> x, y, w;
  for (const auto& s : samples) {
    if (s.intensity <= 0.0) continue;
    x.push_back(s.t12);
    y.push_back(std::log(s.intensity));
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(x.size()), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    A(k, 0) = 1.0;
    A(k, 1) = -4.0 * kPi * x[i];
    A(k, 2) = -kTwoPi * x[i] * x[i];
    b(k) = y[i];
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(b);
  const double gamma0 = c(1) > 0.0 ? c(1) : 1.0;
  const double product = c(2) > 0.0 ? c(2) : 1e3 * rate;
  const NamedValues init{{"I0", std::exp(c(0))}, {"Gamma0", gamma0}, {"GammaSD", product / rate}};

  const EchoSurfaceModel model(samples);
  FitResult r = fit_curve(model, split(samples, &DecaySample::intensity),
                          split(samples, &DecaySample::sigma), init, surface_bounds(),
                          {{"R", rate}, {"T1", 1.0}}, options);
  r.variant_flags["model"] = "echo_surface_2pe";
  r.variant_flags["R_sigma"] = std::to_string(rate_sigma);
  if (propagation == RatePropagation::kPropagate) {
    r.variant_flags["rate_propagation"] = "propagated";
    const auto k = static_cast<Eigen::Index>(
        std::find(r.free_names.begin(), r.free_names.end(), "GammaSD") - r.free_names.begin());
    const double gsd = r.value("GammaSD");
    // GammaSD = P / R with P fitted: d(GammaSD)/dR = -GammaSD / R.
    r.covariance(k, k) += std::pow(gsd * rate_sigma / rate, 2);
    r.sigmas[static_cast<std::size_t>(k)] = std::sqrt(r.covariance(k, k));
  } else {
    r.variant_flags["rate_propagation"] = "fixed";
  }
  return r;
}

PhaseMemoryEstimate derive_phase_memory(const FitResult& fit, TmVariant variant) {
  for (const char* name : {"Gamma0", "GammaSD", "R"})
    if (!fit.has(name)) throw ValidationError(std::string("derive_phase_memory: fit lacks ") + name);

  const std::array<std::string, 3> names{"Gamma0", "GammaSD", "R"};
  std::array<double, 3> v{fit.value("Gamma0"), fit.value("GammaSD"), fit.value("R")};
  PhaseMemoryEstimate out;
  out.variant = variant;

  // Collect the free subset for propagation.
  std::vector<std::size_t> free_local;
  std::vector<Eigen::Index> free_cov;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto it = std::find(fit.free_names.begin(), fit.free_names.end(), names[i]);
    if (it != fit.free_names.end()) {
      free_local.push_back(i);
      free_cov.push_back(static_cast<Eigen::Index>(it - fit.free_names.begin()));
    }
  }
  auto propagate = [&](const std::array<double, 3>& grad) {
    double var = 0.0;
    for (std::size_t a = 0; a < free_local.size(); ++a)
      for (std::size_t b = 0; b < free_local.size(); ++b)
        var += grad[free_local[a]] * grad[free_local[b]] * fit.covariance(free_cov[a], free_cov[b]);
    return std::sqrt(std::max(var, 0.0));
  };

  if (!(v[0] > 0.0)) throw DegenerateInputError("derive_phase_memory: Gamma0 must be > 0");
  if (v[1] * v[2] == 0.0) {
    out.fallback = true;
    out.value = 1.0 / (kPi * v[0]);
    out.sigma = propagate({-out.value / v[0], 0.0, 0.0});
    return out;
  }
  const PhaseMemory tm = phase_memory_time(v[0], v[1], v[2], variant);
  out.value = tm.value;
  out.physical = tm.physical;
  std::array<double, 3> grad{};
  for (std::size_t i = 0; i < 3; ++i) {
    const double h = 1e-6 * v[i];
    auto up = v, down = v;
    up[i] += h;
    down[i] -= h;
    grad[i] = (phase_memory_time(up[0], up[1], up[2], variant).value -
               phase_memory_time(down[0], down[1], down[2], variant).value) /
              (2.0 * h);
  }
  out.sigma = propagate(grad);
  return out;
}

}  // namespace echolab
