#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "echolab/decay_fits.hpp"
#include "echolab/error.hpp"
#include "echolab/fit.hpp"
#include "echolab/sweep_fits.hpp"
#include "echolab/synth.hpp"

using namespace echolab;

namespace {

// Worst element-wise relative mismatch, with a floor tied to the column scale so that
// entries that are tiny compared with their column do not dominate.
double jacobian_mismatch(const Model& model, const std::vector<double>& p) {
  const std::size_t n = model.num_observations();
  std::vector<double> v(n);
  Eigen::MatrixXd analytic(n, p.size());
  model.evaluate(p, v, &analytic);
  const Eigen::MatrixXd numeric = numeric_jacobian(model, p);
  double worst = 0.0;
  for (Eigen::Index c = 0; c < analytic.cols(); ++c) {
    const double scale = analytic.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < analytic.rows(); ++r) {
      const double denom = std::max(std::abs(analytic(r, c)), 1e-3 * scale);
      if (denom == 0.0) continue;
      worst = std::max(worst, std::abs(analytic(r, c) - numeric(r, c)) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("linear model with exact data") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y, s(5, 1.0);
  for (const double xi : x) y.push_back(2.0 * xi);
  FunctionModel model({"a"}, x, [](double xi, std::span<const double> p) { return p[0] * xi; });
  const auto fit = fit_curve(model, y, s, {{"a", 0.5}});
  CHECK(fit.converged);
  CHECK(fit.value("a") == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.sigma("a") == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(fit.chi2_reduced == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("mims model recovery from 30 log-spaced delays") {
  const MimsParams truth{1.0, 120e-6, 1.6};
  const auto d = generate_mims_dataset(truth, logspace(5e-6, 300e-6, 30), {});
  const auto fit = fit_mims_decay(d);
  CHECK(fit.converged);
  CHECK(fit.value("A0") == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(fit.value("TM") == doctest::Approx(120e-6).epsilon(1e-3));
  CHECK(fit.value("x") == doctest::Approx(1.6).epsilon(1e-3));
}

TEST_CASE("frozen parameters are absent from the covariance") {
  std::vector<double> x{0, 1, 2, 3, 4, 5};
  std::vector<double> y, s(6, 0.1);
  for (const double xi : x) y.push_back(1.5 + 0.3 * xi);
  FunctionModel model({"a", "b"}, x, [](double xi, std::span<const double> p) { return p[0] + p[1] * xi; });
  const auto fit = fit_curve(model, y, s, {{"a", 0.0}, {"b", 0.0}}, {}, {{"a", 1.5}});
  CHECK(fit.is_frozen("a"));
  CHECK(fit.covariance.rows() == 1);
  CHECK(fit.free_names == std::vector<std::string>{"b"});
  CHECK(fit.sigma("a") == 0.0);
  CHECK(fit.value("b") == doctest::Approx(0.3).epsilon(1e-10));
  CHECK_THROWS_AS(fit.covariance_of("a", "b"), ValidationError);
}

TEST_CASE("bounds and diagnostics") {
  std::vector<double> x{0, 1, 2, 3, 4, 5, 6};
  std::vector<double> y, s(7, 1.0);
  for (const double xi : x) y.push_back(-1.0 + 0.0 * xi);
  FunctionModel model({"a"}, x, [](double, std::span<const double> p) { return p[0]; });
  const auto fit = fit_curve(model, y, s, {{"a", 1.0}}, {{"a", {0.0, 10.0}}});
  CHECK(fit.has_flag("a_at_bound"));
  CHECK_FALSE(fit.converged);
  CHECK(fit.value("a") >= 0.0);
}

TEST_CASE("singular jacobian is reported with its condition number") {
  std::vector<double> x{0, 1, 2, 3};
  std::vector<double> y{1, 2, 3, 4}, s(4, 1.0);
  FunctionModel model({"a", "b"}, x, [](double xi, std::span<const double> p) { return (p[0] + p[1]) * xi; });
  try {
    fit_curve(model, y, s, {{"a", 1.0}, {"b", 1.0}});
    FAIL("expected SingularJacobianError");
  } catch (const SingularJacobianError& e) {
    CHECK(e.condition_number() > 1e14);
    CHECK(e.exit_code() == ExitCode::kNonConvergence);
  }
}

TEST_CASE("iteration budget") {
  const MimsParams truth{1.0, 120e-6, 1.6};
  const auto d = generate_mims_dataset(truth, logspace(5e-6, 300e-6, 30), {NoiseKind::kMultiplicative, 0.02, 1});
  FitOptions o;
  o.max_iterations = 1;
  CHECK_THROWS_AS(fit_mims_decay(d, o), NonConvergenceError);
  o.throw_on_max_iterations = false;
  const auto fit = fit_mims_decay(d, o);
  CHECK_FALSE(fit.converged);
  CHECK(fit.has_flag("max_iterations"));
}

TEST_CASE("analytic jacobians match central differences") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  SUBCASE("mims intensity") {
    const auto model = make_mims_intensity_model(logspace(5e-6, 300e-6, 25));
    for (int i = 0; i < 20; ++i) {
      const std::vector<double> p{0.5 + u(gen), 50e-6 + 200e-6 * u(gen), 1.0 + 2.0 * u(gen)};
      CHECK(jacobian_mismatch(*model, p) < 1e-5);
    }
  }
  SUBCASE("echo surface") {
    std::vector<DecaySample> samples;
    for (const double t12 : {10e-6, 15e-6, 20e-6, 30e-6})
      for (const double t23 : logspace(10e-6, 10e-3, 12)) samples.push_back({t12, t23, 1.0, 1.0});
    const auto model = make_echo_surface_model(samples);
    for (int i = 0; i < 20; ++i) {
      const std::vector<double> p{0.5 + u(gen), 100.0 + 1e3 * u(gen), 5e3 + 3e4 * u(gen), 1e3 + 1e4 * u(gen),
                                  1e-3 + 5e-3 * u(gen)};
      CHECK(jacobian_mismatch(*model, p) < 1e-5);
    }
  }
  SUBCASE("sweep models on both axes") {
    for (const auto obs : {Observable::kGammaSD, Observable::kR, Observable::kGamma0}) {
      for (const auto axis : {SweepAxis::kB, SweepAxis::kT}) {
        SweepDataset s;
        s.axis = axis;
        s.observable = obs;
        s.fixed.B = 0.1;
        s.fixed.T = 0.05;
        const auto xs = axis == SweepAxis::kB ? linspace(0.03, 0.3, 10) : linspace(0.02, 1.0, 10);
        for (const double x : xs) s.points.push_back({x, 1.0, 1.0});
        const auto model = make_sweep_model(s);
        const auto& names = model->parameter_names();
        for (int i = 0; i < 10; ++i) {
          std::vector<double> p;
          for (const auto& n : names) {
            if (n == "Tmin") p.push_back(0.03 + 0.2 * u(gen));
            else if (n == "WBN") p.push_back(1e3 + 1e4 * u(gen));
            else if (n == "GammaH") p.push_back(100.0 + 500.0 * u(gen));
            else p.push_back(1e3 + 6e4 * u(gen));
          }
          CAPTURE(to_string(obs));
          CAPTURE(to_string(axis));
          CHECK(jacobian_mismatch(*model, p) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("reweighting leaves the optimum unchanged") {
  const DecayParams truth{1.0, 300.0, 20e3, 5e3, 3e-3};
  auto d = generate_decay_dataset(truth, {{10e-6, 15e-6, 20e-6, 30e-6}, logspace(10e-6, 10e-3, 25)},
                                  {NoiseKind::kMultiplicative, 0.01, 5});
  const auto a = fit_3pe_surface(d);
  for (auto& s : d.samples) s.sigma *= 7.0;
  const auto b = fit_3pe_surface(d);
  for (const auto& n : a.names) CHECK(b.value(n) == doctest::Approx(a.value(n)).epsilon(1e-8));
  CHECK(b.chi2_reduced == doctest::Approx(a.chi2_reduced / 49.0).epsilon(1e-8));
  // With covariance scaling the sigmas are invariant too.
  for (const auto& n : a.free_names) CHECK(b.sigma(n) == doctest::Approx(a.sigma(n)).epsilon(1e-6));
}

TEST_CASE("sample order does not change any result") {
  const DecayParams truth{1.0, 300.0, 20e3, 5e3, 3e-3};
  auto d = generate_decay_dataset(truth, {{10e-6, 15e-6, 20e-6, 30e-6}, logspace(10e-6, 10e-3, 25)},
                                  {NoiseKind::kMultiplicative, 0.01, 9});
  const auto a = fit_3pe_surface(d);
  std::mt19937_64 gen(17);
  for (int k = 0; k < 3; ++k) {
    std::shuffle(d.samples.begin(), d.samples.end(), gen);
    const auto b = fit_3pe_surface(d);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] == a.values[i]);
    for (std::size_t i = 0; i < a.sigmas.size(); ++i) CHECK(b.sigmas[i] == a.sigmas[i]);
  }

  SweepSpec spec{SweepAxis::kB, linspace(0.03, 0.3, 12), Observable::kR, {}, {}};
  auto s = generate_sweep({10e3, 7.5e3, 0.074, 0, 0, 0}, spec, {NoiseKind::kMultiplicative, 0.02, 4});
  const auto fa = fit_field_dependence(s);
  std::reverse(s.points.begin(), s.points.end());
  std::shuffle(s.points.begin(), s.points.end(), gen);
  const auto fb = fit_field_dependence(s);
  for (std::size_t i = 0; i < fa.values.size(); ++i) CHECK(fb.values[i] == fa.values[i]);
}

TEST_CASE("fits are deterministic") {
  const DecayParams truth{1.0, 300.0, 20e3, 5e3, 3e-3};
  const auto d = generate_decay_dataset(truth, {{10e-6, 20e-6, 30e-6}, logspace(10e-6, 10e-3, 20)},
                                        {NoiseKind::kMultiplicative, 0.01, 2});
  const auto a = fit_3pe_surface(d);
  const auto b = fit_3pe_surface(d);
  CHECK(a.values == b.values);
  CHECK(a.covariance == b.covariance);
  CHECK(a.n_iter == b.n_iter);
}

TEST_CASE("covariance is symmetric positive semi-definite") {
  const DecayParams truth{1.0, 300.0, 20e3, 5e3, 3e-3};
  const auto d = generate_decay_dataset(truth, {{10e-6, 15e-6, 20e-6, 30e-6}, logspace(10e-6, 10e-3, 25)},
                                        {NoiseKind::kMultiplicative, 0.01, 21});
  const auto fit = fit_3pe_surface(d);
  CHECK((fit.covariance - fit.covariance.transpose()).norm() <= 1e-12 * fit.covariance.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.covariance);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * eig.eigenvalues().maxCoeff());
  for (std::size_t i = 0; i < fit.free_names.size(); ++i)
    CHECK(fit.sigmas[i] == doctest::Approx(std::sqrt(fit.covariance(i, i))));
}
