#include <algorithm>
#include <cmath>
#include <sstream>

#include "echolab/error.hpp"
#include "echolab/fit.hpp"

namespace echolab {

namespace {

// Maps an unbounded internal coordinate u onto the admissible interval of one parameter.
struct Transform {
  enum class Kind { kFree, kLower, kUpper, kBoth };
  Kind kind = Kind::kFree;
  double lo = 0.0;
  double hi = 0.0;
  double scale = 1.0;

  double external(double u) const {
    switch (kind) {
      case Kind::kFree: return scale * u;
      case Kind::kLower: return lo + scale * (std::sqrt(u * u + 1.0) - 1.0);
      case Kind::kUpper: return hi - scale * (std::sqrt(u * u + 1.0) - 1.0);
      case Kind::kBoth: return lo + 0.5 * (hi - lo) * (std::sin(u) + 1.0);
    }
    return 0.0;
  }

  double derivative(double u) const {
    switch (kind) {
      case Kind::kFree: return scale;
      case Kind::kLower: return scale * u / std::sqrt(u * u + 1.0);
      case Kind::kUpper: return -scale * u / std::sqrt(u * u + 1.0);
      case Kind::kBoth: return 0.5 * (hi - lo) * std::cos(u);
    }
    return 0.0;
  }

  double internal(double x) const {
    switch (kind) {
      case Kind::kFree: return x / scale;
      case Kind::kLower: {
        const double a = (x - lo) / scale + 1.0;
        return std::sqrt(a * a - 1.0);
      }
      case Kind::kUpper: {
        const double a = (hi - x) / scale + 1.0;
        return std::sqrt(a * a - 1.0);
      }
      case Kind::kBoth: return std::asin(std::clamp(2.0 * (x - lo) / (hi - lo) - 1.0, -1.0, 1.0));
    }
    return 0.0;
  }

  bool at_bound(double x) const {
    constexpr double kRel = 1e-7;
    switch (kind) {
      case Kind::kFree: return false;
      case Kind::kLower: return x - lo <= kRel * scale;
      case Kind::kUpper: return hi - x <= kRel * scale;
      case Kind::kBoth: return x - lo <= kRel * (hi - lo) || hi - x <= kRel * (hi - lo);
    }
    return false;
  }
};

// Builds the transform and returns the (possibly nudged off-bound) start value.
Transform make_transform(const std::string& name, const Bounds& b, double& x) {
  if (!(b.lower < b.upper)) throw ValidationError("fit: empty bounds for " + name);
  if (x < b.lower || x > b.upper)
    throw ValidationError("fit: initial value of " + name + " lies outside its bounds");
  Transform t;
  const bool has_lo = std::isfinite(b.lower);
  const bool has_hi = std::isfinite(b.upper);
  t.lo = b.lower;
  t.hi = b.upper;
  if (has_lo && has_hi) {
    t.kind = Transform::Kind::kBoth;
    const double margin = 1e-6 * (b.upper - b.lower);
    x = std::clamp(x, b.lower + margin, b.upper - margin);
  } else if (has_lo) {
    t.kind = Transform::Kind::kLower;
    if (x - b.lower <= 0.0) x = b.lower + 1e-6 * std::max(1.0, std::abs(b.lower));
    t.scale = std::max({x - b.lower, std::abs(x), 1e-300});
  } else if (has_hi) {
    t.kind = Transform::Kind::kUpper;
    if (b.upper - x <= 0.0) x = b.upper - 1e-6 * std::max(1.0, std::abs(b.upper));
    t.scale = std::max({b.upper - x, std::abs(x), 1e-300});
  } else {
    t.kind = Transform::Kind::kFree;
    t.scale = x != 0.0 ? std::abs(x) : 1.0;
  }
  return t;
}

double gradient_cosine(const Eigen::MatrixXd& J, const Eigen::VectorXd& r) {
  const double rn = r.norm();
  if (rn == 0.0) return 0.0;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < J.cols(); ++j) {
    const double cn = J.col(j).norm();
    if (cn == 0.0) continue;
    worst = std::max(worst, std::abs(J.col(j).dot(r)) / (cn * rn));
  }
  return worst;
}

std::size_t index_of(const std::vector<std::string>& names, std::string_view name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("fit result has no parameter '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

FunctionModel::FunctionModel(std::vector<std::string> names, std::vector<double> xs, Value value,
                             Gradient gradient)
    : names_(std::move(names)), xs_(std::move(xs)), value_(std::move(value)),
      gradient_(std::move(gradient)) {}

void FunctionModel::evaluate(std::span<const double> params, std::span<double> values,
                             Eigen::MatrixXd* jacobian) const {
  for (std::size_t i = 0; i < xs_.size(); ++i) values[i] = value_(xs_[i], params);
  if (!jacobian) return;
  if (!gradient_) {
    *jacobian = numeric_jacobian(*this, params);
    return;
  }
  jacobian->resize(static_cast<Eigen::Index>(xs_.size()), static_cast<Eigen::Index>(names_.size()));
  std::vector<double> grad(names_.size());
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    gradient_(xs_[i], params, grad);
    for (std::size_t j = 0; j < grad.size(); ++j)
      (*jacobian)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = grad[j];
  }
}

Eigen::MatrixXd numeric_jacobian(const Model& model, std::span<const double> params,
                                 double relative_step) {
  const std::size_t n = model.num_observations();
  const std::size_t p = params.size();
  Eigen::MatrixXd J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<double> work(params.begin(), params.end());
  std::vector<double> plus(n), minus(n);
  auto central = [&](std::size_t j, double h, std::vector<double>& d) {
    const double x = params[j];
    work[j] = x + h;
    model.evaluate(work, plus, nullptr);
    work[j] = x - h;
    model.evaluate(work, minus, nullptr);
    work[j] = x;
    for (std::size_t i = 0; i < n; ++i) d[i] = (plus[i] - minus[i]) / (2.0 * h);
  };
  std::vector<double> coarse(n), fine(n);
  for (std::size_t j = 0; j < p; ++j) {
    const double x = params[j];
    const double h = x != 0.0 ? relative_step * std::abs(x) : relative_step;
    // Richardson step: cancels the h^2 term of the central difference.
    central(j, h, coarse);
    central(j, 0.5 * h, fine);
    for (std::size_t i = 0; i < n; ++i)
      J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (4.0 * fine[i] - coarse[i]) / 3.0;
  }
  return J;
}

double FitResult::value(std::string_view name) const { return values[index_of(names, name)]; }

double FitResult::sigma(std::string_view name) const {
  const auto it = std::find(free_names.begin(), free_names.end(), name);
  if (it == free_names.end()) {
    index_of(names, name);
    return 0.0;
  }
  return sigmas[static_cast<std::size_t>(it - free_names.begin())];
}

bool FitResult::is_frozen(std::string_view name) const { return frozen[index_of(names, name)]; }

bool FitResult::has(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

double FitResult::covariance_of(std::string_view a, std::string_view b) const {
  const auto ia = index_of(free_names, a);
  const auto ib = index_of(free_names, b);
  return covariance(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ib));
}

double FitResult::correlation(std::string_view a, std::string_view b) const {
  const double denom = std::sqrt(covariance_of(a, a) * covariance_of(b, b));
  return denom > 0.0 ? covariance_of(a, b) / denom : 0.0;
}

bool FitResult::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

NamedValues FitResult::as_named() const {
  NamedValues out;
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = values[i];
  return out;
}

FitResult fit_curve(const Model& model, std::span<const double> y, std::span<const double> sigma,
                    const NamedValues& init, const NamedBounds& bounds, const NamedValues& frozen,
                    const FitOptions& options) {
  const std::vector<std::string>& names = model.parameter_names();
  const std::size_t n = model.num_observations();
  const std::size_t p = names.size();
  if (y.size() != n || sigma.size() != n)
    throw ValidationError("fit: data length does not match the model");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y[i])) throw ValidationError("fit: non-finite observation");
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) throw ValidationError("fit: sigma must be > 0");
  }
  auto check_known = [&](const auto& map, const char* what) {
    for (const auto& [key, _] : map)
      if (std::find(names.begin(), names.end(), key) == names.end())
        throw ValidationError(std::string("fit: unknown parameter '") + key + "' in " + what);
  };
  check_known(init, "init");
  check_known(bounds, "bounds");
  check_known(frozen, "frozen");

  FitResult result;
  result.names = names;
  result.values.assign(p, 0.0);
  result.frozen.assign(p, false);

  std::vector<std::size_t> free_idx;
  std::vector<Transform> transforms;
  for (std::size_t j = 0; j < p; ++j) {
    if (const auto it = frozen.find(names[j]); it != frozen.end()) {
      result.values[j] = it->second;
      result.frozen[j] = true;
      continue;
    }
    const auto it = init.find(names[j]);
    if (it == init.end()) throw ValidationError("fit: no initial value for " + names[j]);
    double x = it->second;
    if (!std::isfinite(x)) throw ValidationError("fit: non-finite initial value for " + names[j]);
    const auto bit = bounds.find(names[j]);
    transforms.push_back(make_transform(names[j], bit != bounds.end() ? bit->second : Bounds{}, x));
    result.values[j] = x;
    free_idx.push_back(j);
    result.free_names.push_back(names[j]);
  }
  const std::size_t m = free_idx.size();
  if (m > 0 && n <= m)
    throw ValidationError("fit: need more observations than free parameters");
  result.dof = n - m;

  const auto ni = static_cast<Eigen::Index>(n);
  const auto mi = static_cast<Eigen::Index>(m);
  std::vector<double> x_full = result.values;
  std::vector<double> values(n);
  Eigen::MatrixXd J_full;

  // Weighted residuals; optional internal and external (weighted, free-column) Jacobians.
  auto evaluate = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r, Eigen::MatrixXd* J_int,
                      Eigen::MatrixXd* J_ext) {
    for (std::size_t k = 0; k < m; ++k) x_full[free_idx[k]] = transforms[k].external(u(static_cast<Eigen::Index>(k)));
    const bool want = J_int || J_ext;
    model.evaluate(x_full, values, want ? &J_full : nullptr);
    r.resize(ni);
    for (std::size_t i = 0; i < n; ++i) r(static_cast<Eigen::Index>(i)) = (values[i] - y[i]) / sigma[i];
    if (!want) return;
    Eigen::MatrixXd ext(ni, mi);
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t i = 0; i < n; ++i)
        ext(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            J_full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(free_idx[k])) / sigma[i];
    if (J_int) {
      *J_int = ext;
      for (std::size_t k = 0; k < m; ++k)
        J_int->col(static_cast<Eigen::Index>(k)) *= transforms[k].derivative(u(static_cast<Eigen::Index>(k)));
    }
    if (J_ext) *J_ext = std::move(ext);
  };

  Eigen::VectorXd u(mi);
  for (std::size_t k = 0; k < m; ++k)
    u(static_cast<Eigen::Index>(k)) = transforms[k].internal(result.values[free_idx[k]]);

  double y_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) y_scale += (y[i] / sigma[i]) * (y[i] / sigma[i]);
  const double zero_residual = 1e-20 * std::max(y_scale, 1e-300);

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  evaluate(u, r, &J, nullptr);
  if (!r.allFinite()) throw ValidationError("fit: model is not finite at the initial point");
  double chi2 = r.squaredNorm();

  if (m > 0) {
    Eigen::VectorXd d = (J.transpose() * J).diagonal();
    for (Eigen::Index k = 0; k < mi; ++k)
      if (!(d(k) > 0.0))
        throw SingularJacobianError("fit: model does not depend on " + result.free_names[static_cast<std::size_t>(k)] +
                                        " at the initial point",
                                    std::numeric_limits<double>::infinity());
    const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd A = s.asDiagonal() * (J.transpose() * J) * s.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    const double cond = es.eigenvalues().maxCoeff() / std::max(es.eigenvalues().minCoeff(), 0.0);
    if (!(cond < 1e14)) {
      std::ostringstream os;
      os << "fit: Jacobian is singular at the initial point (condition number " << cond << ")";
      throw SingularJacobianError(os.str(), cond);
    }
  }

  double lambda = options.initial_lambda;
  bool finished = m == 0;
  int iter = 0;
  while (!finished && iter < options.max_iterations) {
    if (chi2 <= zero_residual || gradient_cosine(J, r) <= options.gtol) break;

    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    Eigen::VectorXd d = A.diagonal();
    const double dmax = d.maxCoeff();
    for (Eigen::Index k = 0; k < mi; ++k) d(k) = std::max(d(k), 1e-30 * dmax + 1e-300);
    const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd As = s.asDiagonal() * A * s.asDiagonal();
    const Eigen::VectorXd gs = s.cwiseProduct(g);

    bool accepted = false;
    Eigen::VectorXd step, u_new, r_new;
    double chi2_new = chi2;
    while (lambda <= 1e16) {
      Eigen::MatrixXd M = As;
      M.diagonal().array() += lambda;
      step = s.cwiseProduct(M.ldlt().solve(-gs));
      u_new = u + step;
      evaluate(u_new, r_new, nullptr, nullptr);
      chi2_new = r_new.squaredNorm();
      if (std::isfinite(chi2_new) && chi2_new < chi2) {
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;  // no downhill step exists at machine precision

    ++iter;
    const double reduction = (chi2 - chi2_new) / chi2;
    u = u_new;
    chi2 = chi2_new;
    evaluate(u, r, &J, nullptr);
    lambda = std::max(lambda * 0.1, 1e-15);

    bool small_step = true;
    for (Eigen::Index k = 0; k < mi; ++k)
      small_step = small_step && std::abs(step(k)) <= options.xtol * (1.0 + std::abs(u(k)));
    if (small_step || reduction <= options.ftol) finished = true;
  }
  const bool budget_exhausted = !finished && iter >= options.max_iterations &&
                                !(chi2 <= zero_residual || gradient_cosine(J, r) <= options.gtol);

  for (std::size_t k = 0; k < m; ++k) result.values[free_idx[k]] = x_full[free_idx[k]] =
      transforms[k].external(u(static_cast<Eigen::Index>(k)));

  Eigen::MatrixXd J_ext;
  evaluate(u, r, nullptr, &J_ext);
  chi2 = r.squaredNorm();
  result.chi2 = chi2;
  result.chi2_reduced = result.dof > 0 ? chi2 / static_cast<double>(result.dof) : 0.0;
  result.n_iter = iter;
  result.gradient_cosine = m > 0 ? gradient_cosine(J, r) : 0.0;

  bool at_bound = false;
  for (std::size_t k = 0; k < m; ++k) {
    if (transforms[k].at_bound(result.values[free_idx[k]])) {
      at_bound = true;
      result.flags.push_back(result.free_names[k] + "_at_bound");
    }
  }

  // Covariance in external coordinates, column-equilibrated, with a fixed 1e-12 floor.
  result.covariance = Eigen::MatrixXd::Zero(mi, mi);
  result.sigmas.assign(m, 0.0);
  if (m > 0) {
    const Eigen::MatrixXd H = J_ext.transpose() * J_ext;
    Eigen::VectorXd dscale(mi);
    for (Eigen::Index k = 0; k < mi; ++k) {
      const double hk = H(k, k);
      if (hk > 0.0) {
        dscale(k) = 1.0 / std::sqrt(hk);
      } else {
        dscale(k) = 1.0;
        result.flags.push_back(result.free_names[static_cast<std::size_t>(k)] + "_unconstrained");
      }
    }
    Eigen::MatrixXd Hs = dscale.asDiagonal() * H * dscale.asDiagonal();
    Hs.diagonal().array() += 1e-12;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
    const Eigen::VectorXd ev = es.eigenvalues();
    result.condition_number = ev.maxCoeff() / ev.minCoeff();
    if (result.condition_number > 1e10) result.flags.push_back("near_singular_covariance");
    const Eigen::MatrixXd inv =
        es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    const double scale = options.scale_covariance ? result.chi2_reduced : 1.0;
    result.covariance = scale * (dscale.asDiagonal() * inv * dscale.asDiagonal());
    result.covariance = 0.5 * (result.covariance + result.covariance.transpose()).eval();
    for (std::size_t k = 0; k < m; ++k)
      result.sigmas[k] = std::sqrt(std::max(0.0, result.covariance(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))));
  }

  const bool stationary = chi2 <= zero_residual || result.gradient_cosine <= options.gtol_accept;
  result.converged = m == 0 || (stationary && !at_bound && !budget_exhausted);
  if (budget_exhausted) {
    result.flags.push_back("max_iterations");
    if (options.throw_on_max_iterations) {
      std::ostringstream os;
      os << "fit: no convergence after " << options.max_iterations
         << " iterations (chi2 = " << chi2 << ", gradient cosine = " << result.gradient_cosine << ")";
      throw NonConvergenceError(os.str());
    }
  }
  return result;
}

}  // namespace echolab
