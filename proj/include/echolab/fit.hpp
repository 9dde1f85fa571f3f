#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace echolab {

using NamedValues = std::map<std::string, double, std::less<>>;

struct Bounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};
using NamedBounds = std::map<std::string, Bounds, std::less<>>;

/// Vector-valued parametric model over a fixed set of observations.
class Model {
 public:
  virtual ~Model() = default;
  virtual const std::vector<std::string>& parameter_names() const = 0;
  virtual std::size_t num_observations() const = 0;
  /// Fills `values` (num_observations) and, when non-null, the full Jacobian
  /// (num_observations x parameter_names().size()).
  virtual void evaluate(std::span<const double> params, std::span<double> values,
                        Eigen::MatrixXd* jacobian) const = 0;
};

/// Scalar model y = f(x; p) over a list of abscissae. Without a gradient callback the
/// Jacobian is taken by central differences.
class FunctionModel final : public Model {
 public:
  using Value = std::function<double(double x, std::span<const double> p)>;
  using Gradient = std::function<void(double x, std::span<const double> p, std::span<double> grad)>;

  FunctionModel(std::vector<std::string> names, std::vector<double> xs, Value value,
                Gradient gradient = {});

  const std::vector<std::string>& parameter_names() const override { return names_; }
  std::size_t num_observations() const override { return xs_.size(); }
  void evaluate(std::span<const double> params, std::span<double> values,
                Eigen::MatrixXd* jacobian) const override;

 private:
  std::vector<std::string> names_;
  std::vector<double> xs_;
  Value value_;
  Gradient gradient_;
};

/// Richardson-extrapolated central-difference Jacobian of any model; used for models without analytic
/// derivatives and for checking the ones that have them.
Eigen::MatrixXd numeric_jacobian(const Model& model, std::span<const double> params,
                                 double relative_step = 1e-4);

struct FitOptions {
  int max_iterations = 200;
  double xtol = 1e-12;
  double ftol = 1e-14;
  double gtol = 1e-10;
  // Convergence is declared when the gradient cosine is below this at the end.
  double gtol_accept = 1e-6;
  // Scale the covariance by chi2_reduced (sigmas as relative weights).
  bool scale_covariance = true;
  double initial_lambda = 1e-3;
  // When false, an exhausted iteration budget returns the last state with converged = false
  // and the "max_iterations" flag instead of throwing.
  bool throw_on_max_iterations = true;
};

struct FitResult {
  std::vector<std::string> names;  // every model parameter, model order
  std::vector<double> values;
  std::vector<bool> frozen;
  std::vector<std::string> free_names;
  std::vector<double> sigmas;      // aligned with free_names
  Eigen::MatrixXd covariance;      // free x free
  double chi2 = 0.0;
  double chi2_reduced = 0.0;
  std::size_t dof = 0;
  int n_iter = 0;
  bool converged = false;
  double gradient_cosine = 0.0;
  double condition_number = 1.0;
  std::vector<std::string> flags;  // diagnostics such as "<name>_at_bound"
  std::map<std::string, std::string> variant_flags;

  double value(std::string_view name) const;
  /// 1 sigma; zero for frozen parameters.
  double sigma(std::string_view name) const;
  bool is_frozen(std::string_view name) const;
  bool has(std::string_view name) const;
  /// Covariance entry between two free parameters.
  double covariance_of(std::string_view a, std::string_view b) const;
  double correlation(std::string_view a, std::string_view b) const;
  bool has_flag(std::string_view flag) const;
  NamedValues as_named() const;
};

/// Weighted damped least squares (Levenberg-Marquardt with Marquardt scaling). Bounded
/// parameters are mapped to unbounded internal coordinates; `frozen` values override `init`
/// and are excluded from the covariance.
///
/// Throws NonConvergenceError after `max_iterations`, SingularJacobianError when the
/// Jacobian at the start point is rank deficient.
FitResult fit_curve(const Model& model, std::span<const double> y, std::span<const double> sigma,
                    const NamedValues& init, const NamedBounds& bounds = {},
                    const NamedValues& frozen = {}, const FitOptions& options = {});

}  // namespace echolab
