#pragma once

#include <memory>

#include "echolab/datasets.hpp"
#include "echolab/fit.hpp"
#include "echolab/types.hpp"

namespace echolab {

/// Parameter names of the dependence model for one observable:
///   GammaSD -> {GammaMax, Tmin}
///   R       -> {Wff, WBN, Tmin}
///   Gamma0  -> {GammaH, GammaMaxH, Tmin, Wff, WBN}
/// T1 and TM have no closed-form dependence model; they raise ValidationError.
const std::vector<std::string>& dependence_parameter_names(Observable observable);

/// Observable predicted by the dependence model at one set of conditions.
double dependence_value(Observable observable, const ExperimentConditions& c,
                        const DependenceParams& p, const ModelOptions& opts = {});

/// Model over the sweep's axis values with analytic Jacobian.
std::unique_ptr<Model> make_sweep_model(const SweepDataset& s, const ModelOptions& opts = {});

/// Field-axis fit of the observable's dependence model, honoring `s.frozen`.
/// Flags "Tmin_at_bound" and "Tmin_unidentifiable" (relative sigma above 1 or at bound).
FitResult fit_field_dependence(const SweepDataset& s, const ModelOptions& opts = {},
                               const FitOptions& options = {});

/// Same as fit_field_dependence along the temperature axis.
FitResult fit_temperature_dependence(const SweepDataset& s, const ModelOptions& opts = {},
                                     const FitOptions& options = {});

/// Dispatches on `s.axis`.
FitResult fit_dependence(const SweepDataset& s, const ModelOptions& opts = {},
                         const FitOptions& options = {});

/// DependenceParams assembled from a fit (missing fields keep `base` values).
DependenceParams to_dependence_params(const FitResult& fit, DependenceParams base = {});

}  // namespace echolab
