#pragma once

#include <memory>
#include <vector>

#include "echolab/datasets.hpp"
#include "echolab/fit.hpp"
#include "echolab/types.hpp"

namespace echolab {

/// Squared Mims law I(tau) = A0^2 exp(-2 (2 tau / TM)^x); parameters {A0, TM, x}.
std::unique_ptr<Model> make_mims_intensity_model(std::vector<double> tau);

/// Stimulated echo surface over (t12, t23) pairs; parameters {I0, Gamma0, GammaSD, R, T1}.
std::unique_ptr<Model> make_echo_surface_model(std::vector<DecaySample> samples);

/// Stretched-exponential fit of a two-pulse decay; x is bounded to [1, 3].
FitResult fit_mims_decay(const DecayDataset& d, const FitOptions& options = {});

/// Joint fit of the stimulated-echo law to a (t12, t23) grid.
///
/// Requires at least 2 distinct t12 and 5 distinct t23 values. Throws IdentifiabilityError when
/// the t23 span is shorter than 1/R, since R and T1 then trade off freely. Flags
/// "GammaSD_R_degenerate" when |corr(GammaSD, R)| > 0.99.
FitResult fit_3pe_surface(const DecayDataset& d, const FitOptions& options = {});

enum class RatePropagation {
  kFixed,      // R treated as exact
  kPropagate,  // sigma(R) folded into sigma(GammaSD)
};

/// Two-pulse decay fitted with the stimulated-echo law at t23 = 0. Only the product
/// GammaSD*R is constrained, so R is frozen to an externally measured value (usually a
/// stimulated-echo fit). Free parameters: I0, Gamma0, GammaSD.
FitResult fit_2pe_spectral_diffusion(const DecayDataset& d, double rate, double rate_sigma,
                                     RatePropagation propagation, const FitOptions& options = {});

struct PhaseMemoryEstimate {
  double value = 0.0;  // [s]
  double sigma = 0.0;  // [s]
  bool physical = true;
  bool fallback = false;  // GammaSD*R == 0, 1/(pi Gamma0) used
  TmVariant variant = TmVariant::kSqrtCorrected;
};

/// Phase-memory time from a fit carrying Gamma0, GammaSD and R, with first-order error
/// propagation through the fit covariance.
PhaseMemoryEstimate derive_phase_memory(const FitResult& fit,
                                        TmVariant variant = TmVariant::kSqrtCorrected);

}  // namespace echolab
