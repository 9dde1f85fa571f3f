#include "echolab/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "echolab/error.hpp"

namespace echolab {

EchoKind DecayDataset::infer_kind(const std::vector<DecaySample>& samples) {
  const bool all_zero =
      std::all_of(samples.begin(), samples.end(), [](const DecaySample& s) { return s.t23 == 0.0; });
  return all_zero ? EchoKind::k2PE : EchoKind::k3PE;
}

void DecayDataset::validate() const {
  conditions.validate();
  const std::size_t needed = kind == EchoKind::k2PE ? kMin2peSamples : kMin3peSamples;
  if (samples.size() < needed)
    throw ValidationError("decay dataset: " + std::string(to_string(kind)) + " needs at least " +
                          std::to_string(needed) + " samples, got " + std::to_string(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::string where = " (sample " + std::to_string(i + 1) + ")";
    if (!(s.t12 >= 0.0 && s.t23 >= 0.0)) throw ValidationError("decay dataset: negative delay" + where);
    if (!std::isfinite(s.intensity)) throw ValidationError("decay dataset: non-finite intensity" + where);
    if (!(s.sigma > 0.0) || !std::isfinite(s.sigma))
      throw ValidationError("decay dataset: sigma must be > 0" + where);
    if (kind == EchoKind::k2PE && s.t23 != 0.0)
      throw ValidationError("decay dataset: 2PE data must have t23 = 0" + where);
  }
}

std::vector<DecaySample> DecayDataset::canonical_samples() const {
  std::vector<DecaySample> out = samples;
  std::sort(out.begin(), out.end());
  return out;
}

void SweepDataset::validate() const {
  fixed.validate();
  if (points.size() < kMinSweepPoints)
    throw ValidationError("sweep dataset: needs at least " + std::to_string(kMinSweepPoints) + " points");
  std::set<double> seen;
  for (const auto& p : points) {
    if (!std::isfinite(p.axis) || !std::isfinite(p.value))
      throw ValidationError("sweep dataset: non-finite point");
    if (!(p.sigma > 0.0)) throw ValidationError("sweep dataset: sigma must be > 0");
    if (axis == SweepAxis::kB ? p.axis < 0.0 : p.axis <= 0.0)
      throw ValidationError("sweep dataset: axis value outside its domain");
    if (!seen.insert(p.axis).second)
      throw ValidationError("sweep dataset: axis values must be strictly monotone after sorting");
  }
}

std::vector<SweepPoint> SweepDataset::sorted_points() const {
  std::vector<SweepPoint> out = points;
  std::sort(out.begin(), out.end());
  return out;
}

ExperimentConditions SweepDataset::conditions_at(double axis_value) const {
  ExperimentConditions c = fixed;
  (axis == SweepAxis::kB ? c.B : c.T) = axis_value;
  return c;
}

std::string_view to_string(EchoKind kind) { return kind == EchoKind::k2PE ? "2PE" : "3PE"; }

std::string_view to_string(SweepAxis axis) { return axis == SweepAxis::kB ? "B" : "T"; }

std::string_view to_string(Observable observable) {
  switch (observable) {
    case Observable::kGammaSD: return "GammaSD";
    case Observable::kR: return "R";
    case Observable::kGamma0: return "Gamma0";
    case Observable::kT1: return "T1";
    case Observable::kTM: return "TM";
  }
  return "?";
}

std::string_view axis_column(SweepAxis axis) { return axis == SweepAxis::kB ? "B_T" : "T_K"; }

std::string_view observable_column(Observable observable) {
  switch (observable) {
    case Observable::kGammaSD: return "GammaSD_Hz";
    case Observable::kR: return "R_per_s";
    case Observable::kGamma0: return "Gamma0_Hz";
    case Observable::kT1: return "T1_s";
    case Observable::kTM: return "TM_s";
  }
  return "?";
}

SweepAxis parse_axis(std::string_view text) {
  if (text == "B" || text == "B_T") return SweepAxis::kB;
  if (text == "T" || text == "T_K") return SweepAxis::kT;
  throw ValidationError("unknown sweep axis '" + std::string(text) + "'");
}

Observable parse_observable(std::string_view text) {
  for (auto o : {Observable::kGammaSD, Observable::kR, Observable::kGamma0, Observable::kT1, Observable::kTM})
    if (text == to_string(o) || text == observable_column(o)) return o;
  throw ValidationError("unknown observable '" + std::string(text) + "'");
}

}  // namespace echolab
