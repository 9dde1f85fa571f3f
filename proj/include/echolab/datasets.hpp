#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "echolab/fit.hpp"
#include "echolab/types.hpp"

namespace echolab {

enum class EchoKind { k2PE, k3PE };

struct DecaySample {
  double t12 = 0.0;        // [s]
  double t23 = 0.0;        // [s]
  double intensity = 0.0;  // [a.u.]
  double sigma = 1.0;      // [a.u.]

  auto operator<=>(const DecaySample&) const = default;
};

inline constexpr std::size_t kMin2peSamples = 8;
inline constexpr std::size_t kMin3peSamples = 20;

struct DecayDataset {
  ExperimentConditions conditions;
  std::vector<DecaySample> samples;
  EchoKind kind = EchoKind::k2PE;

  /// 2PE when every t23 is zero.
  static EchoKind infer_kind(const std::vector<DecaySample>& samples);
  void validate() const;
  /// Samples in lexicographic (t12, t23, intensity, sigma) order.
  std::vector<DecaySample> canonical_samples() const;
};

enum class SweepAxis { kB, kT };
enum class Observable { kGammaSD, kR, kGamma0, kT1, kTM };

struct SweepPoint {
  double axis = 0.0;   // B [T] or T [K]
  double value = 0.0;  // observable in its native unit
  double sigma = 1.0;

  auto operator<=>(const SweepPoint&) const = default;
};

inline constexpr std::size_t kMinSweepPoints = 4;

struct SweepDataset {
  SweepAxis axis = SweepAxis::kB;
  Observable observable = Observable::kGammaSD;
  ExperimentConditions fixed;  // the non-swept coordinate and g-factors
  std::vector<SweepPoint> points;
  NamedValues frozen;          // parameters held fixed during the fit

  void validate() const;
  /// Points sorted by axis value.
  std::vector<SweepPoint> sorted_points() const;
  /// Conditions at one axis value.
  ExperimentConditions conditions_at(double axis_value) const;
};

std::string_view to_string(EchoKind kind);
std::string_view to_string(SweepAxis axis);
std::string_view to_string(Observable observable);
/// CSV column names, e.g. "B_T", "GammaSD_Hz".
std::string_view axis_column(SweepAxis axis);
std::string_view observable_column(Observable observable);

SweepAxis parse_axis(std::string_view text);
Observable parse_observable(std::string_view text);

}  // namespace echolab
