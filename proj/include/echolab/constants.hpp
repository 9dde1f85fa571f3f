#pragma once

#include <numbers>

namespace echolab {

/// CODATA 2018 exact/recommended values, SI units.
struct PhysicalConstants {
  static constexpr double muB = 9.2740100783e-24;   // Bohr magneton [J/T]
  static constexpr double kB = 1.380649e-23;        // Boltzmann constant [J/K]
  static constexpr double hbar = 1.054571817e-34;   // reduced Planck constant [J s]
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace echolab
