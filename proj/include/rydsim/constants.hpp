#pragma once

#include <numbers>

namespace rydsim::constants {

// CODATA 2018 exact / recommended values, SI units.
inline constexpr double kHbar = 1.054571817e-34;          // J s
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kEpsilon0 = 8.8541878128e-12;     // F/m
inline constexpr double kSpeedOfLight = 299792458.0;      // m/s
inline constexpr double kBoltzmann = 1.380649e-23;        // J/K
inline constexpr double kBohrRadius = 5.29177210903e-11;  // m
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

/// e * a0, the atomic unit of dipole moment.
inline constexpr double kAtomicDipole = kElementaryCharge * kBohrRadius;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace rydsim::constants
