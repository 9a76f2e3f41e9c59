#pragma once

#include <cmath>
#include <random>

#include "rydsim/atom_model.hpp"
#include "rydsim/constants.hpp"

namespace fixtures {

using rydsim::constants::kTwoPi;

struct OperatingPoint {
  rydsim::DriveConfig drive;
  double velocity = 0.0;
};

// Coupling carrier and opposite-sign sidebands at amplitude ratio r, total
// Rabi frequency kept fixed.
inline rydsim::HarmonicAmplitudes modulated_coupling(double total, double r) {
  const double carrier = total / std::sqrt(1.0 + 2.0 * r * r);
  return {{-1, -r * carrier}, {0, carrier}, {1, r * carrier}};
}

// The receiver operating point: 3 MHz modulation, sideband ratio 0.6,
// resonant coupling, probe and RF strengths of the experiment.
inline OperatingPoint nominal() {
  OperatingPoint p;
  p.drive.probe = {{0, kTwoPi * 2.8e6}};
  p.drive.coupling = modulated_coupling(kTwoPi * 4.4e6, 0.6);
  p.drive.rf = {{0, kTwoPi * 2.4e6}};
  p.drive.omega_mod = kTwoPi * 3e6;
  return p;
}

// Random perturbation of the nominal point, Delta_c = 0 throughout.
inline OperatingPoint perturbed(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  OperatingPoint p = nominal();
  p.drive.probe = {{0, kTwoPi * 1e6 * (2.8 + 1.5 * u(rng))}};
  p.drive.coupling = modulated_coupling(kTwoPi * 1e6 * (4.4 + 1.0 * u(rng)), 0.6);
  p.drive.rf = {{0, kTwoPi * 1e6 * (3.0 + 3.0 * u(rng))}};
  p.drive.delta_p = kTwoPi * 1e6 * 4.0 * u(rng);
  p.drive.delta_rf = kTwoPi * 1e6 * 5.0 * u(rng);
  p.velocity = 8.0 * u(rng);
  return p;
}

}  // namespace fixtures
