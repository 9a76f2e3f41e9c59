#pragma once

#include <map>

#include "rydsim/linalg.hpp"

namespace rydsim {

/// Effective four-level ladder |1> -> |2> -> |3> -> |4>.
///
/// All rates are angular (rad/s) and enter the master equation directly.
/// Dipoles are effective transition moments for the x-polarised geometry.
struct AtomModel {
  double gamma2 = 0.0;         ///< decay |2> -> |1>
  double gamma3 = 0.0;         ///< decay |3> -> |2>
  double gamma4 = 0.0;         ///< decay |4> -> |3>
  double gamma_transit = 0.0;  ///< transit relaxation, applied to every level
  double d21 = 0.0;            ///< C m
  double d32 = 0.0;
  double d43 = 0.0;
  double lambda_p = 0.0;  ///< probe wavelength (m)
  double lambda_c = 0.0;  ///< coupling wavelength (m)
  double mass = 0.0;      ///< kg
  double abundance = 0.73;

  /// Throws DomainError naming the first offending field.
  void validate() const;

  double k_probe() const;
  double k_coupling() const;

  /// 85Rb, 5S1/2 -> 5P3/2 -> 50D5/2 -> 51P3/2 at room temperature.
  /// Values documented in README.md ("Default parameters").
  static AtomModel rubidium85();
};

/// Mean thermal speed sqrt(8 kB T / (pi m)) divided by the beam diameter.
double transit_rate(double beam_diameter, double temperature, double mass);

/// Complex Rabi amplitude d E / hbar, with E the peak field amplitude.
cd rabi_from_field(cd field, double dipole);

/// Harmonic index -> complex Rabi amplitude (rad/s).
using HarmonicAmplitudes = std::map<int, cd>;

struct DriveConfig {
  HarmonicAmplitudes probe;
  HarmonicAmplitudes coupling;
  HarmonicAmplitudes rf;
  double delta_p = 0.0;
  double delta_c = 0.0;
  double delta_rf = 0.0;
  double omega_mod = 0.0;

  /// Largest |m| carrying a nonzero amplitude on any field.
  int max_harmonic() const;
  void validate() const;
};

/// Fourier components of H(t) = sum_m H_m exp(-i m omega_mod t) in the
/// rotating frame (hbar = 1). Only nonzero components are stored.
using HamiltonianHarmonics = std::map<int, Mat4>;

inline constexpr int kDefaultHarmonicCap = 4;

/// Rotating-wave Hamiltonian for an atom moving at `velocity` along the
/// probe axis. Probe travels along +z, coupling along -z:
///   dp' = dp - k_p v,  dc' = dc + k_c v,  RF Doppler shift neglected.
/// The diagonal is (0, -dp', -(dp'+dc'), -(dp'+dc'+drf)); field harmonic m
/// of amplitude W sits on the upper off-diagonal of its transition as W/2,
/// and H_{-m} = H_m^dagger fixes the lower triangle.
HamiltonianHarmonics build_hamiltonian(const DriveConfig& drive, double velocity,
                                       const AtomModel& atom,
                                       int harmonic_cap = kDefaultHarmonicCap);

/// Lindblad dissipator: chain decay 4->3->2->1 plus transit loss from every
/// level at gamma_transit, all of it repopulating |1>.
Superop build_dissipator(const AtomModel& atom);

/// Steady-state density matrix of the time-independent problem.
using DensityMatrix = Mat4;

/// Solves (-i[H0, .] + D) rho = 0 with trace(rho) = 1.
/// Throws SolverError(kSingular) when the null space is not one-dimensional.
DensityMatrix steady_state_static(const Mat4& h0, const Superop& dissipator);

/// Liouvillian generator -i[H0, .] + D.
Superop liouvillian(const Mat4& h0, const Superop& dissipator);

/// Lower bound on every nonzero relaxation rate of the dissipator. With a
/// transit rate each traceless deviation decays at least that fast.
double slowest_relaxation_rate(const AtomModel& atom);

double hermiticity_residual(const Mat4& m);

}  // namespace rydsim
