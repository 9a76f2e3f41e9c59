#pragma once

#include <array>

#include "rydsim/atom_model.hpp"
#include "rydsim/doppler.hpp"
#include "rydsim/floquet.hpp"

namespace rydsim {

struct CellModel {
  double length = 0.075;  ///< m
  int n_layers = 100;
  /// Atoms of the interacting isotope per m^3 (abundance already applied).
  double number_density = 0.0;
  /// Mean RF field inside the cell over the applied field.
  double perturbation_factor = 0.52;

  void validate() const;
  double layer_thickness() const { return length / n_layers; }
};

/// Complex probe envelopes E_n of E(t) = sum_n E_n exp(-i (w_p + n w_mod) t) + c.c.,
/// for n = -1, 0, +1 (V/m). The peak field of a component is 2 |E_n|.
struct ProbeHarmonics {
  std::array<cd, 3> field{};

  cd& operator[](int n) { return field[static_cast<std::size_t>(n + 1)]; }
  cd operator[](int n) const { return field[static_cast<std::size_t>(n + 1)]; }

  /// sum_n |E_n|^2
  double total_intensity() const;
};

/// The atomic drive apart from the probe: coupling and RF harmonics as Rabi
/// amplitudes, detunings, and solver settings. Coupling depletion across the
/// cell is neglected, so this is the same in every layer.
struct MediumDrive {
  HarmonicAmplitudes coupling;
  HarmonicAmplitudes rf;
  double delta_p = 0.0;
  double delta_c = 0.0;
  double delta_rf = 0.0;
  double omega_mod = 0.0;
  /// Feed probe sidebands generated upstream back into the atomic drive.
  /// When false only the local probe carrier drives the atoms.
  bool feed_back_sidebands = true;
  FloquetConfig floquet{.n_max = 5, .tol = 1e-8, .growth = TruncationGrowth::kTailCheck};
};

/// Prefactor w_p N d21 / (2 eps0 c) of dE_n/dz = i (prefactor) <rho21^(n)>.
double field_coupling_constant(const AtomModel& atom, const CellModel& cell);

/// Periodic steady state of one velocity class driven by the local probe.
HarmonicDensityMatrix solve_velocity_class(const ProbeHarmonics& probe, const MediumDrive& drive,
                                           const AtomModel& atom, const Superop& dissipator,
                                           double velocity);

/// One thin layer: Doppler-averaged coherence harmonics source the probe
/// harmonics, E_n += i k <rho21^(n)> dz. Coupling and RF pass unchanged.
ProbeHarmonics layer_step(const ProbeHarmonics& probe_in, const MediumDrive& drive,
                          const AtomModel& atom, const CellModel& cell, const VelocityGrid& grid,
                          unsigned threads = 1);

/// layer_step folded over cell.n_layers layers.
ProbeHarmonics propagate(const ProbeHarmonics& probe_in, const MediumDrive& drive,
                         const AtomModel& atom, const CellModel& cell, const VelocityGrid& grid,
                         unsigned threads = 1);

/// |E_0 out|^2 / |E_0 in|^2
double carrier_transmission(const ProbeHarmonics& out, const ProbeHarmonics& in);

/// Number density giving the requested coupling-off, RF-off carrier
/// transmission at the given probe detuning (resonant by default). Bracketed
/// bisection; the result reproduces the target to within 1e-4. Throws
/// SolverError(kNotBracketed) when the target is out of reach.
double calibrate_density(double target_transmission, const AtomModel& atom,
                         const CellModel& cell_template, const ProbeHarmonics& probe_in,
                         const VelocityGrid& grid, double probe_detuning = 0.0,
                         unsigned threads = 1);

/// perturbation_factor * applied field.
double effective_rf_field(double applied_field, const CellModel& cell);

}  // namespace rydsim
