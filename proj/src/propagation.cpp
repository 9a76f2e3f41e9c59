#include "rydsim/propagation.hpp"

#include <cmath>
#include <string>

#include "rydsim/constants.hpp"
#include "rydsim/errors.hpp"

namespace rydsim {

void CellModel::validate() const {
  if (!(length > 0.0)) throw DomainError("CellModel.length must be > 0");
  if (n_layers < 1) throw DomainError("CellModel.n_layers must be >= 1");
  if (!(number_density >= 0.0) || !std::isfinite(number_density)) {
    throw DomainError("CellModel.number_density must be finite and >= 0");
  }
  if (!(perturbation_factor > 0.0 && perturbation_factor <= 1.0)) {
    throw DomainError("CellModel.perturbation_factor must lie in (0, 1]");
  }
}

double ProbeHarmonics::total_intensity() const {
  double total = 0.0;
  for (const cd& e : field) total += std::norm(e);
  return total;
}

double field_coupling_constant(const AtomModel& atom, const CellModel& cell) {
  const double omega_p = constants::kTwoPi * constants::kSpeedOfLight / atom.lambda_p;
  return omega_p * cell.number_density * atom.d21 /
         (2.0 * constants::kEpsilon0 * constants::kSpeedOfLight);
}

HarmonicDensityMatrix solve_velocity_class(const ProbeHarmonics& probe, const MediumDrive& drive,
                                           const AtomModel& atom, const Superop& dissipator,
                                           double velocity) {
  DriveConfig config;
  for (int n = -1; n <= 1; ++n) {
    if (n != 0 && !drive.feed_back_sidebands) continue;
    if (probe[n] != cd{}) config.probe[n] = rabi_from_field(2.0 * probe[n], atom.d21);
  }
  config.coupling = drive.coupling;
  config.rf = drive.rf;
  config.delta_p = drive.delta_p;
  config.delta_c = drive.delta_c;
  config.delta_rf = drive.delta_rf;
  config.omega_mod = drive.omega_mod;

  const HamiltonianHarmonics h = build_hamiltonian(config, velocity, atom);
  if (h.size() == 1) {
    HarmonicDensityMatrix rho(0);
    rho[0] = steady_state_static(h.at(0), dissipator);
    return rho;
  }
  const FloquetBlocks blocks = assemble_blocks(h, dissipator);
  if (!blocks.tridiagonal()) {
    return solve_direct(blocks, drive.omega_mod, std::max(drive.floquet.n_max, blocks.max_index()));
  }
  return solve_continued_fraction(blocks, drive.omega_mod, drive.floquet);
}

ProbeHarmonics layer_step(const ProbeHarmonics& probe_in, const MediumDrive& drive,
                          const AtomModel& atom, const CellModel& cell, const VelocityGrid& grid,
                          unsigned threads) {
  cell.validate();
  if (cell.number_density == 0.0) return probe_in;
  const Superop dissipator = build_dissipator(atom);
  const auto coherence = doppler_average(
      [&](double v) { return solve_velocity_class(probe_in, drive, atom, dissipator, v); }, grid,
      threads);
  const cd gain = cd{0.0, field_coupling_constant(atom, cell) * cell.layer_thickness()};
  ProbeHarmonics out = probe_in;
  for (int n = -1; n <= 1; ++n) out[n] += gain * coherence[static_cast<std::size_t>(n + 1)];
  return out;
}

ProbeHarmonics propagate(const ProbeHarmonics& probe_in, const MediumDrive& drive,
                         const AtomModel& atom, const CellModel& cell, const VelocityGrid& grid,
                         unsigned threads) {
  cell.validate();
  ProbeHarmonics field = probe_in;
  for (int layer = 0; layer < cell.n_layers; ++layer) {
    try {
      field = layer_step(field, drive, atom, cell, grid, threads);
    } catch (const SolverError& e) {
      throw SolverError(e.kind(), "layer " + std::to_string(layer) + ": " + e.what());
    }
  }
  return field;
}

double carrier_transmission(const ProbeHarmonics& out, const ProbeHarmonics& in) {
  const double input = std::norm(in[0]);
  if (!(input > 0.0)) throw DomainError("carrier_transmission: input carrier is zero");
  return std::norm(out[0]) / input;
}

double calibrate_density(double target_transmission, const AtomModel& atom,
                         const CellModel& cell_template, const ProbeHarmonics& probe_in,
                         const VelocityGrid& grid, double probe_detuning, unsigned threads) {
  if (!(target_transmission > 0.0 && target_transmission <= 1.0)) {
    throw DomainError("calibrate_density: target transmission must lie in (0, 1]");
  }
  if (target_transmission == 1.0) return 0.0;

  MediumDrive drive;
  drive.delta_p = probe_detuning;
  auto transmission_at = [&](double density) {
    CellModel cell = cell_template;
    cell.number_density = density;
    return carrier_transmission(propagate(probe_in, drive, atom, cell, grid, threads), probe_in);
  };

  // Bracket from an optical-depth estimate, then bisect.
  // A start that overshoots a layer (gain above one) is backed off.
  double probe_density = 1e16;
  double t_probe = transmission_at(probe_density);
  while (!(t_probe < 1.0) && probe_density > 1e10) {
    probe_density *= 0.01;
    t_probe = transmission_at(probe_density);
  }
  if (!(t_probe < 1.0)) {
    throw SolverError(SolverError::Kind::kNotBracketed,
                      "calibrate_density: medium does not absorb at the calibration detuning");
  }
  const double estimate = probe_density * std::log(target_transmission) / std::log(t_probe);
  double lo = 0.5 * estimate;
  double hi = 2.0 * estimate;
  double t_lo = transmission_at(lo);
  double t_hi = transmission_at(hi);
  // Past a few optical depths per layer the layer update stops being
  // absorptive and transmission no longer falls with density.
  constexpr double kMaxDensity = 1e24;
  auto unreachable = [] {
    return SolverError(SolverError::Kind::kNotBracketed,
                       "calibrate_density: target transmission not reachable");
  };
  while (t_hi > target_transmission) {
    lo = hi;
    t_lo = t_hi;
    hi *= 4.0;
    if (hi > kMaxDensity) throw unreachable();
    try {
      t_hi = transmission_at(hi);
    } catch (const SolverError&) {
      throw unreachable();
    }
    if (!std::isfinite(t_hi) || t_hi >= t_lo) throw unreachable();
  }
  while (t_lo < target_transmission) {
    hi = lo;
    t_hi = t_lo;
    lo *= 0.25;
    t_lo = transmission_at(lo);
  }

  constexpr double kTransmissionTol = 1e-5;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double t_mid = transmission_at(mid);
    if (std::abs(t_mid - target_transmission) <= kTransmissionTol) return mid;
    if (t_mid > target_transmission) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-14 * hi) return mid;
  }
  return 0.5 * (lo + hi);
}

double effective_rf_field(double applied_field, const CellModel& cell) {
  if (!(applied_field >= 0.0)) throw DomainError("effective_rf_field: field must be >= 0");
  return cell.perturbation_factor * applied_field;
}

}  // namespace rydsim
