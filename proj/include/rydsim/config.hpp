#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rydsim/doppler.hpp"
#include "rydsim/floquet.hpp"
#include "rydsim/signals.hpp"

namespace rydsim {

// Frequencies are ordinary (Hz, i.e. angular / 2 pi) throughout the config.

struct AtomSection {
  double gamma2_hz = 6.0666e6;
  double gamma3_hz = 2.8e3;
  double gamma4_hz = 1.8e3;
  /// s^-1; unset means mean thermal speed over the probe beam diameter.
  std::optional<double> transit_rate;
  double d21_ea0 = 2.36;
  double d32_ea0 = 0.0147;
  double d43_ea0 = 1400.0;
  double lambda_p_nm = 780.241;
  double lambda_c_nm = 480.125;
  double mass_u = 84.911789738;
  double abundance = 0.73;
  double rf_transition_hz = 17.0422e9;  ///< reported only
};

struct CellSection {
  double length_m = 0.075;
  int n_layers = 100;
  /// Interacting-isotope density in m^-3; unset means calibrate.
  std::optional<double> number_density;
  double perturbation_factor = 0.52;
  double target_transmission = 0.37;
  double calibration_detuning_hz = 0.0;
};

struct DriveSection {
  double probe_power_w = 0.4e-6;
  double probe_waist_m = 0.3e-3;  ///< diameter
  double coupling_power_w = 46e-3;
  double coupling_waist_m = 0.4e-3;
  double delta_p_hz = 0.0;
  double delta_c_hz = 0.0;
  double delta_rf_hz = 0.0;
  double e_rf_v_per_m = 0.5014;  ///< applied field
  double omega_mod_hz = 3e6;
  double sideband_ratio = 0.6;
  double modulation_depth_rad = 1.0471975511965976;  ///< reported only
  bool feed_back_sidebands = true;
};

struct EnsembleSection {
  double temperature_k = 293.0;
  GridKind grid = GridKind::kCoreRefined;
  int n_points = 201;
  double span_sigmas = 4.5;
  double core_half_width_m_per_s = 10.0;
};

struct SweepSection {
  double detuning_min_hz = -15e6;
  double detuning_max_hz = 15e6;
  int detuning_points = 121;
  double e_rf_min_v_per_m = 0.0;
  double e_rf_max_v_per_m = 0.6;
  int e_rf_points = 121;
  std::vector<double> rf_detunings_hz = {0.0, 5e6, 10e6, 20e6, 30e6};
  double conventional_delta_p_hz = 2e6;
  double modulation_transfer_delta_p_hz = 0.0;
  int fit_degree = 7;
  /// custom preset
  SweepVariable variable = SweepVariable::kProbeDetuning;
  Protocol protocol = Protocol::kModulationTransfer;
};

struct SolverSection {
  int n_max = 5;
  double tol = 1e-8;
  TruncationGrowth growth = TruncationGrowth::kTailCheck;
  int n_max_limit = 80;
};

struct DetectorSection {
  double eta_v_per_w = 1.2e7;
};

struct RunConfig {
  AtomSection atom;
  CellSection cell;
  DriveSection drive;
  EnsembleSection ensemble;
  SweepSection sweep;
  SolverSection solver;
  DetectorSection detector;

  /// Throws ConfigError naming the key and the violated bound.
  void validate() const;
};

/// Parses the sectioned key-value format:
///
///   # comment
///   [cell]
///   n_layers = 200
///   drive.e_rf_v_per_m = 0.3   # dotted keys work anywhere
///
/// Unset keys keep their defaults. Unknown sections or keys, malformed values
/// and duplicates throw ConfigError with `source:line`.
RunConfig parse_config(std::string_view text, std::string_view source = "<config>");

/// Reads and parses a file; IoError if it cannot be read.
RunConfig load_config(const std::string& path);

/// Every key with its resolved value, in the same format; parse_config of the
/// echo reproduces the config exactly.
std::string echo_config(const RunConfig& config);

/// Sets one dotted key from its text value, as a config line would.
void set_config_value(RunConfig& config, std::string_view dotted_key, std::string_view value);

/// Physical model objects built from the config (density left unset when
/// number_density is "auto").
AtomModel atom_from_config(const RunConfig& config);
VelocityGrid grid_from_config(const RunConfig& config);
SimulationContext context_from_config(const RunConfig& config);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace rydsim
