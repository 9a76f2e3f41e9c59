#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rydsim/config.hpp"
#include "rydsim/signals.hpp"

namespace rydsim {

enum class Preset { kFig3Conventional, kFig3Rma, kFig4, kFig5, kCustom };

/// Throws ConfigError for names outside the preset set.
Preset parse_preset(std::string_view name);
std::string_view to_string(Preset preset);

/// One plotted series: the simulated trace plus the values written to CSV
/// (x in Hz for detuning sweeps, applied V/m for RF sweeps).
struct Series {
  Protocol protocol = Protocol::kConventional;
  SweepVariable variable = SweepVariable::kProbeDetuning;
  std::vector<double> x;
  std::vector<double> value;
  /// Per point, Hz and applied V/m.
  std::vector<double> delta_p_hz;
  std::vector<double> delta_rf_hz;
  std::vector<double> e_rf_v_per_m;
  double omega_mod_hz = 0.0;
};

struct DensityInfo {
  double number_density = 0.0;  ///< interacting isotope, m^-3
  double vapor_density = 0.0;   ///< number_density / abundance
  bool calibrated = false;
  double coupling_off_transmission = 0.0;  ///< at the calibration detuning
};

struct SensitivityEstimate {
  Protocol protocol = Protocol::kConventional;
  double delta_rf_hz = 0.0;
  double e_rf_v_per_m = 0.0;
  double slope = 0.0;  ///< per applied V/m
  double transmitted_power_w = 0.0;
  double sensitivity = 0.0;  ///< V m^-1 Hz^-1/2
};

struct ExperimentResult {
  Preset preset = Preset::kCustom;
  std::vector<Series> series;        ///< the primary output (slopes for fig5)
  std::vector<Series> source_traces;  ///< fig5 only: the fitted E_RF traces
  std::vector<double> fit_residuals;  ///< fig5 only, one per series
  std::vector<SensitivityEstimate> sensitivities;  ///< fig5 only
  DensityInfo density;
  std::size_t velocity_nodes = 0;
  double wall_time_s = 0.0;
};

/// Density from the config, or calibrated when cell.number_density = auto.
DensityInfo resolve_density(const RunConfig& config, unsigned threads = 1);

/// Runs the preset. Output values do not depend on `threads`.
ExperimentResult run_experiment(Preset preset, const RunConfig& config, unsigned threads = 1);

/// `x,value,protocol,delta_p_hz,delta_rf_hz,e_rf_v_per_m,omega_mod_hz`, one
/// row per point, shortest round-trip floats.
std::string series_csv(const std::vector<Series>& series);

/// Parses series_csv output; rows are grouped into series by
/// (protocol, omega_mod_hz, and whichever of delta_p / delta_rf / e_rf is held).
std::vector<Series> parse_series_csv(std::string_view text, std::string_view source = "<csv>");

std::string metadata_json(const ExperimentResult& result, const RunConfig& config,
                          unsigned threads);

/// Self-contained SVG 1.1 line plot, 800 x 500 viewBox.
std::string render_svg(const std::vector<Series>& series, std::string_view title,
                       std::string_view x_label, std::string_view y_label);

/// Writes <out>/<preset>.csv and .json, plus .svg when requested, creating
/// the directory. fig5 also writes <preset>_traces.csv.
void write_artifacts(const ExperimentResult& result, const RunConfig& config,
                     const std::string& out_dir, bool svg, unsigned threads);

}  // namespace rydsim
