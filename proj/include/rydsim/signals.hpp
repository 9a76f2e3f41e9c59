#pragma once

#include <string_view>
#include <vector>

#include "rydsim/constants.hpp"
#include "rydsim/propagation.hpp"

namespace rydsim {

enum class Protocol { kConventional, kModulationTransfer };
enum class SweepVariable { kProbeDetuning, kRfAmplitude };

std::string_view to_string(Protocol protocol);
std::string_view to_string(SweepVariable variable);

struct BeamSettings {
  double probe_power = 0.4e-6;             ///< W
  double probe_waist_diameter = 0.3e-3;    ///< m
  double coupling_power = 46e-3;           ///< W
  double coupling_waist_diameter = 0.4e-3; ///< m
};

/// Everything a single signal evaluation needs. Detunings and omega_mod in
/// rad/s; the RF field is the applied one (the cell factor is applied here).
struct SimulationContext {
  AtomModel atom = AtomModel::rubidium85();
  CellModel cell;
  BeamSettings beams;
  VelocityGrid grid = VelocityGrid::stationary();
  double delta_p = 0.0;
  double delta_c = 0.0;
  double delta_rf = 0.0;
  double e_rf_applied = 0.0;  ///< V/m
  double omega_mod = constants::kTwoPi * 3e6;
  /// |E_c,+-1 / E_c,0|; 0 means an unmodulated coupling beam.
  double sideband_ratio = 0.6;
  bool feed_back_sidebands = true;
  FloquetConfig floquet{.n_max = 5, .tol = 1e-8, .growth = TruncationGrowth::kTailCheck};
  /// Worker threads; used by sweep across points, otherwise by the Doppler average.
  unsigned threads = 1;
};

/// Peak field of a Gaussian beam: I0 = 2P / (pi w^2), E = sqrt(2 I0 / (eps0 c)).
double peak_field_from_power(double power, double waist_diameter);

/// Input probe: only the carrier, envelope = half the peak field.
ProbeHarmonics probe_input(const SimulationContext& ctx);

/// Coupling split into carrier and +-1 sidebands of the given ratio, keeping
/// the total power: carrier Rabi = Omega_total / sqrt(1 + 2 r^2); the lower
/// sideband enters with a minus sign.
HarmonicAmplitudes coupling_harmonics(double total_rabi, double sideband_ratio);

/// Medium drive for the context. coupling_on = false removes the coupling
/// beam, and with it the RF field, which then has no populated level to act on.
MediumDrive medium_drive(const SimulationContext& ctx, bool coupling_on);

/// Exit carrier transmission |E_0 out|^2 / |E_0 in|^2 with the coupling on / off.
double coupling_on_transmission(const SimulationContext& ctx);
double coupling_off_transmission(const SimulationContext& ctx);

/// |E_0(on)|^2/|E_in|^2 - |E_0(off)|^2/|E_in|^2. Throws DomainError if the
/// coupling is modulated.
double conventional_signal(const SimulationContext& ctx);

/// 2 |E_-1 E_0^* + E_0 E_+1^*| / |E_in|^2, with E_in the input carrier field
/// (peak amplitude convention cancels in the ratio).
double rma_from_fields(const ProbeHarmonics& exit, cd input_carrier);

/// Propagates once with the modulated coupling and returns the RMA.
double rma_signal(const SimulationContext& ctx);

double evaluate_signal(Protocol protocol, const SimulationContext& ctx);

struct SweepSpec {
  SweepVariable variable = SweepVariable::kProbeDetuning;
  std::vector<double> values;  ///< rad/s or applied V/m
  SimulationContext context;
  Protocol protocol = Protocol::kConventional;

  void validate() const;
};

struct TracePoint {
  double x = 0.0;
  double value = 0.0;
  double delta_p = 0.0;
  double delta_rf = 0.0;
  double e_rf_applied = 0.0;
};

struct SignalTrace {
  Protocol protocol = Protocol::kConventional;
  SweepVariable variable = SweepVariable::kProbeDetuning;
  double omega_mod = 0.0;
  std::vector<TracePoint> points;

  std::vector<double> xs() const;
  std::vector<double> values() const;
};

/// Evaluates every grid point, in parallel when ctx.threads > 1; the result
/// does not depend on the thread count. Failures name the point index.
SignalTrace sweep(const SweepSpec& spec);

struct SlopeCurve {
  std::vector<double> x;
  std::vector<double> slope;  ///< |dy/dx|
  int degree = 0;
  double residual = 0.0;  ///< rms of the fit residuals
};

/// Least-squares polynomial fit on the scan domain mapped to [-1, 1];
/// |dy/dx| at the grid points. Throws DomainError for fewer than degree + 2
/// points, SolverError(kIllConditioned) for a rank-deficient design.
SlopeCurve fit_slope(const std::vector<double>& x, const std::vector<double>& y, int degree = 7);

/// sqrt(2 e) / (slope sqrt(P eta)).
double sensitivity(double slope, double power, double eta);

enum class ExtremumKind { kMinimum, kMaximum };

struct Extremum {
  std::size_t index = 0;
  double position = 0.0;
  double value = 0.0;
  ExtremumKind kind = ExtremumKind::kMaximum;
  double prominence = 0.0;
  double width = 0.0;  ///< full width at half prominence, in x units
};

/// Interior local extrema (flat tops count once, at their centre) whose
/// prominence reaches prominence_fraction of the trace range, ordered by x.
/// Fewer than 5 points gives an empty list.
std::vector<Extremum> spectrum_features(const std::vector<double>& x, const std::vector<double>& y,
                                        double prominence_fraction = 0.05);

}  // namespace rydsim
