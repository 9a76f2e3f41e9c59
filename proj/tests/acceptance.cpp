// End-to-end checks of the receiver model, one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rydsim/errors.hpp"
#include "rydsim/experiment.hpp"

using namespace rydsim;
using constants::kTwoPi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double relative(cd a, cd b) { return std::abs(a - b) / std::abs(b); }

double worst_probe_error(const HarmonicDensityMatrix& a, const HarmonicDensityMatrix& ref) {
  double worst = 0.0;
  for (int n = -1; n <= 1; ++n) worst = std::max(worst, relative(a.probe_coherence(n), ref.probe_coherence(n)));
  return worst;
}

std::vector<Extremum> central(const Series& s, ExtremumKind kind, double half_width_hz) {
  std::vector<Extremum> out;
  for (const Extremum& e : spectrum_features(s.x, s.value)) {
    if (e.kind == kind && std::abs(e.position) <= half_width_hz) out.push_back(e);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

// The default configuration at its calibrated density, computed once.
DensityInfo g_density;

const RunConfig& calibrated() {
  static const RunConfig config = [] {
    RunConfig c;
    g_density = resolve_density(c);
    c.cell.number_density = g_density.number_density;
    return c;
  }();
  return config;
}

Outcome solver_cross_validation() {
  const AtomModel atom = AtomModel::rubidium85();
  const Superop dissipator = build_dissipator(atom);
  const double rate = slowest_relaxation_rate(atom);
  const FloquetConfig production = SimulationContext{}.floquet;
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  double slowest_s = 0.0;
  const int sets = 6;
  for (int k = 0; k < sets; ++k) {
    const auto start = std::chrono::steady_clock::now();
    const fixtures::OperatingPoint p = k == 0 ? fixtures::nominal() : fixtures::perturbed(rng);
    const auto h = build_hamiltonian(p.drive, p.velocity, atom);
    const FloquetBlocks blocks = assemble_blocks(h, dissipator);
    const auto cf = solve_continued_fraction(blocks, p.drive.omega_mod, production);
    const auto direct = solve_direct(blocks, p.drive.omega_mod, 20);
    const auto td = time_domain_oracle(h, dissipator, p.drive.omega_mod, rate, 25.0 / rate, 64);
    worst = std::max({worst, worst_probe_error(cf, td.harmonics), worst_probe_error(direct, td.harmonics),
                      worst_probe_error(cf, direct)});
    slowest_s = std::max(slowest_s, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return {worst <= 1e-6 && slowest_s <= 60.0,
          format("%d sets, worst relative difference %.2e (limit 1e-6), slowest set %.1f s", sets, worst, slowest_s)};
}

Outcome unmodulated_reduction() {
  SimulationContext ctx = context_from_config(calibrated());
  ctx.sideband_ratio = 0.0;
  double worst_rma = 0.0;
  for (double dp_mhz : {-3.0, 0.0, 1.5}) {
    ctx.delta_p = kTwoPi * dp_mhz * 1e6;
    worst_rma = std::max(worst_rma, rma_signal(ctx));
  }

  const AtomModel atom = AtomModel::rubidium85();
  const Superop dissipator = build_dissipator(atom);
  fixtures::OperatingPoint p = fixtures::nominal();
  p.drive.coupling = {{0, kTwoPi * 4.4e6}};
  double worst_state = 0.0;
  for (double v : {0.0, 3.0, -50.0}) {
    const auto h = build_hamiltonian(p.drive, v, atom);
    const Mat4 reference = steady_state_static(h.at(0), dissipator);
    const auto cf = solve_continued_fraction(assemble_blocks(h, dissipator), p.drive.omega_mod, FloquetConfig{});
    worst_state = std::max(worst_state, (cf.at(0) - reference).cwiseAbs().maxCoeff());
  }
  return {worst_rma <= 1e-14 && worst_state <= 1e-10,
          format("max RMA %.1e (limit 1e-14), carrier vs static %.1e (limit 1e-10)", worst_rma, worst_state)};
}

Outcome analytic_limits() {
  const AtomModel atom = AtomModel::rubidium85();

  // Two-level thermal vapour against the integrated closed form.
  SimulationContext base = context_from_config(calibrated());
  CellModel cell = base.cell;
  cell.number_density = 5e15;
  ProbeHarmonics weak;
  weak[0] = 1e-3;
  double worst_bl = 0.0;
  for (double dp_mhz : {0.0, 20.0}) {
    MediumDrive drive;
    drive.delta_p = kTwoPi * dp_mhz * 1e6;
    const double t = carrier_transmission(propagate(weak, drive, atom, cell, base.grid), weak);
    const double expected = oracle::beer_lambert(
        oracle::doppler_field_rate(cell.number_density, atom.d21, atom.lambda_p, drive.delta_p, atom.gamma2,
                                   atom.gamma_transit, ThermalEnsemble{293.0, atom.mass}.sigma_v()),
        cell.length);
    worst_bl = std::max(worst_bl, std::abs(t / expected - 1.0));
  }

  // Atoms at rest: transparency maximum and Autler-Townes splitting.
  SweepSpec s;
  s.context = base;
  s.context.grid = VelocityGrid::stationary();
  s.context.cell.n_layers = 20;
  s.context.cell.number_density = 2e15;
  s.context.sideband_ratio = 0.0;
  s.context.e_rf_applied = 0.0;
  for (int i = 0; i <= 200; ++i) s.values.push_back(kTwoPi * 1e6 * (-10.0 + 0.1 * i));
  const SignalTrace eit = sweep(s);
  const auto top = std::max_element(eit.points.begin(), eit.points.end(),
                                    [](const TracePoint& a, const TracePoint& b) { return a.value < b.value; });
  const double peak_mhz = top->x / kTwoPi / 1e6;

  double worst_at = 0.0;
  for (double linewidths : {6.0, 10.0}) {
    const double rabi = linewidths * atom.gamma2;
    s.context.cell.n_layers = 10;
    s.context.cell.number_density = 1e15;
    s.context.e_rf_applied = rabi * constants::kHbar / (atom.d43 * s.context.cell.perturbation_factor);
    s.values.clear();
    const double span = 1.2 * rabi / kTwoPi / 1e6;
    for (int i = 0; i <= 480; ++i) s.values.push_back(kTwoPi * 1e6 * (-span + 2.0 * span * i / 480.0));
    const SignalTrace at = sweep(s);
    std::vector<Extremum> dips;
    for (const Extremum& e : spectrum_features(at.xs(), at.values())) {
      if (e.kind == ExtremumKind::kMinimum) dips.push_back(e);
    }
    if (dips.size() < 2) return {false, "Autler-Townes doublet not resolved"};
    std::sort(dips.begin(), dips.end(), [](const Extremum& a, const Extremum& b) { return a.value < b.value; });
    const double separation = std::abs(dips[0].position - dips[1].position);
    worst_at = std::max(worst_at, std::abs(separation / oracle::autler_townes_splitting(rabi, 0.0) - 1.0));
  }
  return {worst_bl <= 0.01 && std::abs(peak_mhz) <= 0.05 && worst_at <= 0.1,
          format("Beer-Lambert %.2f%% (limit 1%%), EIT maximum at %.2f MHz, AT separation off by %.1f%% (limit 10%%)",
                 100 * worst_bl, peak_mhz, 100 * worst_at)};
}

Outcome density_calibration() {
  const RunConfig& c = calibrated();
  const DensityInfo info = g_density;
  SimulationContext ctx = context_from_config(c);
  ctx.delta_p = kTwoPi * c.cell.calibration_detuning_hz;
  const double again = coupling_off_transmission(ctx);
  return {std::abs(info.coupling_off_transmission - 0.37) <= 1e-4 && again == info.coupling_off_transmission,
          format("density %.4g m^-3, transmission %.6f, rerun %.6f (target 0.37 +- 1e-4)", info.number_density,
                 info.coupling_off_transmission, again)};
}

Outcome spectrum_shapes() {
  constexpr double kCentral = 5e6;
  const ExperimentResult rma = run_experiment(Preset::kFig3Rma, calibrated());
  const ExperimentResult conv = run_experiment(Preset::kFig3Conventional, calibrated());
  const auto dips = central(rma.series[0], ExtremumKind::kMinimum, kCentral);
  const auto peaks = central(conv.series[0], ExtremumKind::kMaximum, kCentral);
  std::string where = "RMA dips at";
  for (const auto& d : dips) where += format(" %.2f", d.position / 1e6);
  where += " MHz, conventional peaks at";
  for (const auto& p : peaks) where += format(" %.2f", p.position / 1e6);
  where += " MHz";
  const bool dual = peaks.size() == 2 && peaks[0].position < 0.0 && peaks[1].position > 0.0;
  const double slowest = std::max(rma.wall_time_s, conv.wall_time_s);
  return {dips.size() == 3 && dual && slowest <= 600.0,
          where + format(", %.0f s / %.0f s per spectrum (limit 600 s)", rma.wall_time_s, conv.wall_time_s)};
}

// Low-field RF families at the configured operating points.
ExperimentResult g_low_field;

const Series& family_member(Protocol protocol, double delta_rf_hz) {
  for (const Series& s : g_low_field.series) {
    if (s.protocol == protocol && s.delta_rf_hz.front() == delta_rf_hz) return s;
  }
  throw DomainError("missing series");
}

double low_field_slope(const Series& s) { return mean(fit_slope(s.x, s.value, 3).slope); }

Outcome flat_response() {
  RunConfig c = calibrated();
  c.sweep.e_rf_min_v_per_m = 0.0;
  c.sweep.e_rf_max_v_per_m = 0.1;
  c.sweep.e_rf_points = 11;
  c.sweep.rf_detunings_hz = {0.0, 5e6, 10e6, 20e6, 30e6};
  g_low_field = run_experiment(Preset::kFig4, c);
  const double resonant = low_field_slope(family_member(Protocol::kModulationTransfer, 0.0));
  const double detuned = low_field_slope(family_member(Protocol::kModulationTransfer, 10e6));
  return {resonant * 10.0 <= detuned,
          format("RMA slope below 0.1 V/m: %.3e at resonance, %.3e at 10 MHz (ratio needed >= 10)", resonant,
                 detuned)};
}

Outcome low_field_ordering() {
  bool ok = true;
  std::string detail;
  for (double drf : {5e6, 10e6, 20e6, 30e6}) {
    const double mt = low_field_slope(family_member(Protocol::kModulationTransfer, drf));
    const double conv = low_field_slope(family_member(Protocol::kConventional, drf));
    ok = ok && mt > conv;
    detail += format("%s%g MHz: %.3e vs %.3e", detail.empty() ? "" : ", ", drf / 1e6, mt, conv);
  }
  return {ok, "modulation-transfer vs conventional slope, " + detail};
}

Outcome sensitivity_scale() {
  RunConfig c = calibrated();
  c.sweep.rf_detunings_hz = {0.0};
  c.sweep.e_rf_points = 31;
  const ExperimentResult r = run_experiment(Preset::kFig5, c);
  const SensitivityEstimate* est = nullptr;
  for (const auto& e : r.sensitivities) {
    if (e.protocol == Protocol::kConventional) est = &e;
  }
  if (!est) return {false, "no conventional estimate"};
  constexpr double kTarget = 1e-5;  // 0.1 uV/cm in V/m
  const double ratio = est->sensitivity / kTarget;
  return {ratio >= 1.0 / 3.0 && ratio <= 3.0,
          format("%.3e V m^-1 Hz^-1/2 (slope %.3e per V/m at %.3f V/m, power %.3e W), target 1e-5 within x3",
                 est->sensitivity, est->slope, est->e_rf_v_per_m, est->transmitted_power_w)};
}

Outcome determinism() {
  RunConfig c = calibrated();
  c.cell.n_layers = 10;
  c.ensemble.n_points = 41;
  c.sweep.detuning_points = 9;
  c.sweep.e_rf_points = 9;
  c.sweep.rf_detunings_hz = {0.0, 10e6};
  bool ok = true;
  for (Preset preset : {Preset::kFig3Rma, Preset::kFig3Conventional, Preset::kFig5}) {
    const std::string one = series_csv(run_experiment(preset, c, 1).series);
    for (unsigned threads : {2u, 4u}) {
      ok = ok && series_csv(run_experiment(preset, c, threads).series) == one;
    }
    ok = ok && series_csv(run_experiment(preset, c, 1).series) == one;
  }
  return {ok, "fig3-rma, fig3-conventional and fig5 CSV at 1, 2 and 4 threads"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 solver cross-validation", solver_cross_validation},
      {"2 unmodulated reduction", unmodulated_reduction},
      {"3 analytic limits", analytic_limits},
      {"4 density calibration", density_calibration},
      {"5 spectrum shapes", spectrum_shapes},
      {"6 flat response at resonance", flat_response},
      {"7 low-field ordering", low_field_ordering},
      {"8 sensitivity scale", sensitivity_scale},
      {"9 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %s: %s [%.0f s]\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    failed += outcome.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed;
}
