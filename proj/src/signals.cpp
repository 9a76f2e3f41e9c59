#include "rydsim/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include <Eigen/QR>

#include "rydsim/errors.hpp"
#include "rydsim/parallel.hpp"

namespace rydsim {

std::string_view to_string(Protocol protocol) {
  return protocol == Protocol::kConventional ? "conventional" : "modulation-transfer";
}

std::string_view to_string(SweepVariable variable) {
  return variable == SweepVariable::kProbeDetuning ? "probe-detuning" : "rf-amplitude";
}

double peak_field_from_power(double power, double waist_diameter) {
  if (!(power >= 0.0)) throw DomainError("beam power must be >= 0");
  if (!(waist_diameter > 0.0)) throw DomainError("beam waist diameter must be > 0");
  const double w = 0.5 * waist_diameter;
  const double intensity = 2.0 * power / (std::numbers::pi * w * w);
  return std::sqrt(2.0 * intensity / (constants::kEpsilon0 * constants::kSpeedOfLight));
}

ProbeHarmonics probe_input(const SimulationContext& ctx) {
  ProbeHarmonics in;
  in[0] = 0.5 * peak_field_from_power(ctx.beams.probe_power, ctx.beams.probe_waist_diameter);
  return in;
}

HarmonicAmplitudes coupling_harmonics(double total_rabi, double sideband_ratio) {
  if (!(sideband_ratio >= 0.0)) throw DomainError("sideband ratio must be >= 0");
  const double carrier = total_rabi / std::sqrt(1.0 + 2.0 * sideband_ratio * sideband_ratio);
  HarmonicAmplitudes h{{0, carrier}};
  if (sideband_ratio > 0.0) {
    h[-1] = -sideband_ratio * carrier;
    h[1] = sideband_ratio * carrier;
  }
  return h;
}

MediumDrive medium_drive(const SimulationContext& ctx, bool coupling_on) {
  MediumDrive drive;
  drive.delta_p = ctx.delta_p;
  drive.delta_c = ctx.delta_c;
  drive.delta_rf = ctx.delta_rf;
  drive.feed_back_sidebands = ctx.feed_back_sidebands;
  drive.floquet = ctx.floquet;
  if (coupling_on) {
    const double e_c =
        peak_field_from_power(ctx.beams.coupling_power, ctx.beams.coupling_waist_diameter);
    const double total = rabi_from_field(e_c, ctx.atom.d32).real();
    if (total > 0.0) drive.coupling = coupling_harmonics(total, ctx.sideband_ratio);
    if (ctx.sideband_ratio > 0.0) drive.omega_mod = ctx.omega_mod;
  }
  const double e_rf = effective_rf_field(ctx.e_rf_applied, ctx.cell);
  if (coupling_on && e_rf > 0.0) drive.rf[0] = rabi_from_field(e_rf, ctx.atom.d43);
  return drive;
}

double coupling_off_transmission(const SimulationContext& ctx) {
  const ProbeHarmonics in = probe_input(ctx);
  return carrier_transmission(
      propagate(in, medium_drive(ctx, false), ctx.atom, ctx.cell, ctx.grid, ctx.threads), in);
}

double coupling_on_transmission(const SimulationContext& ctx) {
  const ProbeHarmonics in = probe_input(ctx);
  return carrier_transmission(
      propagate(in, medium_drive(ctx, true), ctx.atom, ctx.cell, ctx.grid, ctx.threads), in);
}

namespace {

void require_unmodulated(const SimulationContext& ctx) {
  if (ctx.sideband_ratio != 0.0) {
    throw DomainError("conventional_signal: coupling must be unmodulated (sideband ratio 0)");
  }
}

}  // namespace

double conventional_signal(const SimulationContext& ctx) {
  require_unmodulated(ctx);
  return coupling_on_transmission(ctx) - coupling_off_transmission(ctx);
}

double rma_from_fields(const ProbeHarmonics& exit, cd input_carrier) {
  const double norm = std::norm(input_carrier);
  if (!(norm > 0.0)) throw DomainError("rma_from_fields: input field is zero");
  return 2.0 * std::abs(exit[-1] * std::conj(exit[0]) + exit[0] * std::conj(exit[1])) / norm;
}

double rma_signal(const SimulationContext& ctx) {
  const ProbeHarmonics in = probe_input(ctx);
  const ProbeHarmonics out =
      propagate(in, medium_drive(ctx, true), ctx.atom, ctx.cell, ctx.grid, ctx.threads);
  return rma_from_fields(out, in[0]);
}

double evaluate_signal(Protocol protocol, const SimulationContext& ctx) {
  return protocol == Protocol::kConventional ? conventional_signal(ctx) : rma_signal(ctx);
}

void SweepSpec::validate() const {
  if (values.size() < 2) throw DomainError("sweep grid needs at least 2 points");
  const bool increasing = values[1] > values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    const bool ok = increasing ? values[i] > values[i - 1] : values[i] < values[i - 1];
    if (!ok) throw DomainError("sweep grid must be strictly monotone (index " + std::to_string(i) + ")");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("sweep grid values must be finite");
    if (variable == SweepVariable::kRfAmplitude && v < 0.0) {
      throw DomainError("RF amplitude grid values must be >= 0");
    }
  }
  context.cell.validate();
}

std::vector<double> SignalTrace::xs() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.x);
  return out;
}

std::vector<double> SignalTrace::values() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.value);
  return out;
}

SignalTrace sweep(const SweepSpec& spec) {
  spec.validate();
  SignalTrace trace;
  trace.protocol = spec.protocol;
  trace.variable = spec.variable;
  trace.omega_mod = spec.protocol == Protocol::kModulationTransfer ? spec.context.omega_mod : 0.0;
  trace.points.resize(spec.values.size());

  // The coupling-off reference does not see the RF field, so an RF sweep
  // needs it once.
  std::optional<double> off_reference;
  if (spec.protocol == Protocol::kConventional && spec.variable == SweepVariable::kRfAmplitude) {
    require_unmodulated(spec.context);
    off_reference = coupling_off_transmission(spec.context);
  }

  // Points in parallel, each point single-threaded inside.
  parallel_for(spec.values.size(), spec.context.threads, [&](std::size_t i) {
    SimulationContext ctx = spec.context;
    ctx.threads = 1;
    if (spec.variable == SweepVariable::kProbeDetuning) {
      ctx.delta_p = spec.values[i];
    } else {
      ctx.e_rf_applied = spec.values[i];
    }
    double value = 0.0;
    try {
      value = off_reference ? coupling_on_transmission(ctx) - *off_reference
                            : evaluate_signal(spec.protocol, ctx);
    } catch (const SolverError& e) {
      throw SolverError(e.kind(), "sweep point " + std::to_string(i) + ": " + e.what());
    }
    if (!std::isfinite(value)) {
      throw SolverError(SolverError::Kind::kNoConvergence,
                        "sweep point " + std::to_string(i) + ": non-finite signal");
    }
    trace.points[i] = {spec.values[i], value, ctx.delta_p, ctx.delta_rf, ctx.e_rf_applied};
  });
  return trace;
}

SlopeCurve fit_slope(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  if (degree < 1) throw DomainError("fit_slope: degree must be >= 1");
  if (x.size() != y.size()) throw DomainError("fit_slope: x and y lengths differ");
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < degree + 2) {
    throw DomainError("fit_slope: need at least degree + 2 = " + std::to_string(degree + 2) +
                      " points, got " + std::to_string(n));
  }
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    throw SolverError(SolverError::Kind::kIllConditioned, "fit_slope: degenerate x range");
  }
  const double centre = 0.5 * (hi + lo);
  const double half = 0.5 * (hi - lo);

  Eigen::MatrixXd design(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (x[static_cast<std::size_t>(i)] - centre) / half;
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      design(i, k) = p;
      p *= t;
    }
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < degree + 1) {
    throw SolverError(SolverError::Kind::kIllConditioned,
                      "fit_slope: design matrix is rank deficient (rank " +
                          std::to_string(qr.rank()) + " < " + std::to_string(degree + 1) + ")");
  }
  const Eigen::VectorXd coef = qr.solve(rhs);

  SlopeCurve curve;
  curve.degree = degree;
  curve.x = x;
  curve.slope.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = (x[i] - centre) / half;
    double derivative = 0.0;
    double p = 1.0;
    for (int k = 1; k <= degree; ++k) {
      derivative += k * coef(k) * p;
      p *= t;
    }
    curve.slope[i] = std::abs(derivative / half);
  }
  curve.residual = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(n));
  return curve;
}

double sensitivity(double slope, double power, double eta) {
  if (!(slope > 0.0)) throw DomainError("sensitivity: slope must be > 0");
  if (!(power > 0.0)) throw DomainError("sensitivity: power must be > 0");
  if (!(eta > 0.0)) throw DomainError("sensitivity: eta must be > 0");
  return std::sqrt(2.0 * constants::kElementaryCharge) / (slope * std::sqrt(power * eta));
}

namespace {

// Prominence of a peak at index p of y (maxima; minima are handled by negation).
double peak_prominence(const std::vector<double>& y, std::size_t p) {
  const double h = y[p];
  double left_min = h;
  for (std::size_t i = p; i-- > 0;) {
    if (y[i] > h) break;
    left_min = std::min(left_min, y[i]);
  }
  double right_min = h;
  for (std::size_t i = p + 1; i < y.size(); ++i) {
    if (y[i] > h) break;
    right_min = std::min(right_min, y[i]);
  }
  return h - std::max(left_min, right_min);
}

double crossing(const std::vector<double>& x, const std::vector<double>& y, std::size_t inside,
                std::size_t outside, double level) {
  const double f = (level - y[inside]) / (y[outside] - y[inside]);
  return x[inside] + f * (x[outside] - x[inside]);
}

double half_prominence_width(const std::vector<double>& x, const std::vector<double>& y,
                             std::size_t p, double prominence) {
  const double level = y[p] - 0.5 * prominence;
  double left = x.front();
  for (std::size_t i = p; i-- > 0;) {
    if (y[i] < level) {
      left = crossing(x, y, i + 1, i, level);
      break;
    }
  }
  double right = x.back();
  for (std::size_t i = p + 1; i < y.size(); ++i) {
    if (y[i] < level) {
      right = crossing(x, y, i - 1, i, level);
      break;
    }
  }
  return std::abs(right - left);
}

void find_peaks(const std::vector<double>& x, const std::vector<double>& y, double threshold,
                ExtremumKind kind, double sign, std::vector<Extremum>& out) {
  const std::size_t n = y.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (!(y[i] > y[i - 1])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] == y[i]) ++j;
    if (j + 1 < n && y[j + 1] < y[i]) {
      const std::size_t p = (i + j) / 2;
      const double prominence = peak_prominence(y, p);
      if (prominence >= threshold && prominence > 0.0) {
        out.push_back({p, x[p], sign * y[p], kind, prominence,
                       half_prominence_width(x, y, p, prominence)});
      }
    }
    i = j + 1;
  }
}

}  // namespace

std::vector<Extremum> spectrum_features(const std::vector<double>& x, const std::vector<double>& y,
                                        double prominence_fraction) {
  std::vector<Extremum> out;
  if (x.size() != y.size() || y.size() < 5) return out;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double threshold = prominence_fraction * (*hi - *lo);
  find_peaks(x, y, threshold, ExtremumKind::kMaximum, 1.0, out);
  std::vector<double> negated(y.size());
  std::transform(y.begin(), y.end(), negated.begin(), [](double v) { return -v; });
  find_peaks(x, negated, threshold, ExtremumKind::kMinimum, -1.0, out);
  std::sort(out.begin(), out.end(),
            [](const Extremum& a, const Extremum& b) { return a.index < b.index; });
  return out;
}

}  // namespace rydsim
