#include "rydsim/experiment.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <tuple>

#include <json.hpp>

#include "rydsim/constants.hpp"
#include "rydsim/errors.hpp"

namespace rydsim {

using constants::kTwoPi;

namespace {

constexpr std::array<std::pair<Preset, std::string_view>, 5> kPresetNames{{
    {Preset::kFig3Conventional, "fig3-conventional"},
    {Preset::kFig3Rma, "fig3-rma"},
    {Preset::kFig4, "fig4"},
    {Preset::kFig5, "fig5"},
    {Preset::kCustom, "custom"},
}};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  out.back() = hi;
  return out;
}

// A sweep with display values in Hz / V/m next to the solver values.
Series run_series(const SimulationContext& base, Protocol protocol, SweepVariable variable,
                  const std::vector<double>& display_x, unsigned threads) {
  SweepSpec spec;
  spec.context = base;
  spec.context.threads = threads;
  spec.protocol = protocol;
  spec.variable = variable;
  if (protocol == Protocol::kConventional) spec.context.sideband_ratio = 0.0;
  spec.values.reserve(display_x.size());
  for (double x : display_x) {
    spec.values.push_back(variable == SweepVariable::kProbeDetuning ? kTwoPi * x : x);
  }
  const SignalTrace trace = sweep(spec);

  Series s;
  s.protocol = protocol;
  s.variable = variable;
  s.omega_mod_hz = protocol == Protocol::kModulationTransfer ? base.omega_mod / kTwoPi : 0.0;
  for (std::size_t i = 0; i < display_x.size(); ++i) {
    s.x.push_back(display_x[i]);
    s.value.push_back(trace.points[i].value);
    s.delta_p_hz.push_back(variable == SweepVariable::kProbeDetuning ? display_x[i]
                                                                     : base.delta_p / kTwoPi);
    s.delta_rf_hz.push_back(base.delta_rf / kTwoPi);
    s.e_rf_v_per_m.push_back(variable == SweepVariable::kRfAmplitude ? display_x[i]
                                                                     : base.e_rf_applied);
  }
  return s;
}

// Context with every detuning taken from the config in Hz, so that the
// CSV columns print the configured numbers exactly.
struct Operating {
  double delta_p_hz;
  double delta_rf_hz;
};

SimulationContext at(const SimulationContext& base, Operating op) {
  SimulationContext ctx = base;
  ctx.delta_p = kTwoPi * op.delta_p_hz;
  ctx.delta_rf = kTwoPi * op.delta_rf_hz;
  return ctx;
}

void fix_columns(Series& s, Operating op) {
  for (auto& v : s.delta_rf_hz) v = op.delta_rf_hz;
  if (s.variable == SweepVariable::kRfAmplitude) {
    for (auto& v : s.delta_p_hz) v = op.delta_p_hz;
  }
}

std::vector<Series> rf_family(const SimulationContext& base, const RunConfig& config,
                              unsigned threads) {
  const auto fields =
      linspace(config.sweep.e_rf_min_v_per_m, config.sweep.e_rf_max_v_per_m, config.sweep.e_rf_points);
  std::vector<Series> out;
  for (Protocol protocol : {Protocol::kConventional, Protocol::kModulationTransfer}) {
    const double dp = protocol == Protocol::kConventional
                          ? config.sweep.conventional_delta_p_hz
                          : config.sweep.modulation_transfer_delta_p_hz;
    for (double drf : config.sweep.rf_detunings_hz) {
      const Operating op{dp, drf};
      Series s = run_series(at(base, op), protocol, SweepVariable::kRfAmplitude, fields, threads);
      fix_columns(s, op);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

Preset parse_preset(std::string_view name) {
  for (const auto& [preset, text] : kPresetNames) {
    if (text == name) return preset;
  }
  throw ConfigError("unknown preset '" + std::string(name) +
                    "' (expected fig3-conventional, fig3-rma, fig4, fig5 or custom)");
}

std::string_view to_string(Preset preset) {
  for (const auto& [p, text] : kPresetNames) {
    if (p == preset) return text;
  }
  return "?";
}

DensityInfo resolve_density(const RunConfig& config, unsigned threads) {
  SimulationContext ctx = context_from_config(config);
  DensityInfo info;
  if (config.cell.number_density) {
    info.number_density = *config.cell.number_density;
  } else {
    info.number_density = calibrate_density(config.cell.target_transmission, ctx.atom, ctx.cell,
                                            probe_input(ctx), ctx.grid,
                                            kTwoPi * config.cell.calibration_detuning_hz, threads);
    info.calibrated = true;
  }
  info.vapor_density = info.number_density / ctx.atom.abundance;
  ctx.cell.number_density = info.number_density;
  ctx.delta_p = kTwoPi * config.cell.calibration_detuning_hz;
  ctx.threads = threads;
  info.coupling_off_transmission = coupling_off_transmission(ctx);
  return info;
}

ExperimentResult run_experiment(Preset preset, const RunConfig& config, unsigned threads) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.preset = preset;
  result.density = resolve_density(config, threads);

  SimulationContext base = context_from_config(config);
  base.cell.number_density = result.density.number_density;
  result.velocity_nodes = base.grid.size();
  const Operating configured{config.drive.delta_p_hz, config.drive.delta_rf_hz};
  const auto detunings = linspace(config.sweep.detuning_min_hz, config.sweep.detuning_max_hz,
                                  config.sweep.detuning_points);

  switch (preset) {
    case Preset::kFig3Conventional:
    case Preset::kFig3Rma: {
      const Protocol protocol =
          preset == Preset::kFig3Rma ? Protocol::kModulationTransfer : Protocol::kConventional;
      Series s = run_series(at(base, configured), protocol, SweepVariable::kProbeDetuning,
                            detunings, threads);
      fix_columns(s, configured);
      result.series.push_back(std::move(s));
      break;
    }
    case Preset::kFig4:
      result.series = rf_family(base, config, threads);
      break;
    case Preset::kFig5: {
      result.source_traces = rf_family(base, config, threads);
      for (const Series& trace : result.source_traces) {
        const SlopeCurve curve = fit_slope(trace.x, trace.value, config.sweep.fit_degree);
        Series s = trace;
        s.value = curve.slope;
        result.series.push_back(s);
        result.fit_residuals.push_back(curve.residual);

        // Best operating point of the scan, with the transmitted power
        // of the coupling-on probe at zero RF field.
        const auto best = std::max_element(curve.slope.begin(), curve.slope.end());
        const auto k = static_cast<std::size_t>(best - curve.slope.begin());
        SimulationContext ctx = at(base, {trace.delta_p_hz.front(), trace.delta_rf_hz.front()});
        ctx.threads = threads;
        ctx.e_rf_applied = 0.0;
        if (trace.protocol == Protocol::kConventional) ctx.sideband_ratio = 0.0;
        SensitivityEstimate est;
        est.protocol = trace.protocol;
        est.delta_rf_hz = trace.delta_rf_hz.front();
        est.e_rf_v_per_m = trace.x[k];
        est.slope = *best;
        est.transmitted_power_w = config.drive.probe_power_w * coupling_on_transmission(ctx);
        est.sensitivity = est.slope > 0.0 ? sensitivity(est.slope, est.transmitted_power_w,
                                                        config.detector.eta_v_per_w)
                                          : std::numeric_limits<double>::infinity();
        result.sensitivities.push_back(est);
      }
      break;
    }
    case Preset::kCustom: {
      const bool detuning = config.sweep.variable == SweepVariable::kProbeDetuning;
      const auto x = detuning ? detunings
                              : linspace(config.sweep.e_rf_min_v_per_m,
                                         config.sweep.e_rf_max_v_per_m, config.sweep.e_rf_points);
      Series s =
          run_series(at(base, configured), config.sweep.protocol, config.sweep.variable, x, threads);
      fix_columns(s, configured);
      result.series.push_back(std::move(s));
      break;
    }
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string series_csv(const std::vector<Series>& series) {
  std::string out = "x,value,protocol,delta_p_hz,delta_rf_hz,e_rf_v_per_m,omega_mod_hz\n";
  for (const Series& s : series) {
    const std::string protocol(to_string(s.protocol));
    const std::string omega = format_double(s.omega_mod_hz);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out += format_double(s.x[i]) + ',' + format_double(s.value[i]) + ',' + protocol + ',' +
             format_double(s.delta_p_hz[i]) + ',' + format_double(s.delta_rf_hz[i]) + ',' +
             format_double(s.e_rf_v_per_m[i]) + ',' + omega + '\n';
    }
  }
  return out;
}

std::vector<Series> parse_series_csv(std::string_view text, std::string_view source) {
  struct Row {
    double x, value;
    Protocol protocol;
    double delta_p, delta_rf, e_rf, omega;
  };
  std::vector<Row> rows;
  std::size_t pos = 0;
  int line_no = 0;
  bool header = true;
  while (pos < text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };
    if (header) {
      if (line != "x,value,protocol,delta_p_hz,delta_rf_hz,e_rf_v_per_m,omega_mod_hz") {
        throw IoError(where() + "unexpected CSV header");
      }
      header = false;
      continue;
    }
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 7) throw IoError(where() + "expected 7 columns");
    auto number = [&](std::string_view cell) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw IoError(where() + "malformed number '" + std::string(cell) + "'");
      }
      return v;
    };
    Protocol protocol;
    if (cells[2] == "conventional") {
      protocol = Protocol::kConventional;
    } else if (cells[2] == "modulation-transfer") {
      protocol = Protocol::kModulationTransfer;
    } else {
      throw IoError(where() + "unknown protocol '" + std::string(cells[2]) + "'");
    }
    rows.push_back({number(cells[0]), number(cells[1]), protocol, number(cells[3]),
                    number(cells[4]), number(cells[5]), number(cells[6])});
  }
  if (header) throw IoError(std::string(source) + ": empty CSV");

  const bool rf_sweep =
      !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.x == r.e_rf; });
  auto key = [rf_sweep](const Row& r) {
    return std::make_tuple(r.protocol, r.omega, r.delta_rf, rf_sweep ? r.delta_p : r.e_rf);
  };
  std::vector<Series> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    if (i == 0 || key(r) != key(rows[i - 1])) {
      Series s;
      s.protocol = r.protocol;
      s.variable = rf_sweep ? SweepVariable::kRfAmplitude : SweepVariable::kProbeDetuning;
      s.omega_mod_hz = r.omega;
      out.push_back(std::move(s));
    }
    Series& s = out.back();
    s.x.push_back(r.x);
    s.value.push_back(r.value);
    s.delta_p_hz.push_back(r.delta_p);
    s.delta_rf_hz.push_back(r.delta_rf);
    s.e_rf_v_per_m.push_back(r.e_rf);
  }
  return out;
}

std::string metadata_json(const ExperimentResult& result, const RunConfig& config,
                          unsigned threads) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["preset"] = std::string(to_string(result.preset));
  j["config"] = echo_config(config);

  const double factor = config.cell.perturbation_factor;
  ordered_json rf;
  rf["applied_v_per_m"] = config.drive.e_rf_v_per_m;
  rf["internal_v_per_m"] = factor * config.drive.e_rf_v_per_m;
  rf["perturbation_factor"] = factor;
  if (result.preset == Preset::kFig4 || result.preset == Preset::kFig5 ||
      (result.preset == Preset::kCustom && config.sweep.variable == SweepVariable::kRfAmplitude)) {
    rf["sweep_applied_v_per_m"] = {config.sweep.e_rf_min_v_per_m, config.sweep.e_rf_max_v_per_m};
    rf["sweep_internal_v_per_m"] = {factor * config.sweep.e_rf_min_v_per_m,
                                    factor * config.sweep.e_rf_max_v_per_m};
  }
  j["rf_field"] = rf;

  ordered_json density;
  density["calibrated"] = result.density.calibrated;
  density["number_density_m3"] = result.density.number_density;
  density["vapor_density_m3"] = result.density.vapor_density;
  density["abundance"] = config.atom.abundance;
  density["target_transmission"] = config.cell.target_transmission;
  density["coupling_off_transmission"] = result.density.coupling_off_transmission;
  j["density"] = density;

  ordered_json diag;
  diag["velocity_nodes"] = result.velocity_nodes;
  diag["layers"] = config.cell.n_layers;
  diag["floquet_n_max"] = config.solver.n_max;
  diag["floquet_tol"] = config.solver.tol;
  diag["series"] = result.series.size();
  diag["threads"] = threads;
  if (!result.fit_residuals.empty()) diag["fit_residuals"] = result.fit_residuals;
  j["diagnostics"] = diag;

  if (!result.sensitivities.empty()) {
    ordered_json list = ordered_json::array();
    for (const auto& s : result.sensitivities) {
      ordered_json e;
      e["protocol"] = std::string(to_string(s.protocol));
      e["delta_rf_hz"] = s.delta_rf_hz;
      e["e_rf_v_per_m"] = s.e_rf_v_per_m;
      e["slope_per_v_per_m"] = s.slope;
      e["transmitted_power_w"] = s.transmitted_power_w;
      e["sensitivity_v_per_m_per_sqrt_hz"] = s.sensitivity;
      list.push_back(e);
    }
    j["sensitivity"] = list;
  }
  j["wall_time_s"] = result.wall_time_s;
  return j.dump(2) + "\n";
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string series_label(const Series& s) {
  std::string label(to_string(s.protocol));
  if (s.variable == SweepVariable::kRfAmplitude) {
    label += ", \xCE\x94rf = " + fmt("%g", s.delta_rf_hz.front() / 1e6) + " MHz";
  }
  return label;
}

}  // namespace

std::string render_svg(const std::vector<Series>& series, std::string_view title,
                       std::string_view x_label, std::string_view y_label) {
  constexpr double kWidth = 800, kHeight = 500;
  constexpr double kLeft = 80, kRight = 210, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  bool first = true;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_lo = x_hi = s.x[i];
        y_lo = y_hi = s.value[i];
        first = false;
      }
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.value[i]);
      y_hi = std::max(y_hi, s.value[i]);
    }
  }
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi == y_lo) y_hi = y_lo + 1;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * plot_h; };

  static constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                         "#9467bd", "#ff7f0e", "#17becf"};
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 800 500\" "
         "width=\"800\" height=\"500\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt("%.1f", kLeft + plot_w / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-size=\"15\">" + escape(title) + "</text>\n";
  out += "<rect x=\"" + fmt("%.1f", kLeft) + "\" y=\"" + fmt("%.1f", kTop) + "\" width=\"" +
         fmt("%.1f", plot_w) + "\" height=\"" + fmt("%.1f", plot_h) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = x_lo + (x_hi - x_lo) * t / 5.0;
    const double yv = y_lo + (y_hi - y_lo) * t / 5.0;
    const std::string sx = fmt("%.1f", px(xv));
    const std::string sy = fmt("%.1f", py(yv));
    out += "<line x1=\"" + sx + "\" y1=\"" + fmt("%.1f", kTop + plot_h) + "\" x2=\"" + sx +
           "\" y2=\"" + fmt("%.1f", kTop + plot_h + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + sx + "\" y=\"" + fmt("%.1f", kTop + plot_h + 19) +
           "\" text-anchor=\"middle\">" + fmt("%.4g", xv) + "</text>\n";
    out += "<line x1=\"" + fmt("%.1f", kLeft - 5) + "\" y1=\"" + sy + "\" x2=\"" +
           fmt("%.1f", kLeft) + "\" y2=\"" + sy + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt("%.1f", kLeft - 8) + "\" y=\"" + sy +
           "\" text-anchor=\"end\" dominant-baseline=\"middle\">" + fmt("%.3g", yv) + "</text>\n";
  }
  out += "<text x=\"" + fmt("%.1f", kLeft + plot_w / 2) + "\" y=\"" + fmt("%.1f", kHeight - 15) +
         "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  out += "<text x=\"20\" y=\"" + fmt("%.1f", kTop + plot_h / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " + fmt("%.1f", kTop + plot_h / 2) +
         ")\">" + escape(y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kColors[k % kColors.size()];
    const char* dash = s.protocol == Protocol::kConventional ? "" : " stroke-dasharray=\"6 3\"";
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\"" +
           dash + " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out += (i ? " " : "") + fmt("%.2f", px(s.x[i])) + "," + fmt("%.2f", py(s.value[i]));
    }
    out += "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    const double lx = kLeft + plot_w + 15;
    out += "<line x1=\"" + fmt("%.1f", lx) + "\" y1=\"" + fmt("%.1f", ly) + "\" x2=\"" +
           fmt("%.1f", lx + 25) + "\" y2=\"" + fmt("%.1f", ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"" + dash + "/>\n";
    out += "<text x=\"" + fmt("%.1f", lx + 30) + "\" y=\"" + fmt("%.1f", ly) +
           "\" dominant-baseline=\"middle\" font-size=\"11\">" + escape(series_label(s)) +
           "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

void write_artifacts(const ExperimentResult& result, const RunConfig& config,
                     const std::string& out_dir, bool svg, unsigned threads) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
  const std::filesystem::path dir(out_dir);
  const std::string name(to_string(result.preset));

  write_file(dir / (name + ".csv"), series_csv(result.series));
  if (!result.source_traces.empty()) {
    write_file(dir / (name + "_traces.csv"), series_csv(result.source_traces));
  }
  write_file(dir / (name + ".json"), metadata_json(result, config, threads));
  if (svg) {
    const bool detuning =
        !result.series.empty() && result.series.front().variable == SweepVariable::kProbeDetuning;
    std::vector<Series> plotted = result.series;
    if (detuning) {
      for (Series& s : plotted) {
        for (double& x : s.x) x /= 1e6;
      }
    }
    const std::string x_label = detuning ? "probe detuning (MHz)" : "applied RF field (V/m)";
    std::string y_label = "signal";
    if (result.preset == Preset::kFig5) {
      y_label = "|slope| (per V/m)";
    } else if (!plotted.empty()) {
      y_label = plotted.front().protocol == Protocol::kConventional ? "transparency difference"
                                                                    : "R.M.A.";
    }
    write_file(dir / (name + ".svg"), render_svg(plotted, name, x_label, y_label));
  }
}

}  // namespace rydsim
