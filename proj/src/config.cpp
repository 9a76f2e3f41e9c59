#include "rydsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "rydsim/constants.hpp"
#include "rydsim/errors.hpp"

namespace rydsim {

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

namespace {

using constants::kTwoPi;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError("expected a finite number, got '" + std::string(text) + "'");
  }
  return value;
}

int parse_int(std::string_view text) {
  text = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("expected true or false, got '" + std::string(text) + "'");
}

template <class Enum>
using Names = std::vector<std::pair<Enum, std::string_view>>;

template <class Enum>
Enum parse_enum(std::string_view text, const Names<Enum>& names) {
  text = trim(text);
  std::string choices;
  for (const auto& [value, name] : names) {
    if (name == text) return value;
    choices += (choices.empty() ? "" : ", ") + std::string(name);
  }
  throw ConfigError("expected one of " + choices + ", got '" + std::string(text) + "'");
}

template <class Enum>
std::string enum_name(Enum value, const Names<Enum>& names) {
  for (const auto& [v, name] : names) {
    if (v == value) return std::string(name);
  }
  return "?";
}

const Names<GridKind> kGridNames = {{GridKind::kCoreRefined, "core-refined"},
                                    {GridKind::kGaussHermite, "gauss-hermite"},
                                    {GridKind::kTrapezoid, "trapezoid"}};
const Names<TruncationGrowth> kGrowthNames = {{TruncationGrowth::kFixed, "fixed"},
                                              {TruncationGrowth::kDouble, "double"},
                                              {TruncationGrowth::kTailCheck, "tail-check"}};
const Names<SweepVariable> kVariableNames = {{SweepVariable::kProbeDetuning, "probe-detuning"},
                                             {SweepVariable::kRfAmplitude, "rf-amplitude"}};
const Names<Protocol> kProtocolNames = {{Protocol::kConventional, "conventional"},
                                        {Protocol::kModulationTransfer, "modulation-transfer"}};

struct Entry {
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Keyed by "section.key". Entries keep insertion order, which is the echo
// order, so the table below is grouped per section.
struct Registry {
  std::vector<std::pair<std::string, Entry>> entries;
  std::map<std::string, std::size_t, std::less<>> index;

  void add(std::string key, Entry entry) {
    index.emplace(key, entries.size());
    entries.emplace_back(std::move(key), std::move(entry));
  }

  template <class Section>
  void number(std::string key, Section RunConfig::*section, double Section::*field) {
    add(std::move(key), {[=](RunConfig& c, std::string_view v) { c.*section.*field = parse_double(v); },
                         [=](const RunConfig& c) { return format_double(c.*section.*field); }});
  }
  template <class Section>
  void integer(std::string key, Section RunConfig::*section, int Section::*field) {
    add(std::move(key), {[=](RunConfig& c, std::string_view v) { c.*section.*field = parse_int(v); },
                         [=](const RunConfig& c) { return std::to_string(c.*section.*field); }});
  }
  template <class Section>
  void boolean(std::string key, Section RunConfig::*section, bool Section::*field) {
    add(std::move(key), {[=](RunConfig& c, std::string_view v) { c.*section.*field = parse_bool(v); },
                         [=](const RunConfig& c) { return std::string(c.*section.*field ? "true" : "false"); }});
  }
  template <class Section>
  void number_or_auto(std::string key, Section RunConfig::*section,
                      std::optional<double> Section::*field) {
    add(std::move(key),
        {[=](RunConfig& c, std::string_view v) {
           if (trim(v) == "auto") {
             (c.*section.*field).reset();
           } else {
             c.*section.*field = parse_double(v);
           }
         },
         [=](const RunConfig& c) {
           const auto& value = c.*section.*field;
           return value ? format_double(*value) : std::string("auto");
         }});
  }
  template <class Section, class Enum>
  void enumeration(std::string key, Section RunConfig::*section, Enum Section::*field,
                   const Names<Enum>& names) {
    add(std::move(key),
        {[=, &names](RunConfig& c, std::string_view v) { c.*section.*field = parse_enum(v, names); },
         [=, &names](const RunConfig& c) { return enum_name(c.*section.*field, names); }});
  }
  template <class Section>
  void list(std::string key, Section RunConfig::*section, std::vector<double> Section::*field) {
    add(std::move(key),
        {[=](RunConfig& c, std::string_view v) {
           std::vector<double> values;
           std::string_view rest = trim(v);
           while (!rest.empty()) {
             const auto comma = rest.find(',');
             values.push_back(parse_double(rest.substr(0, comma)));
             if (comma == std::string_view::npos) break;
             rest = rest.substr(comma + 1);
           }
           c.*section.*field = std::move(values);
         },
         [=](const RunConfig& c) {
           std::string out;
           for (double x : c.*section.*field) out += (out.empty() ? "" : ", ") + format_double(x);
           return out;
         }});
  }
};

const Registry& registry() {
  static const Registry r = [] {
    Registry g;
    using R = RunConfig;
    g.number("atom.gamma2_hz", &R::atom, &AtomSection::gamma2_hz);
    g.number("atom.gamma3_hz", &R::atom, &AtomSection::gamma3_hz);
    g.number("atom.gamma4_hz", &R::atom, &AtomSection::gamma4_hz);
    g.number_or_auto("atom.transit_rate", &R::atom, &AtomSection::transit_rate);
    g.number("atom.d21_ea0", &R::atom, &AtomSection::d21_ea0);
    g.number("atom.d32_ea0", &R::atom, &AtomSection::d32_ea0);
    g.number("atom.d43_ea0", &R::atom, &AtomSection::d43_ea0);
    g.number("atom.lambda_p_nm", &R::atom, &AtomSection::lambda_p_nm);
    g.number("atom.lambda_c_nm", &R::atom, &AtomSection::lambda_c_nm);
    g.number("atom.mass_u", &R::atom, &AtomSection::mass_u);
    g.number("atom.abundance", &R::atom, &AtomSection::abundance);
    g.number("atom.rf_transition_hz", &R::atom, &AtomSection::rf_transition_hz);

    g.number("cell.length_m", &R::cell, &CellSection::length_m);
    g.integer("cell.n_layers", &R::cell, &CellSection::n_layers);
    g.number_or_auto("cell.number_density", &R::cell, &CellSection::number_density);
    g.number("cell.perturbation_factor", &R::cell, &CellSection::perturbation_factor);
    g.number("cell.target_transmission", &R::cell, &CellSection::target_transmission);
    g.number("cell.calibration_detuning_hz", &R::cell, &CellSection::calibration_detuning_hz);

    g.number("drive.probe_power_w", &R::drive, &DriveSection::probe_power_w);
    g.number("drive.probe_waist_m", &R::drive, &DriveSection::probe_waist_m);
    g.number("drive.coupling_power_w", &R::drive, &DriveSection::coupling_power_w);
    g.number("drive.coupling_waist_m", &R::drive, &DriveSection::coupling_waist_m);
    g.number("drive.delta_p_hz", &R::drive, &DriveSection::delta_p_hz);
    g.number("drive.delta_c_hz", &R::drive, &DriveSection::delta_c_hz);
    g.number("drive.delta_rf_hz", &R::drive, &DriveSection::delta_rf_hz);
    g.number("drive.e_rf_v_per_m", &R::drive, &DriveSection::e_rf_v_per_m);
    g.number("drive.omega_mod_hz", &R::drive, &DriveSection::omega_mod_hz);
    g.number("drive.sideband_ratio", &R::drive, &DriveSection::sideband_ratio);
    g.number("drive.modulation_depth_rad", &R::drive, &DriveSection::modulation_depth_rad);
    g.boolean("drive.feed_back_sidebands", &R::drive, &DriveSection::feed_back_sidebands);

    g.number("ensemble.temperature_k", &R::ensemble, &EnsembleSection::temperature_k);
    g.enumeration("ensemble.grid", &R::ensemble, &EnsembleSection::grid, kGridNames);
    g.integer("ensemble.n_points", &R::ensemble, &EnsembleSection::n_points);
    g.number("ensemble.span_sigmas", &R::ensemble, &EnsembleSection::span_sigmas);
    g.number("ensemble.core_half_width_m_per_s", &R::ensemble,
             &EnsembleSection::core_half_width_m_per_s);

    g.number("sweep.detuning_min_hz", &R::sweep, &SweepSection::detuning_min_hz);
    g.number("sweep.detuning_max_hz", &R::sweep, &SweepSection::detuning_max_hz);
    g.integer("sweep.detuning_points", &R::sweep, &SweepSection::detuning_points);
    g.number("sweep.e_rf_min_v_per_m", &R::sweep, &SweepSection::e_rf_min_v_per_m);
    g.number("sweep.e_rf_max_v_per_m", &R::sweep, &SweepSection::e_rf_max_v_per_m);
    g.integer("sweep.e_rf_points", &R::sweep, &SweepSection::e_rf_points);
    g.list("sweep.rf_detunings_hz", &R::sweep, &SweepSection::rf_detunings_hz);
    g.number("sweep.conventional_delta_p_hz", &R::sweep, &SweepSection::conventional_delta_p_hz);
    g.number("sweep.modulation_transfer_delta_p_hz", &R::sweep,
             &SweepSection::modulation_transfer_delta_p_hz);
    g.integer("sweep.fit_degree", &R::sweep, &SweepSection::fit_degree);
    g.enumeration("sweep.variable", &R::sweep, &SweepSection::variable, kVariableNames);
    g.enumeration("sweep.protocol", &R::sweep, &SweepSection::protocol, kProtocolNames);

    g.integer("solver.n_max", &R::solver, &SolverSection::n_max);
    g.number("solver.tol", &R::solver, &SolverSection::tol);
    g.enumeration("solver.growth", &R::solver, &SolverSection::growth, kGrowthNames);
    g.integer("solver.n_max_limit", &R::solver, &SolverSection::n_max_limit);

    g.number("detector.eta_v_per_w", &R::detector, &DetectorSection::eta_v_per_w);
    return g;
  }();
  return r;
}

const std::set<std::string, std::less<>> kSections = {"atom",  "cell",   "drive",   "ensemble",
                                                      "sweep", "solver", "detector"};

void apply(RunConfig& config, std::string_view key, std::string_view value) {
  const auto& reg = registry();
  const auto it = reg.index.find(key);
  if (it == reg.index.end()) throw ConfigError("unknown key '" + std::string(key) + "'");
  try {
    reg.entries[it->second].second.set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

// Bound checks. Messages name the key, the value and the violated bound.
struct Checker {
  void positive(std::string_view key, double v) const {
    if (!(v > 0.0)) fail(key, format_double(v), "must be > 0");
  }
  void non_negative(std::string_view key, double v) const {
    if (!(v >= 0.0)) fail(key, format_double(v), "must be >= 0");
  }
  void in_range(std::string_view key, double v, double lo, double hi, bool lo_open, bool hi_open) const {
    const bool ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
    if (!ok) {
      fail(key, format_double(v),
           std::string("is outside ") + (lo_open ? "(" : "[") + format_double(lo) + ", " +
               format_double(hi) + (hi_open ? ")" : "]"));
    }
  }
  void at_least(std::string_view key, int v, int lo) const {
    if (v < lo) fail(key, std::to_string(v), "must be >= " + std::to_string(lo));
  }
  [[noreturn]] static void fail(std::string_view key, const std::string& value, const std::string& why) {
    throw ConfigError(std::string(key) + " = " + value + " " + why);
  }
};

}  // namespace

void RunConfig::validate() const {
  const Checker c;
  c.positive("atom.gamma2_hz", atom.gamma2_hz);
  c.positive("atom.gamma3_hz", atom.gamma3_hz);
  c.positive("atom.gamma4_hz", atom.gamma4_hz);
  if (atom.transit_rate) c.positive("atom.transit_rate", *atom.transit_rate);
  c.positive("atom.d21_ea0", atom.d21_ea0);
  c.positive("atom.d32_ea0", atom.d32_ea0);
  c.positive("atom.d43_ea0", atom.d43_ea0);
  c.positive("atom.lambda_p_nm", atom.lambda_p_nm);
  c.positive("atom.lambda_c_nm", atom.lambda_c_nm);
  c.positive("atom.mass_u", atom.mass_u);
  c.in_range("atom.abundance", atom.abundance, 0.0, 1.0, true, false);
  c.positive("atom.rf_transition_hz", atom.rf_transition_hz);

  c.positive("cell.length_m", cell.length_m);
  c.at_least("cell.n_layers", cell.n_layers, 1);
  if (cell.number_density) c.non_negative("cell.number_density", *cell.number_density);
  c.in_range("cell.perturbation_factor", cell.perturbation_factor, 0.0, 1.0, true, false);
  c.in_range("cell.target_transmission", cell.target_transmission, 0.0, 1.0, true, false);

  c.positive("drive.probe_power_w", drive.probe_power_w);
  c.positive("drive.probe_waist_m", drive.probe_waist_m);
  c.non_negative("drive.coupling_power_w", drive.coupling_power_w);
  c.positive("drive.coupling_waist_m", drive.coupling_waist_m);
  c.non_negative("drive.e_rf_v_per_m", drive.e_rf_v_per_m);
  c.positive("drive.omega_mod_hz", drive.omega_mod_hz);
  c.non_negative("drive.sideband_ratio", drive.sideband_ratio);
  c.non_negative("drive.modulation_depth_rad", drive.modulation_depth_rad);

  c.positive("ensemble.temperature_k", ensemble.temperature_k);
  c.at_least("ensemble.n_points", ensemble.n_points, 1);
  if (ensemble.n_points != 1 && (ensemble.n_points < 3 || ensemble.n_points % 2 == 0)) {
    Checker::fail("ensemble.n_points", std::to_string(ensemble.n_points),
                  "must be 1 (atoms at rest) or odd and >= 3");
  }
  c.positive("ensemble.span_sigmas", ensemble.span_sigmas);
  c.positive("ensemble.core_half_width_m_per_s", ensemble.core_half_width_m_per_s);

  if (!(sweep.detuning_max_hz > sweep.detuning_min_hz)) {
    Checker::fail("sweep.detuning_max_hz", format_double(sweep.detuning_max_hz),
                  "must be > sweep.detuning_min_hz");
  }
  c.at_least("sweep.detuning_points", sweep.detuning_points, 2);
  c.non_negative("sweep.e_rf_min_v_per_m", sweep.e_rf_min_v_per_m);
  if (!(sweep.e_rf_max_v_per_m > sweep.e_rf_min_v_per_m)) {
    Checker::fail("sweep.e_rf_max_v_per_m", format_double(sweep.e_rf_max_v_per_m),
                  "must be > sweep.e_rf_min_v_per_m");
  }
  c.at_least("sweep.e_rf_points", sweep.e_rf_points, 2);
  if (sweep.rf_detunings_hz.empty()) {
    Checker::fail("sweep.rf_detunings_hz", "(empty)", "needs at least one value");
  }
  c.at_least("sweep.fit_degree", sweep.fit_degree, 1);
  if (sweep.e_rf_points < sweep.fit_degree + 2) {
    Checker::fail("sweep.e_rf_points", std::to_string(sweep.e_rf_points),
                  "must be >= sweep.fit_degree + 2");
  }

  c.at_least("solver.n_max", solver.n_max, 1);
  c.positive("solver.tol", solver.tol);
  if (solver.n_max_limit < solver.n_max) {
    Checker::fail("solver.n_max_limit", std::to_string(solver.n_max_limit), "must be >= solver.n_max");
  }

  c.positive("detector.eta_v_per_w", detector.eta_v_per_w);
}

RunConfig parse_config(std::string_view text, std::string_view source) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };

  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "malformed section header");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!kSections.contains(name)) throw ConfigError(where() + "unknown section [" + name + "]");
      section = name;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where() + "missing key");

    std::string full;
    if (const auto dot = key.find('.'); dot != std::string_view::npos &&
                                        kSections.contains(key.substr(0, dot))) {
      full = std::string(key);
    } else if (!section.empty()) {
      full = section + "." + std::string(key);
    } else {
      throw ConfigError(where() + "key '" + std::string(key) + "' outside any section");
    }
    if (!seen.insert(full).second) throw ConfigError(where() + "duplicate key '" + full + "'");
    try {
      apply(config, full, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what());
    }
  }
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("cannot read config file '" + path + "'");
  return parse_config(buffer.str(), path);
}

std::string echo_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& [key, entry] : registry().entries) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      out += (section.empty() ? "[" : "\n[") + s + "]\n";
      section = s;
    }
    out += key.substr(dot + 1) + " = " + entry.get(config) + "\n";
  }
  return out;
}

void set_config_value(RunConfig& config, std::string_view dotted_key, std::string_view value) {
  RunConfig updated = config;
  apply(updated, trim(dotted_key), value);
  updated.validate();
  config = std::move(updated);
}

AtomModel atom_from_config(const RunConfig& config) {
  const AtomSection& a = config.atom;
  AtomModel atom;
  atom.gamma2 = kTwoPi * a.gamma2_hz;
  atom.gamma3 = kTwoPi * a.gamma3_hz;
  atom.gamma4 = kTwoPi * a.gamma4_hz;
  atom.mass = a.mass_u * constants::kAtomicMassUnit;
  atom.gamma_transit = a.transit_rate ? *a.transit_rate
                                      : transit_rate(config.drive.probe_waist_m,
                                                     config.ensemble.temperature_k, atom.mass);
  atom.d21 = a.d21_ea0 * constants::kAtomicDipole;
  atom.d32 = a.d32_ea0 * constants::kAtomicDipole;
  atom.d43 = a.d43_ea0 * constants::kAtomicDipole;
  atom.lambda_p = a.lambda_p_nm * 1e-9;
  atom.lambda_c = a.lambda_c_nm * 1e-9;
  atom.abundance = a.abundance;
  atom.validate();
  return atom;
}

VelocityGrid grid_from_config(const RunConfig& config) {
  const EnsembleSection& e = config.ensemble;
  if (e.n_points == 1) return VelocityGrid::stationary();
  GridSpec spec;
  spec.kind = e.grid;
  spec.n_points = e.n_points;
  spec.span_sigmas = e.span_sigmas;
  spec.core_half_width = e.core_half_width_m_per_s;
  return make_grid(ThermalEnsemble{e.temperature_k, config.atom.mass_u * constants::kAtomicMassUnit},
                   spec);
}

SimulationContext context_from_config(const RunConfig& config) {
  config.validate();
  SimulationContext ctx;
  ctx.atom = atom_from_config(config);
  ctx.cell.length = config.cell.length_m;
  ctx.cell.n_layers = config.cell.n_layers;
  ctx.cell.number_density = config.cell.number_density.value_or(0.0);
  ctx.cell.perturbation_factor = config.cell.perturbation_factor;
  ctx.beams.probe_power = config.drive.probe_power_w;
  ctx.beams.probe_waist_diameter = config.drive.probe_waist_m;
  ctx.beams.coupling_power = config.drive.coupling_power_w;
  ctx.beams.coupling_waist_diameter = config.drive.coupling_waist_m;
  ctx.grid = grid_from_config(config);
  ctx.delta_p = kTwoPi * config.drive.delta_p_hz;
  ctx.delta_c = kTwoPi * config.drive.delta_c_hz;
  ctx.delta_rf = kTwoPi * config.drive.delta_rf_hz;
  ctx.e_rf_applied = config.drive.e_rf_v_per_m;
  ctx.omega_mod = kTwoPi * config.drive.omega_mod_hz;
  ctx.sideband_ratio = config.drive.sideband_ratio;
  ctx.feed_back_sidebands = config.drive.feed_back_sidebands;
  ctx.floquet.n_max = config.solver.n_max;
  ctx.floquet.tol = config.solver.tol;
  ctx.floquet.growth = config.solver.growth;
  ctx.floquet.n_max_limit = config.solver.n_max_limit;
  return ctx;
}

}  // namespace rydsim
