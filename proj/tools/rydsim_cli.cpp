// Command-line front end. Talks to the simulator only through the C API.
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rydsim/rydsim.h"

namespace {

constexpr int kUsageError = 1;

int report(rydsim_status status) {
  if (status != RYDSIM_OK) std::fprintf(stderr, "rydsim: error: %s\n", rydsim_last_error());
  return static_cast<int>(status);
}

// Loads --config (or the defaults) and applies --set key=value overrides.
rydsim_status load(const std::string& path, const std::vector<std::string>& overrides,
                   rydsim_config** out) {
  rydsim_status status = path.empty() ? rydsim_config_default(out) : rydsim_config_load(path.c_str(), out);
  if (status != RYDSIM_OK) return status;
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    const std::string key = item.substr(0, eq);
    const std::string value = eq == std::string::npos ? "" : item.substr(eq + 1);
    status = rydsim_config_set(*out, key.c_str(), value.c_str());
    if (status != RYDSIM_OK) {
      rydsim_config_free(*out);
      *out = nullptr;
      return status;
    }
  }
  return RYDSIM_OK;
}

unsigned default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rydberg EIT RF receiver simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rydsim_version()));

  std::string config_path;
  std::vector<std::string> overrides;
  unsigned threads = default_threads();

  auto* simulate = app.add_subcommand("simulate", "Run a figure preset or a custom sweep");
  std::string preset;
  std::string out_dir;
  bool svg = false;
  simulate->add_option("preset", preset, "fig3-conventional | fig3-rma | fig4 | fig5 | custom")
      ->required();
  simulate->add_option("--config", config_path, "Config file (defaults if omitted)");
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_flag("--svg", svg, "Also write an SVG plot");
  simulate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--set", overrides, "Override a config key, e.g. --set cell.n_layers=50");

  auto* calibrate = app.add_subcommand("calibrate-density",
                                       "Density giving the coupling-off transmission target");
  double target = 0.37;
  calibrate->add_option("--target", target, "Carrier transmission with the coupling off");
  calibrate->add_option("--config", config_path, "Config file (defaults if omitted)");
  calibrate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  calibrate->add_option("--set", overrides, "Override a config key");

  auto* slope = app.add_subcommand("slope", "Polynomial slope of RF-field traces");
  std::string trace_path;
  int degree = 7;
  slope->add_option("--in", trace_path, "Trace CSV over the RF field")->required();
  slope->add_option("--degree", degree, "Polynomial degree")->check(CLI::PositiveNumber);

  auto* sens = app.add_subcommand("sensitivity", "Shot-noise sensitivity from a slope");
  double slope_value = 0.0, power = 0.0, eta = 0.0;
  sens->add_option("--slope", slope_value, "Signal slope per V/m")->required();
  sens->add_option("--power", power, "Transmitted probe power (W)")->required();
  sens->add_option("--eta", eta, "Detector sensitivity (V/W)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (simulate->parsed()) {
    rydsim_config* config = nullptr;
    if (const auto s = load(config_path, overrides, &config); s != RYDSIM_OK) return report(s);
    rydsim_result* result = nullptr;
    rydsim_status status = rydsim_run_experiment(config, preset.c_str(), threads, &result);
    if (status == RYDSIM_OK) status = rydsim_result_write(result, out_dir.c_str(), svg ? 1 : 0);
    if (status == RYDSIM_OK) {
      std::fprintf(stderr, "rydsim: %s done in %.1f s, density %.6g m^-3, output in %s\n",
                   preset.c_str(), rydsim_result_wall_time(result),
                   rydsim_result_number_density(result), out_dir.c_str());
    }
    rydsim_result_free(result);
    rydsim_config_free(config);
    return report(status);
  }

  if (calibrate->parsed()) {
    rydsim_config* config = nullptr;
    if (const auto s = load(config_path, overrides, &config); s != RYDSIM_OK) return report(s);
    double density = 0.0;
    const rydsim_status status = rydsim_calibrate_density(config, target, threads, &density);
    rydsim_config_free(config);
    if (status == RYDSIM_OK) std::printf("%.17g\n", density);
    return report(status);
  }

  if (slope->parsed()) {
    char* csv = nullptr;
    const rydsim_status status = rydsim_slopes_from_csv(trace_path.c_str(), degree, &csv);
    if (status == RYDSIM_OK) std::fputs(csv, stdout);
    rydsim_string_free(csv);
    return report(status);
  }

  double value = 0.0;
  const rydsim_status status = rydsim_sensitivity(slope_value, power, eta, &value);
  if (status == RYDSIM_OK) std::printf("%.17g\n", value);
  return report(status);
}
