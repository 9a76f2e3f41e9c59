#include <doctest.h>

#include <cmath>
#include <string>

#include "rydsim/config.hpp"
#include "rydsim/errors.hpp"

using namespace rydsim;

namespace {

std::string error_of(std::string_view text) {
  try {
    parse_config(text, "run.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, std::string_view part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_SUITE("sim-cli") {

TEST_CASE("empty config gives the defaults") {
  const RunConfig c = parse_config("");
  const RunConfig d;
  CHECK(echo_config(c) == echo_config(d));
  CHECK(c.cell.n_layers == 100);
  CHECK(c.ensemble.n_points == 201);
  CHECK(c.ensemble.grid == GridKind::kCoreRefined);
  CHECK(c.drive.e_rf_v_per_m == 0.5014);
  CHECK(c.drive.sideband_ratio == 0.6);
  CHECK_FALSE(c.cell.number_density.has_value());
  CHECK(c.solver.growth == TruncationGrowth::kTailCheck);
  CHECK(parse_config("  # only a comment\n\n").cell.n_layers == 100);
}

TEST_CASE("sections, dotted keys and comments") {
  const RunConfig c = parse_config(
      "[cell]\n"
      "n_layers = 200   # finer\n"
      "number_density = 4.7e15\n"
      "drive.e_rf_v_per_m = 0.3\n"
      "[ensemble]\n"
      "grid = gauss-hermite\n"
      "[sweep]\n"
      "rf_detunings_hz = 0, 1e6, -2.5e6\n"
      "protocol = conventional\n"
      "[drive]\n"
      "feed_back_sidebands = false\n");
  CHECK(c.cell.n_layers == 200);
  CHECK(*c.cell.number_density == 4.7e15);
  CHECK(c.drive.e_rf_v_per_m == 0.3);
  CHECK(c.ensemble.grid == GridKind::kGaussHermite);
  CHECK(c.sweep.rf_detunings_hz == std::vector<double>{0.0, 1e6, -2.5e6});
  CHECK(c.sweep.protocol == Protocol::kConventional);
  CHECK_FALSE(c.drive.feed_back_sidebands);
  CHECK(c.atom.d43_ea0 == RunConfig{}.atom.d43_ea0);
}

TEST_CASE("out-of-range values name the key and the bound") {
  const std::string e = error_of("[cell]\nperturbation_factor = 1.5\n");
  CHECK(contains(e, "cell.perturbation_factor"));
  CHECK(contains(e, "(0, 1]"));
  CHECK(contains(error_of("[cell]\nn_layers = 0\n"), ">= 1"));
  CHECK(contains(error_of("[ensemble]\nn_points = 200\n"), "odd"));
  CHECK(contains(error_of("[sweep]\nfit_degree = 7\ne_rf_points = 8\n"), "fit_degree + 2"));
  CHECK(contains(error_of("[sweep]\ndetuning_min_hz = 5\ndetuning_max_hz = 5\n"), "sweep.detuning_max_hz"));
  CHECK(contains(error_of("[drive]\nprobe_power_w = 0\n"), "> 0"));
}

TEST_CASE("syntax errors carry the line number") {
  CHECK(contains(error_of("[cell]\n\nbogus = 1\n"), "run.cfg:3"));
  CHECK(contains(error_of("[cell]\n\nbogus = 1\n"), "unknown key 'cell.bogus'"));
  CHECK(contains(error_of("# x\n[nope]\n"), "run.cfg:2: unknown section [nope]"));
  CHECK(contains(error_of("[cell]\nn_layers = 3\nn_layers = 4\n"), "run.cfg:3: duplicate key"));
  CHECK(contains(error_of("[cell]\nn_layers = 2.5\n"), "run.cfg:2"));
  CHECK(contains(error_of("[cell]\nlength_m = abc\n"), "expected a finite number"));
  CHECK(contains(error_of("[cell]\nlength_m = nan\n"), "run.cfg:2"));
  CHECK(contains(error_of("[cell]\nlength_m\n"), "expected 'key = value'"));
  CHECK(contains(error_of("n_layers = 3\n"), "outside any section"));
  CHECK(contains(error_of("[cell\n"), "malformed section header"));
  CHECK(contains(error_of("[ensemble]\ngrid = spline\n"), "core-refined"));
  CHECK(contains(error_of("[drive]\nfeed_back_sidebands = yes\n"), "true or false"));
}

TEST_CASE("echo round-trips exactly") {
  RunConfig c;
  c.cell.number_density = 1.0 / 3.0 * 1e16;
  c.drive.delta_p_hz = -2.123456789012345e6;
  c.atom.transit_rate = 12345.678;
  c.ensemble.grid = GridKind::kTrapezoid;
  c.sweep.rf_detunings_hz = {0.1, 0.2, 0.30000000000000004};
  c.solver.growth = TruncationGrowth::kDouble;
  const std::string echo = echo_config(c);
  const RunConfig back = parse_config(echo);
  CHECK(echo_config(back) == echo);
  CHECK(*back.cell.number_density == *c.cell.number_density);
  CHECK(back.drive.delta_p_hz == c.drive.delta_p_hz);
  CHECK(back.sweep.rf_detunings_hz == c.sweep.rf_detunings_hz);
  CHECK(contains(echo_config(RunConfig{}), "number_density = auto"));
}

TEST_CASE("set_config_value validates and leaves the config untouched on failure") {
  RunConfig c;
  set_config_value(c, "cell.n_layers", "50");
  CHECK(c.cell.n_layers == 50);
  set_config_value(c, " atom.transit_rate ", "auto");
  CHECK_FALSE(c.atom.transit_rate.has_value());
  CHECK_THROWS_AS(set_config_value(c, "cell.perturbation_factor", "0"), ConfigError);
  CHECK(c.cell.perturbation_factor == 0.52);
  CHECK_THROWS_AS(set_config_value(c, "cell.nope", "1"), ConfigError);
  CHECK_THROWS_AS(set_config_value(c, "n_layers", "1"), ConfigError);
}

TEST_CASE("load_config reports unreadable files") {
  CHECK_THROWS_AS(load_config("/nonexistent/dir/run.cfg"), IoError);
}

TEST_CASE("config maps onto the model in SI units") {
  RunConfig c;
  c.cell.number_density = 2e15;
  c.drive.delta_p_hz = 1e6;
  const SimulationContext ctx = context_from_config(c);
  CHECK(ctx.atom.gamma2 == doctest::Approx(2 * M_PI * 6.0666e6));
  CHECK(ctx.delta_p == doctest::Approx(2 * M_PI * 1e6));
  CHECK(ctx.omega_mod == doctest::Approx(2 * M_PI * 3e6));
  CHECK(ctx.cell.number_density == 2e15);
  CHECK(ctx.grid.size() == 201);
  CHECK(ctx.atom.d43 == doctest::Approx(1400 * constants::kAtomicDipole));
  CHECK(ctx.atom.gamma_transit == doctest::Approx(transit_rate(0.3e-3, 293.0, ctx.atom.mass)));
  c.ensemble.n_points = 1;
  CHECK(grid_from_config(c).size() == 1);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(4.7e15) == "4.7e+15");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_double(x)) == x);
}

}  // TEST_SUITE
