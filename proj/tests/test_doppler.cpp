#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rydsim/doppler.hpp"
#include "rydsim/errors.hpp"
#include "rydsim/signals.hpp"

using namespace rydsim;
using fixtures::kTwoPi;

namespace {

ThermalEnsemble room() { return {293.0, AtomModel::rubidium85().mass}; }

GridSpec spec(GridKind kind, int n, double core = 10.0) {
  GridSpec s;
  s.kind = kind;
  s.n_points = n;
  s.core_half_width = core;
  return s;
}

VelocitySolve solver(DriveConfig drive) {
  const AtomModel atom = AtomModel::rubidium85();
  const Superop diss = build_dissipator(atom);
  return [=](double v) {
    FloquetConfig cfg;
    cfg.growth = TruncationGrowth::kTailCheck;
    return solve_continued_fraction(assemble_blocks(build_hamiltonian(drive, v, atom), diss),
                                    drive.omega_mod > 0 ? drive.omega_mod : 1.0, cfg);
  };
}

double relative(cd a, cd b) { return std::abs(a - b) / std::abs(b); }

// -Im rho_21 (absorption) over the probe detuning, for the transparency window.
std::vector<double> absorption(const DriveConfig& base, const VelocityGrid& grid,
                               const std::vector<double>& dps) {
  std::vector<double> out;
  for (double dp : dps) {
    DriveConfig d = base;
    d.delta_p = dp;
    out.push_back(doppler_average(solver(d), grid)[1].imag());
  }
  return out;
}

}  // namespace

TEST_SUITE("doppler-ensemble") {

TEST_CASE("thermal speed at room temperature") {
  CHECK(ThermalEnsemble{293.0, 1.411e-25}.sigma_v() == doctest::Approx(169.0).epsilon(0.005));
  const ThermalEnsemble e = room();
  CHECK(e.sigma_v() * e.sigma_v() * e.mass ==
        doctest::Approx(constants::kBoltzmann * 293.0).epsilon(1e-12));
  CHECK_THROWS_AS((ThermalEnsemble{0.0, 1e-25}.sigma_v()), DomainError);
}

TEST_CASE("grids are normalised and symmetric") {
  for (auto kind : {GridKind::kGaussHermite, GridKind::kTrapezoid, GridKind::kCoreRefined}) {
    for (int n : {3, 41, 201}) {
      const VelocityGrid g = make_grid(room(), spec(kind, n));
      const double total = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
      CHECK(std::abs(total - 1.0) <= 1e-10);
      for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(g.nodes[i] == -g.nodes[g.size() - 1 - i]);
        CHECK(g.weights[i] == g.weights[g.size() - 1 - i]);
        CHECK(g.weights[i] >= 0.0);
      }
      CHECK(std::is_sorted(g.nodes.begin(), g.nodes.end()));
      CHECK(g.nodes[g.size() / 2] == 0.0);
      CHECK(std::abs(g.nodes.back()) <= 4.5 * room().sigma_v() * (1 + 1e-12));
    }
  }
}

TEST_CASE("grids reproduce the thermal second moment") {
  const double sigma = room().sigma_v();
  for (auto kind : {GridKind::kGaussHermite, GridKind::kTrapezoid, GridKind::kCoreRefined}) {
    const VelocityGrid g = make_grid(room(), spec(kind, 201));
    double m2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) m2 += g.weights[i] * g.nodes[i] * g.nodes[i];
    // +-4.5 sigma truncation removes about 1e-4 of the second moment
    CHECK(m2 / (sigma * sigma) == doctest::Approx(1.0).epsilon(2e-3));
  }
}

TEST_CASE("degenerate grid requests are rejected") {
  CHECK_THROWS_AS(make_grid(room(), spec(GridKind::kGaussHermite, 1)), DomainError);
  CHECK_THROWS_AS(make_grid(room(), spec(GridKind::kTrapezoid, 4)), DomainError);
  GridSpec bad = spec(GridKind::kCoreRefined, 11);
  bad.span_sigmas = 0.0;
  CHECK_THROWS_AS(make_grid(room(), bad), DomainError);
  bad = spec(GridKind::kCoreRefined, 11, 0.0);
  CHECK_THROWS_AS(make_grid(room(), bad), DomainError);
}

TEST_CASE("average of a constant and of a single class") {
  const VelocityGrid g = make_grid(room(), spec(GridKind::kCoreRefined, 101));
  HarmonicDensityMatrix constant(1);
  constant[0](0, 1) = cd{0.25, -0.5};
  constant[1](0, 1) = cd{1e-3, 2e-3};
  const auto avg = doppler_average([&](double) { return constant; }, g);
  CHECK(std::abs(avg[1] - constant.probe_coherence(0)) <= 1e-14);
  CHECK(std::abs(avg[2] - constant.probe_coherence(1)) <= 1e-14);

  const DriveConfig d = fixtures::nominal().drive;
  const auto at_rest = solver(d)(0.0);
  const auto single = doppler_average(solver(d), VelocityGrid::stationary());
  for (int n = -1; n <= 1; ++n) {
    CHECK(single[static_cast<std::size_t>(n + 1)] == at_rest.probe_coherence(n));
  }
}

TEST_CASE("average is bit-identical for any thread count") {
  const VelocityGrid g = make_grid(room(), spec(GridKind::kCoreRefined, 61));
  const VelocitySolve solve = solver(fixtures::nominal().drive);
  const auto one = doppler_average_full(solve, g, 1);
  for (unsigned threads : {2u, 3u, 8u}) {
    const auto many = doppler_average_full(solve, g, threads);
    REQUIRE(many.n_max() == one.n_max());
    for (int n = -one.n_max(); n <= one.n_max(); ++n) CHECK((many[n] - one[n]).isZero(0.0));
  }
}

TEST_CASE("averaged harmonics keep the adjoint pairing") {
  const VelocityGrid g = make_grid(room(), spec(GridKind::kCoreRefined, 61));
  const auto avg = doppler_average_full(solver(fixtures::nominal().drive), g);
  CHECK(avg.pairing_residual() <= 1e-12);
}

TEST_CASE("solver failures are tagged with the node") {
  const VelocityGrid g = make_grid(room(), spec(GridKind::kTrapezoid, 5));
  try {
    doppler_average(
        [](double v) -> HarmonicDensityMatrix {
          if (v > 0.0) throw SolverError(SolverError::Kind::kSingular, "boom");
          return HarmonicDensityMatrix(1);
        },
        g, 2);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("velocity node 3") != std::string::npos);
    CHECK(e.kind() == SolverError::Kind::kSingular);
  }
}

TEST_CASE("refining the default grid moves averaged coherences by at most 1e-6") {
  DriveConfig d = fixtures::nominal().drive;
  const VelocityGrid base = make_grid(room(), spec(GridKind::kCoreRefined, 201));
  const VelocityGrid fine = make_grid(room(), spec(GridKind::kCoreRefined, 403));
  for (double dp_mhz : {0.0, 2.0}) {
    d.delta_p = kTwoPi * dp_mhz * 1e6;
    const auto a = doppler_average(solver(d), base);
    const auto b = doppler_average(solver(d), fine);
    for (int i = 0; i < 3; ++i) CHECK(relative(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)]) <= 1e-6);
  }
}

TEST_CASE("fine sinh grid matches adaptive quadrature") {
  const DriveConfig d = fixtures::nominal().drive;
  const VelocitySolve solve = solver(d);
  const auto grid = doppler_average(solve, make_grid(room(), spec(GridKind::kCoreRefined, 1601, 5.0)));
  for (int n = -1; n <= 1; ++n) {
    const cd reference = oracle::thermal_average(
        [&](double v) { return solve(v).probe_coherence(n); }, room().sigma_v(), 4.5, 40.0);
    CHECK(relative(grid[static_cast<std::size_t>(n + 1)], reference) <= 1e-6);
  }
}

TEST_CASE("Gauss-Hermite grid integrates smooth functions") {
  const double sigma = room().sigma_v();
  const VelocityGrid g = make_grid(room(), spec(GridKind::kGaussHermite, 61));
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += g.weights[i] * std::cos(g.nodes[i] / sigma);
  CHECK(sum == doctest::Approx(std::exp(-0.5)).epsilon(1e-4));
}

TEST_CASE("Doppler averaging widens the transparency window") {
  DriveConfig d;
  d.probe = {{0, kTwoPi * 0.5e6}};
  d.coupling = {{0, kTwoPi * 4.4e6}};
  std::vector<double> dps;
  for (int i = 0; i <= 240; ++i) dps.push_back(kTwoPi * 1e6 * (-12.0 + 0.1 * i));

  auto window = [&](const VelocityGrid& g) {
    const std::vector<double> y = absorption(d, g, dps);
    for (const Extremum& e : spectrum_features(dps, y)) {
      if (e.kind == ExtremumKind::kMinimum && std::abs(e.position) < kTwoPi * 0.2e6) return e.width;
    }
    return 0.0;
  };
  const double at_rest = window(VelocityGrid::stationary());
  const double thermal = window(make_grid(room(), spec(GridKind::kCoreRefined, 201)));
  REQUIRE(at_rest > 0.0);
  REQUIRE(thermal > 0.0);
  CHECK(thermal > at_rest);
}

}  // TEST_SUITE
