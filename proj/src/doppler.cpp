#include "rydsim/doppler.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "rydsim/constants.hpp"
#include "rydsim/errors.hpp"
#include "rydsim/parallel.hpp"

namespace rydsim {

namespace {

double gaussian(double v, double sigma) { return std::exp(-0.5 * (v / sigma) * (v / sigma)); }

void normalise(VelocityGrid& grid) {
  double total = 0.0;
  for (double w : grid.weights) total += w;
  for (double& w : grid.weights) w /= total;
}

/// Physicists' Gauss-Hermite rule (weight exp(-x^2)) by Golub-Welsch.
VelocityGrid gauss_hermite(const ThermalEnsemble& ensemble, const GridSpec& spec) {
  const int n = spec.n_points;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

  const double sigma = ensemble.sigma_v();
  const double limit = spec.span_sigmas * sigma;
  VelocityGrid grid;
  for (int i = 0; i < n; ++i) {
    const double v = std::sqrt(2.0) * sigma * eig.eigenvalues()(i);
    if (std::abs(v) > limit * (1.0 + 1e-12)) continue;
    const double first = eig.eigenvectors()(0, i);
    grid.nodes.push_back(v);
    grid.weights.push_back(first * first);
  }
  // Symmetrise the rounding noise of the eigen solver.
  const std::size_t m = grid.nodes.size();
  for (std::size_t i = 0; i < m / 2; ++i) {
    const double v = 0.5 * (grid.nodes[m - 1 - i] - grid.nodes[i]);
    const double w = 0.5 * (grid.weights[i] + grid.weights[m - 1 - i]);
    grid.nodes[i] = -v;
    grid.nodes[m - 1 - i] = v;
    grid.weights[i] = grid.weights[m - 1 - i] = w;
  }
  if (m % 2 == 1) grid.nodes[m / 2] = 0.0;
  normalise(grid);
  return grid;
}

/// Trapezoid rule in s on v = g(s), weights p(g(s)) g'(s) ds.
template <class Map, class Derivative>
VelocityGrid mapped_trapezoid(const ThermalEnsemble& ensemble, int n, double s_max, Map map,
                              Derivative derivative) {
  const double sigma = ensemble.sigma_v();
  const double ds = 2.0 * s_max / (n - 1);
  const int half = (n - 1) / 2;
  VelocityGrid grid;
  grid.nodes.resize(static_cast<std::size_t>(n));
  grid.weights.resize(static_cast<std::size_t>(n));
  for (int k = -half; k <= half; ++k) {
    const double s = k * ds;
    const double v = k == 0 ? 0.0 : map(s);
    double w = gaussian(v, sigma) * derivative(s) * ds;
    if (std::abs(k) == half) w *= 0.5;
    grid.nodes[static_cast<std::size_t>(k + half)] = v;
    grid.weights[static_cast<std::size_t>(k + half)] = w;
  }
  // Mirror so that the grid is exactly symmetric.
  for (int k = 1; k <= half; ++k) {
    grid.nodes[static_cast<std::size_t>(half - k)] = -grid.nodes[static_cast<std::size_t>(half + k)];
    grid.weights[static_cast<std::size_t>(half - k)] = grid.weights[static_cast<std::size_t>(half + k)];
  }
  normalise(grid);
  return grid;
}

}  // namespace

double ThermalEnsemble::sigma_v() const {
  if (!(temperature > 0.0) || !(mass > 0.0)) {
    throw DomainError("ThermalEnsemble: temperature and mass must be > 0");
  }
  return std::sqrt(constants::kBoltzmann * temperature / mass);
}

VelocityGrid VelocityGrid::stationary() {
  VelocityGrid grid;
  grid.nodes = {0.0};
  grid.weights = {1.0};
  return grid;
}

VelocityGrid make_grid(const ThermalEnsemble& ensemble, const GridSpec& spec) {
  if (spec.n_points < 3 || spec.n_points % 2 == 0) {
    throw DomainError("make_grid: n_points must be odd and >= 3, got " +
                      std::to_string(spec.n_points));
  }
  if (!(spec.span_sigmas > 0.0)) throw DomainError("make_grid: span_sigmas must be > 0");

  const double limit = spec.span_sigmas * ensemble.sigma_v();
  switch (spec.kind) {
    case GridKind::kGaussHermite:
      return gauss_hermite(ensemble, spec);
    case GridKind::kTrapezoid:
      return mapped_trapezoid(
          ensemble, spec.n_points, limit, [](double s) { return s; }, [](double) { return 1.0; });
    case GridKind::kCoreRefined: {
      if (!(spec.core_half_width > 0.0)) {
        throw DomainError("make_grid: core_half_width must be > 0");
      }
      // v = c sinh(s): spacing ~ c ds near rest, ~ |v| ds in the wings. The
      // integrand stays analytic in s, so the trapezoid rule keeps its
      // geometric convergence.
      const double c = spec.core_half_width;
      return mapped_trapezoid(
          ensemble, spec.n_points, std::asinh(limit / c),
          [c](double s) { return c * std::sinh(s); }, [c](double s) { return c * std::cosh(s); });
    }
  }
  throw DomainError("make_grid: unknown grid kind");
}

HarmonicDensityMatrix doppler_average_full(const VelocitySolve& solve, const VelocityGrid& grid,
                                           unsigned threads) {
  std::vector<HarmonicDensityMatrix> results(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    try {
      results[k] = solve(grid.nodes[k]);
    } catch (const SolverError& e) {
      throw SolverError(e.kind(), "velocity node " + std::to_string(k) +
                                      " (v = " + std::to_string(grid.nodes[k]) +
                                      " m/s): " + e.what());
    }
  });

  int n_max = 0;
  for (const auto& r : results) n_max = std::max(n_max, r.n_max());
  HarmonicDensityMatrix avg(n_max);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& r = results[k];
    for (int n = -r.n_max(); n <= r.n_max(); ++n) avg[n] += grid.weights[k] * r[n];
  }
  return avg;
}

std::array<cd, 3> doppler_average(const VelocitySolve& solve, const VelocityGrid& grid,
                                  unsigned threads) {
  std::vector<std::array<cd, 3>> results(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    try {
      const HarmonicDensityMatrix rho = solve(grid.nodes[k]);
      results[k] = {rho.probe_coherence(-1), rho.probe_coherence(0), rho.probe_coherence(1)};
    } catch (const SolverError& e) {
      throw SolverError(e.kind(), "velocity node " + std::to_string(k) +
                                      " (v = " + std::to_string(grid.nodes[k]) +
                                      " m/s): " + e.what());
    }
  });
  std::array<cd, 3> avg{};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (int i = 0; i < 3; ++i) avg[static_cast<std::size_t>(i)] += grid.weights[k] * results[k][static_cast<std::size_t>(i)];
  }
  return avg;
}

}  // namespace rydsim
