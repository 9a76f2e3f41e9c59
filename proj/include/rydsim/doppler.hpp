#pragma once

#include <array>
#include <functional>
#include <vector>

#include "rydsim/floquet.hpp"

namespace rydsim {

struct ThermalEnsemble {
  double temperature = 293.0;  ///< K
  double mass = 0.0;           ///< kg

  /// rms 1-D speed sqrt(kB T / m).
  double sigma_v() const;
};

enum class GridKind {
  /// Trapezoid in s with v = core_half_width * sinh(s): spacing about
  /// core_half_width * ds near rest, growing in proportion to |v| outside.
  kCoreRefined,
  kGaussHermite,
  kTrapezoid,
};

struct GridSpec {
  GridKind kind = GridKind::kCoreRefined;
  int n_points = 401;
  double span_sigmas = 4.5;
  /// kCoreRefined only.
  double core_half_width = 60.0;  ///< m/s
};

/// Velocity quadrature for the 1-D Maxwell-Boltzmann distribution.
/// Weights include the thermal density and sum to 1.
struct VelocityGrid {
  std::vector<double> nodes;    ///< m/s
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  /// One velocity class at rest, weight 1 (the T -> 0 limit).
  static VelocityGrid stationary();
};

/// Throws DomainError for even or < 3 point counts and non-positive spans.
/// Gauss-Hermite nodes outside +/- span_sigmas are dropped and the remaining
/// weights renormalised.
VelocityGrid make_grid(const ThermalEnsemble& ensemble, const GridSpec& spec);

using VelocitySolve = std::function<HarmonicDensityMatrix(double velocity)>;

/// sum_k w_k rho(v_k), full matrices, harmonics padded to the largest
/// truncation seen. Summation runs in node order whatever the thread count.
/// Solver failures are rethrown tagged with the failing node.
HarmonicDensityMatrix doppler_average_full(const VelocitySolve& solve, const VelocityGrid& grid,
                                           unsigned threads = 1);

/// Averaged probe coherence harmonics rho_21^(n), n = -1, 0, +1.
std::array<cd, 3> doppler_average(const VelocitySolve& solve, const VelocityGrid& grid,
                                  unsigned threads = 1);

}  // namespace rydsim
