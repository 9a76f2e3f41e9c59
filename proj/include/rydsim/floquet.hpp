#pragma once

#include <map>
#include <vector>

#include "rydsim/atom_model.hpp"
#include "rydsim/linalg.hpp"

namespace rydsim {

/// Periodic steady state rho(t) = sum_n rho^(n) exp(-i n omega_mod t),
/// stored for n in [-n_max, n_max].
class HarmonicDensityMatrix {
 public:
  HarmonicDensityMatrix() : HarmonicDensityMatrix(0) {}
  explicit HarmonicDensityMatrix(int n_max)
      : n_max_(n_max), blocks_(static_cast<std::size_t>(2 * n_max + 1), Mat4::Zero()) {}

  int n_max() const { return n_max_; }

  /// Zero for |n| > n_max.
  Mat4 at(int n) const {
    if (n < -n_max_ || n > n_max_) return Mat4::Zero();
    return blocks_[static_cast<std::size_t>(n + n_max_)];
  }
  Mat4& operator[](int n) { return blocks_[static_cast<std::size_t>(n + n_max_)]; }
  const Mat4& operator[](int n) const { return blocks_[static_cast<std::size_t>(n + n_max_)]; }

  /// Probe coherence rho_21 of harmonic n: the matrix element (0, 1), the
  /// component driven by the probe amplitude in our field convention.
  cd probe_coherence(int n) const { return n < -n_max_ || n > n_max_ ? cd{} : (*this)[n](0, 1); }

  /// Copy with a different truncation, zero-padding or dropping harmonics.
  HarmonicDensityMatrix resized(int n_max) const;

  /// max_n || rho^(-n) - rho^(n)^dagger ||_max
  double pairing_residual() const;

 private:
  int n_max_;
  std::vector<Mat4> blocks_;
};

/// kDouble: re-solve at 2 n_max until rho^(+-1) moves by <= tol.
/// kTailCheck: accept n_max once the truncation error of rho^(+-1), estimated
/// from the size and decay rate of the outermost harmonics, is <= tol;
/// doubling otherwise. One solve in the common case.
enum class TruncationGrowth { kFixed, kDouble, kTailCheck };

struct FloquetConfig {
  int n_max = 5;
  double tol = 1e-8;
  TruncationGrowth growth = TruncationGrowth::kDouble;
  /// Upper bound for adaptive doubling.
  int n_max_limit = 80;

  void validate() const;
};

/// Superoperator Fourier blocks: L_0 = -i[H_0, .] + D, L_m = -i[H_m, .].
struct FloquetBlocks {
  std::map<int, Superop> blocks;

  int max_index() const;
  bool tridiagonal() const { return max_index() <= 1; }
  Superop block(int m) const;
};

FloquetBlocks assemble_blocks(const HamiltonianHarmonics& h, const Superop& dissipator);

/// Largest elementwise residual of the harmonic balance equations, divided
/// by the largest rate appearing in them (so it is dimensionless):
///   (L_0 + i n w) rho^(n) + sum_{m != 0} L_m rho^(n-m) = 0
/// evaluated for |n| <= n_max + max_index, with rho^(n) = 0 outside the
/// stored range. trace(rho^(0)) - 1 is included.
double harmonic_balance_residual(const FloquetBlocks& blocks, double omega_mod,
                                 const HarmonicDensityMatrix& rho);

/// Matrix continued fraction solve of a block-tridiagonal harmonic system.
/// Throws SolverError kNotTridiagonal for |m| > 1 couplings and
/// kNoConvergence when adaptive doubling exhausts cfg.n_max_limit.
HarmonicDensityMatrix solve_continued_fraction(const FloquetBlocks& blocks, double omega_mod,
                                               const FloquetConfig& cfg);

/// Single pass of the continued fraction at fixed truncation.
HarmonicDensityMatrix solve_continued_fraction_fixed(const FloquetBlocks& blocks,
                                                     double omega_mod, int n_max);

/// All 16 (2 n_max + 1) unknowns in one sparse LU solve. Any coupling range.
HarmonicDensityMatrix solve_direct(const FloquetBlocks& blocks, double omega_mod, int n_max);

struct TimeDomainResult {
  HarmonicDensityMatrix harmonics;
  double max_trace_error = 0.0;  ///< over the sampled final period
  std::size_t steps = 0;
};

struct TimeDomainOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  int n_out = 2;  ///< harmonics extracted: |n| <= n_out
};

/// Brute-force oracle: integrates d rho/dt = -i[H(t), rho] + D[rho] from
/// |1><1| for `duration`, then projects the last modulation period, sampled
/// at `sample_count` points, onto exp(-i n omega_mod t).
/// Requires duration >= 20 / slowest relaxation rate (caller supplies it
/// via `relaxation_rate`).
TimeDomainResult time_domain_oracle(const HamiltonianHarmonics& h, const Superop& dissipator,
                                    double omega_mod, double relaxation_rate, double duration,
                                    int sample_count, const TimeDomainOptions& options = {});

}  // namespace rydsim
