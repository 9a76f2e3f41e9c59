#include "rydsim/floquet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/numeric/odeint.hpp>

#include "rydsim/errors.hpp"

namespace rydsim {

namespace {

constexpr int kTraceRow = vec_index(0, 0);

/// Replace the |1><1| equation by the normalisation trace(rho) = 1.
void impose_trace_row(Superop& m) {
  m.row(kTraceRow).setZero();
  for (int k = 0; k < kLevels; ++k) m(kTraceRow, vec_index(k, k)) = 1.0;
}

Vec16 solve_carrier(Superop m) {
  impose_trace_row(m);
  Vec16 rhs = Vec16::Zero();
  rhs(kTraceRow) = 1.0;
  Eigen::FullPivLU<Superop> lu(m);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw SolverError(SolverError::Kind::kSingular,
                      "Floquet carrier system is singular (null space dimension != 1)");
  }
  return lu.solve(rhs);
}

/// Nonzero entries of a superoperator, row by row.
class SparseRows {
 public:
  explicit SparseRows(const Superop& m) {
    for (int i = 0; i < kLiouvilleDim; ++i) {
      for (int j = 0; j < kLiouvilleDim; ++j) {
        if (m(i, j) != cd{}) entries_.push_back({i, j, m(i, j)});
      }
    }
  }

  /// out += this * x
  void multiply_add(const Superop& x, Superop& out) const {
    for (const auto& e : entries_) out.row(e.row) += e.value * x.row(e.col);
  }

 private:
  struct Entry {
    int row;
    int col;
    cd value;
  };
  std::vector<Entry> entries_;
};

/// Index of vec(X^T) entries: transpose permutation on Liouville space.
constexpr int transposed(int i) { return vec_index(i / kLevels, i % kLevels); }

/// Matrix of X -> (S X^dagger)^dagger, i.e. P conj(S) P.
Superop adjoint_image(const Superop& s) {
  Superop out;
  for (int j = 0; j < kLiouvilleDim; ++j) {
    for (int i = 0; i < kLiouvilleDim; ++i) out(i, j) = std::conj(s(transposed(i), transposed(j)));
  }
  return out;
}

/// True when L_{-m} = P conj(L_m) P for every block, the structure that a
/// Hermitian H(t) and an adjoint-preserving dissipator produce.
bool adjoint_symmetric(const FloquetBlocks& blocks) {
  for (const auto& [m, block] : blocks.blocks) {
    if (m < 0) continue;
    const Superop mirror = adjoint_image(blocks.block(-m));
    const double scale = std::max(1.0, block.cwiseAbs().maxCoeff());
    if ((mirror - block).cwiseAbs().maxCoeff() > 1e-14 * scale) return false;
  }
  return true;
}

double sideband_change(const HarmonicDensityMatrix& a, const HarmonicDensityMatrix& b) {
  double change = 0.0;
  for (int n : {-1, 1}) change = std::max(change, (a.at(n) - b.at(n)).cwiseAbs().maxCoeff());
  return change;
}

}  // namespace

HarmonicDensityMatrix HarmonicDensityMatrix::resized(int n_max) const {
  HarmonicDensityMatrix out(n_max);
  for (int n = -n_max; n <= n_max; ++n) out[n] = at(n);
  return out;
}

double HarmonicDensityMatrix::pairing_residual() const {
  double worst = 0.0;
  for (int n = 0; n <= n_max_; ++n) {
    worst = std::max(worst, ((*this)[-n] - (*this)[n].adjoint()).cwiseAbs().maxCoeff());
  }
  return worst;
}

void FloquetConfig::validate() const {
  if (n_max < 1) throw DomainError("FloquetConfig.n_max must be >= 1");
  if (!(tol > 0.0)) throw DomainError("FloquetConfig.tol must be > 0");
  if (n_max_limit < n_max) throw DomainError("FloquetConfig.n_max_limit must be >= n_max");
}

int FloquetBlocks::max_index() const {
  int top = 0;
  for (const auto& [m, block] : blocks) {
    if (m != 0 && !block.isZero(0.0)) top = std::max(top, std::abs(m));
  }
  return top;
}

Superop FloquetBlocks::block(int m) const {
  auto it = blocks.find(m);
  return it == blocks.end() ? Superop::Zero() : it->second;
}

FloquetBlocks assemble_blocks(const HamiltonianHarmonics& h, const Superop& dissipator) {
  FloquetBlocks out;
  out.blocks[0] = dissipator;
  for (const auto& [m, hm] : h) {
    if (m != 0 && hm.isZero(0.0)) continue;
    auto [it, inserted] = out.blocks.try_emplace(m, Superop::Zero());
    it->second += commutator_superop(hm);
  }
  return out;
}

double harmonic_balance_residual(const FloquetBlocks& blocks, double omega_mod,
                                 const HarmonicDensityMatrix& rho) {
  const int reach = rho.n_max() + blocks.max_index();
  double scale = reach * std::abs(omega_mod);
  for (const auto& [m, block] : blocks.blocks) scale = std::max(scale, block.cwiseAbs().maxCoeff());
  if (scale == 0.0) scale = 1.0;
  double worst = std::abs(rho.at(0).trace() - 1.0) * scale;
  for (int n = -reach; n <= reach; ++n) {
    Vec16 r = cd{0.0, n * omega_mod} * vectorize(rho.at(n));
    for (const auto& [m, block] : blocks.blocks) {
      const int source = n - m;
      if (source < -rho.n_max() || source > rho.n_max()) continue;
      r += block * vectorize(rho[source]);
    }
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst / scale;
}

HarmonicDensityMatrix solve_continued_fraction_fixed(const FloquetBlocks& blocks,
                                                     double omega_mod, int n_max) {
  if (!blocks.tridiagonal()) {
    throw SolverError(SolverError::Kind::kNotTridiagonal,
                      "continued fraction needs couplings |m| <= 1; use solve_direct");
  }
  HarmonicDensityMatrix rho(n_max);
  const Superop& l0 = blocks.blocks.at(0);
  const Superop up = blocks.block(1);     // rho^(n-1) -> equation n
  const Superop down = blocks.block(-1);  // rho^(n+1) -> equation n

  if (up.isZero(0.0) && down.isZero(0.0)) {
    rho[0] = unvectorize(solve_carrier(l0));
    return rho;
  }

  // rho^(n) = S_n rho^(n-1) for n > 0 and rho^(-n) = R_n rho^(-n+1).
  // When the blocks come from a Hermitian H(t) the negative branch is the
  // adjoint image of the positive one, R_n = P conj(S_n) P.
  const bool mirrored = adjoint_symmetric(blocks);
  const SparseRows down_rows(down);
  const SparseRows up_rows(up);
  std::vector<Superop> s(static_cast<std::size_t>(n_max + 1));
  std::vector<Superop> r(static_cast<std::size_t>(n_max + 1));
  for (int n = n_max; n >= 1; --n) {
    const auto idx = static_cast<std::size_t>(n);
    Superop m = l0;
    m.diagonal().array() += cd{0.0, n * omega_mod};
    if (n < n_max) down_rows.multiply_add(s[idx + 1], m);
    s[idx] = -Eigen::PartialPivLU<Superop>(m).solve(up);

    if (mirrored) {
      r[idx] = adjoint_image(s[idx]);
    } else {
      Superop k = l0;
      k.diagonal().array() -= cd{0.0, n * omega_mod};
      if (n < n_max) up_rows.multiply_add(r[idx + 1], k);
      r[idx] = -Eigen::PartialPivLU<Superop>(k).solve(down);
    }
  }

  Superop carrier = l0;
  down_rows.multiply_add(s[1], carrier);
  up_rows.multiply_add(r[1], carrier);
  if (!carrier.allFinite()) {
    throw SolverError(SolverError::Kind::kSingular, "continued fraction produced non-finite blocks");
  }
  Vec16 current = solve_carrier(carrier);
  rho[0] = unvectorize(current);
  Vec16 lower = current;
  for (int n = 1; n <= n_max; ++n) {
    current = s[static_cast<std::size_t>(n)] * current;
    lower = r[static_cast<std::size_t>(n)] * lower;
    rho[n] = unvectorize(current);
    rho[-n] = unvectorize(lower);
  }
  return rho;
}

HarmonicDensityMatrix solve_continued_fraction(const FloquetBlocks& blocks, double omega_mod,
                                               const FloquetConfig& cfg) {
  cfg.validate();
  if (!blocks.tridiagonal()) {
    throw SolverError(SolverError::Kind::kNotTridiagonal,
                      "continued fraction needs couplings |m| <= 1; use solve_direct");
  }
  HarmonicDensityMatrix current = solve_continued_fraction_fixed(blocks, omega_mod, cfg.n_max);
  if (cfg.growth == TruncationGrowth::kFixed || blocks.max_index() == 0) return current;

  // Harmonics fall off roughly geometrically with ratio q; dropping the
  // (n_max + 1)-th perturbs rho^(+-1) by about tail * q^(n_max - 1).
  auto tail = [](const HarmonicDensityMatrix& rho) {
    auto size = [&rho](int n) {
      return std::max(rho[n].cwiseAbs().maxCoeff(), rho[-n].cwiseAbs().maxCoeff());
    };
    const int n_max = rho.n_max();
    const double last = size(n_max);
    if (n_max < 3 || last == 0.0) return last;
    const double before = size(n_max - 2);
    const double q = before > 0.0 ? std::min(1.0, std::sqrt(last / before)) : 1.0;
    return last * std::pow(q, n_max - 1);
  };
  if (cfg.growth == TruncationGrowth::kTailCheck && tail(current) <= cfg.tol) return current;

  int n = cfg.n_max;
  for (;;) {
    const int next = 2 * n;
    if (next > cfg.n_max_limit) {
      throw SolverError(SolverError::Kind::kNoConvergence,
                        "Floquet truncation did not converge up to n_max = " +
                            std::to_string(cfg.n_max_limit));
    }
    HarmonicDensityMatrix refined = solve_continued_fraction_fixed(blocks, omega_mod, next);
    const bool done = cfg.growth == TruncationGrowth::kTailCheck
                          ? tail(refined) <= cfg.tol
                          : sideband_change(current, refined) <= cfg.tol;
    if (done) return refined;
    current = std::move(refined);
    n = next;
  }
}

HarmonicDensityMatrix solve_direct(const FloquetBlocks& blocks, double omega_mod, int n_max) {
  if (n_max < blocks.max_index()) {
    throw DomainError("solve_direct: n_max must be >= the largest drive harmonic");
  }
  const int harmonics = 2 * n_max + 1;
  const int size = kLiouvilleDim * harmonics;
  auto offset = [&](int n) { return kLiouvilleDim * (n + n_max); };

  std::vector<Eigen::Triplet<cd>> entries;
  entries.reserve(static_cast<std::size_t>(harmonics) * blocks.blocks.size() * 96);
  for (int n = -n_max; n <= n_max; ++n) {
    for (const auto& [m, block] : blocks.blocks) {
      const int source = n - m;
      if (source < -n_max || source > n_max) continue;
      for (int i = 0; i < kLiouvilleDim; ++i) {
        if (n == 0 && i == kTraceRow) continue;
        for (int j = 0; j < kLiouvilleDim; ++j) {
          cd value = block(i, j);
          if (m == 0 && i == j) value += cd{0.0, n * omega_mod};
          if (value != cd{}) entries.emplace_back(offset(n) + i, offset(source) + j, value);
        }
      }
    }
  }
  for (int k = 0; k < kLevels; ++k) {
    entries.emplace_back(offset(0) + kTraceRow, offset(0) + vec_index(k, k), 1.0);
  }

  Eigen::SparseMatrix<cd> system(size, size);
  system.setFromTriplets(entries.begin(), entries.end());
  system.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<cd>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) {
    throw SolverError(SolverError::Kind::kSingular, "solve_direct: singular harmonic system");
  }
  Eigen::Matrix<cd, Eigen::Dynamic, 1> rhs = Eigen::Matrix<cd, Eigen::Dynamic, 1>::Zero(size);
  rhs(offset(0) + kTraceRow) = 1.0;
  Eigen::Matrix<cd, Eigen::Dynamic, 1> x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    throw SolverError(SolverError::Kind::kSingular, "solve_direct: back-substitution failed");
  }

  HarmonicDensityMatrix rho(n_max);
  for (int n = -n_max; n <= n_max; ++n) {
    rho[n] = unvectorize(x.segment<kLiouvilleDim>(offset(n)));
  }
  return rho;
}

TimeDomainResult time_domain_oracle(const HamiltonianHarmonics& h, const Superop& dissipator,
                                    double omega_mod, double relaxation_rate, double duration,
                                    int sample_count, const TimeDomainOptions& options) {
  namespace odeint = boost::numeric::odeint;
  if (!(omega_mod > 0.0)) throw DomainError("time_domain_oracle: omega_mod must be > 0");
  if (!(relaxation_rate > 0.0) || duration < 20.0 / relaxation_rate) {
    throw DomainError("time_domain_oracle: duration must be >= 20 / relaxation rate");
  }
  if (sample_count < 4 * options.n_out + 2) {
    throw DomainError("time_domain_oracle: sample_count too small for requested harmonics");
  }

  const FloquetBlocks blocks = assemble_blocks(h, dissipator);
  std::vector<std::pair<int, Superop>> terms(blocks.blocks.begin(), blocks.blocks.end());

  using State = std::array<double, 2 * kLiouvilleDim>;
  auto to_vec = [](const State& s) {
    Vec16 v;
    for (int i = 0; i < kLiouvilleDim; ++i) v(i) = cd{s[2 * i], s[2 * i + 1]};
    return v;
  };
  auto rhs = [&](const State& s, State& ds, double t) {
    const Vec16 v = to_vec(s);
    Vec16 out = Vec16::Zero();
    for (const auto& [m, block] : terms) {
      const cd phase = m == 0 ? cd{1.0} : std::polar(1.0, -m * omega_mod * t);
      out.noalias() += phase * (block * v);
    }
    for (int i = 0; i < kLiouvilleDim; ++i) {
      ds[2 * i] = out(i).real();
      ds[2 * i + 1] = out(i).imag();
    }
  };

  const double period = 2.0 * std::numbers::pi / omega_mod;
  const double start = duration - period;
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(sample_count) + 1);
  times.push_back(0.0);
  for (int k = 0; k < sample_count; ++k) times.push_back(start + period * k / sample_count);

  State state{};
  state[2 * vec_index(0, 0)] = 1.0;
  std::vector<Vec16> samples;
  samples.reserve(static_cast<std::size_t>(sample_count));
  std::size_t steps = 0;
  try {
    auto stepper = odeint::make_dense_output(options.abs_tol, options.rel_tol,
                                             odeint::runge_kutta_dopri5<State>());
    steps = odeint::integrate_times(stepper, rhs, state, times.begin(), times.end(),
                                    period / 1000.0, [&](const State& s, double t) {
                                      if (t > 0.0) samples.push_back(to_vec(s));
                                    });
  } catch (const std::exception& e) {
    throw SolverError(SolverError::Kind::kStepFailure,
                      std::string("time_domain_oracle: integrator failed: ") + e.what());
  }
  if (samples.size() != static_cast<std::size_t>(sample_count)) {
    throw SolverError(SolverError::Kind::kStepFailure, "time_domain_oracle: missing samples");
  }

  TimeDomainResult result;
  result.steps = steps;
  result.harmonics = HarmonicDensityMatrix(options.n_out);
  for (int k = 0; k < sample_count; ++k) {
    const Mat4 rho = unvectorize(samples[static_cast<std::size_t>(k)]);
    if (!rho.allFinite()) {
      throw SolverError(SolverError::Kind::kStepFailure, "time_domain_oracle: non-finite state");
    }
    result.max_trace_error = std::max(result.max_trace_error, std::abs(rho.trace() - 1.0));
    const double t = times[static_cast<std::size_t>(k) + 1];
    for (int n = -options.n_out; n <= options.n_out; ++n) {
      result.harmonics[n] += std::polar(1.0 / sample_count, n * omega_mod * t) * rho;
    }
  }
  return result;
}

}  // namespace rydsim
