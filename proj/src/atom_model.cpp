#include "rydsim/atom_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rydsim/constants.hpp"
#include "rydsim/errors.hpp"

namespace rydsim {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string("AtomModel.") + name + " must be finite and > 0");
  }
}

bool is_zero(cd z) { return z.real() == 0.0 && z.imag() == 0.0; }

}  // namespace

void AtomModel::validate() const {
  require_positive(gamma2, "gamma2");
  require_positive(gamma3, "gamma3");
  require_positive(gamma4, "gamma4");
  require_positive(gamma_transit, "gamma_transit");
  require_positive(d21, "d21");
  require_positive(d32, "d32");
  require_positive(d43, "d43");
  require_positive(lambda_p, "lambda_p");
  require_positive(lambda_c, "lambda_c");
  require_positive(mass, "mass");
  if (!(abundance > 0.0 && abundance <= 1.0)) {
    throw DomainError("AtomModel.abundance must lie in (0, 1]");
  }
}

double AtomModel::k_probe() const { return constants::kTwoPi / lambda_p; }
double AtomModel::k_coupling() const { return constants::kTwoPi / lambda_c; }

AtomModel AtomModel::rubidium85() {
  using constants::kAtomicDipole;
  using constants::kTwoPi;
  AtomModel atom;
  atom.gamma2 = kTwoPi * 6.0666e6;
  atom.gamma3 = kTwoPi * 2.8e3;
  atom.gamma4 = kTwoPi * 1.8e3;
  atom.mass = 84.911789738 * constants::kAtomicMassUnit;
  atom.gamma_transit = transit_rate(0.3e-3, 293.0, atom.mass);
  atom.d21 = 2.36 * kAtomicDipole;
  atom.d32 = 0.0147 * kAtomicDipole;
  atom.d43 = 1400.0 * kAtomicDipole;
  atom.lambda_p = 780.241e-9;
  atom.lambda_c = 480.125e-9;
  atom.abundance = 0.73;
  return atom;
}

double transit_rate(double beam_diameter, double temperature, double mass) {
  if (!(beam_diameter > 0.0) || !(temperature > 0.0) || !(mass > 0.0)) {
    throw DomainError("transit_rate: diameter, temperature and mass must be > 0");
  }
  const double mean_speed =
      std::sqrt(8.0 * constants::kBoltzmann * temperature / (std::numbers::pi * mass));
  return mean_speed / beam_diameter;
}

cd rabi_from_field(cd field, double dipole) {
  if (!(dipole > 0.0)) throw DomainError("rabi_from_field: dipole must be > 0");
  return field * (dipole / constants::kHbar);
}

int DriveConfig::max_harmonic() const {
  int top = 0;
  for (const auto* field : {&probe, &coupling, &rf}) {
    for (const auto& [m, amp] : *field) {
      if (!is_zero(amp)) top = std::max(top, std::abs(m));
    }
  }
  return top;
}

void DriveConfig::validate() const {
  for (const auto* field : {&probe, &coupling, &rf}) {
    for (const auto& [m, amp] : *field) {
      if (!std::isfinite(amp.real()) || !std::isfinite(amp.imag())) {
        throw DomainError("DriveConfig: non-finite harmonic amplitude at index " +
                          std::to_string(m));
      }
    }
  }
  for (double x : {delta_p, delta_c, delta_rf, omega_mod}) {
    if (!std::isfinite(x)) throw DomainError("DriveConfig: non-finite detuning");
  }
  if (max_harmonic() > 0 && !(omega_mod > 0.0)) {
    throw DomainError("DriveConfig: omega_mod must be > 0 when sidebands are present");
  }
}

HamiltonianHarmonics build_hamiltonian(const DriveConfig& drive, double velocity,
                                       const AtomModel& atom, int harmonic_cap) {
  drive.validate();
  const int top = drive.max_harmonic();
  if (top > harmonic_cap) {
    throw DomainError("build_hamiltonian: harmonic index " + std::to_string(top) +
                      " exceeds cap " + std::to_string(harmonic_cap));
  }

  HamiltonianHarmonics h;
  auto upper = [&](const HarmonicAmplitudes& field, int row) {
    for (const auto& [m, amp] : field) {
      if (is_zero(amp)) continue;
      auto [it, inserted] = h.try_emplace(m, Mat4::Zero());
      it->second(row, row + 1) += 0.5 * amp;
      auto [mirror, unused] = h.try_emplace(-m, Mat4::Zero());
      mirror->second(row + 1, row) += 0.5 * std::conj(amp);
    }
  };
  upper(drive.probe, 0);
  upper(drive.coupling, 1);
  upper(drive.rf, 2);

  const double dp = drive.delta_p - atom.k_probe() * velocity;
  const double dc = drive.delta_c + atom.k_coupling() * velocity;
  Mat4& h0 = h.try_emplace(0, Mat4::Zero()).first->second;
  h0(1, 1) += -dp;
  h0(2, 2) += -(dp + dc);
  h0(3, 3) += -(dp + dc + drive.delta_rf);

  for (auto it = h.begin(); it != h.end();) {
    if (it->first != 0 && it->second.isZero(0.0)) {
      it = h.erase(it);
    } else {
      ++it;
    }
  }
  return h;
}

Superop build_dissipator(const AtomModel& atom) {
  Superop d = Superop::Zero();
  // Jump operator sqrt(rate) |lower><upper|.
  auto add_decay = [&](int upper, int lower, double rate) {
    d(vec_index(lower, lower), vec_index(upper, upper)) += rate;
    for (int k = 0; k < kLevels; ++k) {
      d(vec_index(upper, k), vec_index(upper, k)) -= 0.5 * rate;
      d(vec_index(k, upper), vec_index(k, upper)) -= 0.5 * rate;
    }
  };
  add_decay(1, 0, atom.gamma2);
  add_decay(2, 1, atom.gamma3);
  add_decay(3, 2, atom.gamma4);

  // Transit: -g rho + g Tr(rho) |1><1|.
  for (int i = 0; i < kLiouvilleDim; ++i) d(i, i) -= atom.gamma_transit;
  for (int k = 0; k < kLevels; ++k) d(vec_index(0, 0), vec_index(k, k)) += atom.gamma_transit;
  return d;
}

Superop liouvillian(const Mat4& h0, const Superop& dissipator) {
  return commutator_superop(h0) + dissipator;
}

DensityMatrix steady_state_static(const Mat4& h0, const Superop& dissipator) {
  Superop system = liouvillian(h0, dissipator);
  // The population rows sum to zero, so the |1><1| row is redundant and
  // carries the normalisation instead.
  system.row(vec_index(0, 0)).setZero();
  for (int k = 0; k < kLevels; ++k) system(vec_index(0, 0), vec_index(k, k)) = 1.0;
  Vec16 rhs = Vec16::Zero();
  rhs(vec_index(0, 0)) = 1.0;

  Eigen::FullPivLU<Superop> lu(system);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw SolverError(SolverError::Kind::kSingular,
                      "steady_state_static: generator null space is not one-dimensional");
  }
  return unvectorize(lu.solve(rhs));
}

double slowest_relaxation_rate(const AtomModel& atom) {
  if (atom.gamma_transit > 0.0) return atom.gamma_transit;
  return std::min({atom.gamma2, atom.gamma3, atom.gamma4});
}

double hermiticity_residual(const Mat4& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace rydsim
