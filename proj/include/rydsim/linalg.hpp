#pragma once

#include <complex>

#include <Eigen/Dense>

namespace rydsim {

using cd = std::complex<double>;

inline constexpr int kLevels = 4;
inline constexpr int kLiouvilleDim = kLevels * kLevels;

/// 4x4 operator on the atomic Hilbert space.
using Mat4 = Eigen::Matrix<cd, kLevels, kLevels>;
/// Column-major vectorisation of a Mat4: element (i, j) sits at i + 4 j.
using Vec16 = Eigen::Matrix<cd, kLiouvilleDim, 1>;
/// Linear map on vectorised density matrices.
using Superop = Eigen::Matrix<cd, kLiouvilleDim, kLiouvilleDim>;

inline constexpr int vec_index(int row, int col) { return row + kLevels * col; }

inline Vec16 vectorize(const Mat4& m) { return Eigen::Map<const Vec16>(m.data()); }

inline Mat4 unvectorize(const Vec16& v) { return Eigen::Map<const Mat4>(v.data()); }

/// Superoperator of X -> -i [H, X].
inline Superop commutator_superop(const Mat4& h) {
  Superop out = Superop::Zero();
  const cd minus_i{0.0, -1.0};
  for (int col = 0; col < kLevels; ++col) {
    for (int row = 0; row < kLevels; ++row) {
      const int in = vec_index(row, col);
      // H E_{row,col} = sum_k H(k,row) E_{k,col}
      for (int k = 0; k < kLevels; ++k) {
        out(vec_index(k, col), in) += minus_i * h(k, row);
        // E_{row,col} H = sum_k H(col,k) E_{row,k}
        out(vec_index(row, k), in) -= minus_i * h(col, k);
      }
    }
  }
  return out;
}

}  // namespace rydsim
