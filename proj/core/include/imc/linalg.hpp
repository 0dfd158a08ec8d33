#pragma once

#include <functional>
#include <optional>

#include "imc/matrix.hpp"

namespace imc {

/// Compact SVD, singular values nonincreasing, columns of U and V orthonormal.
/// Sign convention: the largest-magnitude entry of each left singular vector
/// is nonnegative, so repeated factorizations of the same matrix agree.
struct SvdResult {
  Matrix u;
  Vector s;
  Matrix v;

  Matrix reconstruct() const { return u * s.asDiagonal() * v.transpose(); }
};

inline constexpr Index kFullRank = -1;

/// Top-k (or full, k = kFullRank) SVD of a dense matrix.
/// Rejects non-finite input; a decomposition failure throws instead of
/// returning garbage.
SvdResult svd(const Matrix& m, Index k = kFullRank);

/// Orthonormal basis with the same column span as m.
/// Throws if m is numerically rank-deficient (smallest singular value
/// <= rank_tolerance * largest), naming the number of deficient columns.
Matrix orthonormalize(const Matrix& m, double rank_tolerance = tol::rank_cut);

/// Maximum Euclidean row norm (the 2,inf norm).
double two_inf_norm(const Matrix& m);

/// Spectral norm via power iteration on m^T m, deterministic start,
/// convergence on the Rayleigh quotient.
double spectral_norm(const Matrix& m, double tolerance = tol::spectral_norm_rayleigh);

/// Matrix-free linear operator for the iterative top-k SVD below.
struct LinearOperator {
  Index rows = 0;
  Index cols = 0;
  /// out = op * x,  x: cols × b, out: rows × b
  std::function<void(const Matrix& x, Matrix& out)> apply;
  /// out = op^T * x, x: rows × b, out: cols × b
  std::function<void(const Matrix& x, Matrix& out)> apply_transpose;
};

/// Top-k singular triplets of a (typically sparse) operator by block
/// subspace iteration. Deterministic: fixed internal start. Intended for
/// the ambient-scale matrices where a dense SVD would dominate runtime;
/// accuracy is controlled by `tolerance` on the singular values.
SvdResult topk_svd(const LinearOperator& op, Index k, double tolerance = 1e-11,
                   int max_sweeps = 400);

}  // namespace imc
