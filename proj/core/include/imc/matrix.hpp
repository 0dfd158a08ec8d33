#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace imc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Default numeric tolerances. Callers that need different thresholds pass
/// them explicitly; these are the module-wide defaults.
namespace tol {
inline constexpr double orthonormality = 1e-10;
inline constexpr double factorization = 1e-10;   // L* = X* Z Y*^T check
inline constexpr double rank_cut = 1e-10;        // singular values below cut * sigma_1 count as zero
inline constexpr double svd_reconstruct = 1e-8;
inline constexpr double qr_orthogonality = 1e-12;
inline constexpr double projection_feasible = 1e-12;  // slack factor for membership in C
inline constexpr double projection_exact = 1e-9;      // how close project_C lands to C
inline constexpr double spectral_norm_rayleigh = 1e-10;
}  // namespace tol

[[noreturn]] void throw_invalid(const std::string& what);

/// Throws std::invalid_argument if any entry of m is NaN or infinite.
void require_finite(const Matrix& m, const std::string& name);

/// Throws unless m has orthonormal columns to the given Frobenius tolerance.
void require_orthonormal(const Matrix& m, const std::string& name,
                         double tolerance = tol::orthonormality);

inline bool is_orthonormal(const Matrix& m, double tolerance = tol::orthonormality) {
  const Matrix gram = m.transpose() * m;
  return (gram - Matrix::Identity(m.cols(), m.cols())).norm() <= tolerance;
}

}  // namespace imc
