#pragma once

#include "imc/linalg.hpp"
#include "imc/matrix.hpp"

namespace imc {

/// Orthonormal feature matrices X (n1 × a1) and Y (n2 × a2) constraining the
/// column and row spaces of the estimate.
struct SideInfo {
  Matrix x;
  Matrix y;

  SideInfo(Matrix x_in, Matrix y_in);

  Index n1() const { return x.rows(); }
  Index n2() const { return y.rows(); }
  Index a1() const { return x.cols(); }
  Index a2() const { return y.cols(); }
};

/// The optimization variable: stacked factors A (a1 × r), B (a2 × r).
struct FactorPair {
  Matrix a;
  Matrix b;

  FactorPair(Matrix a_in, Matrix b_in);

  Index rank() const { return a.cols(); }
  double norm() const { return std::sqrt(a.squaredNorm() + b.squaredNorm()); }
};

/// Synthetic ground truth L* = X* Z Y*^T together with the spectrum of Z.
struct GroundTruth {
  Matrix x_star;
  Matrix y_star;
  Matrix z;
  Matrix l_star;
  Index rank;
  double sigma_max;
  double sigma_min;
  double kappa;

  /// Validates the factorization, measures the spectrum of Z, checks that
  /// rank(Z) = r numerically.
  GroundTruth(Matrix x_star_in, Matrix y_star_in, Matrix z_in, Index r);

  Index n1() const { return x_star.rows(); }
  Index n2() const { return y_star.rows(); }
};

/// L_hat = X A B^T Y^T.
Matrix reconstruct_imc(const FactorPair& f, const SideInfo& si);

/// L_hat = A B^T (ambient factors).
Matrix reconstruct_mc(const FactorPair& f);

}  // namespace imc
