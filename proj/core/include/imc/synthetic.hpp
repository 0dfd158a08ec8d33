#pragma once

#include <vector>

#include "imc/observation.hpp"
#include "imc/rng.hpp"
#include "imc/types.hpp"

namespace imc {

/// Inexact side-information request: the largest principal angle is
/// arcsin(delta); the remaining r-1 target angles are drawn uniformly from
/// [0, arcsin(delta)] and sorted.
struct InexactSpec {
  double delta = 0.0;
  Index rank = 1;
};

struct SyntheticInstance {
  GroundTruth truth;
  SideInfo exact_side_info;
};

/// X*, Y* orthonormal Gaussian bases; Z = G1 G2^T normalized to spectral
/// norm 1; L* = X* Z Y*^T.
SyntheticInstance gen_ground_truth(Index n1, Index n2, Index a1, Index a2, Index r, Rng& rng);

/// Each (i, j) kept independently with probability p.
std::vector<std::pair<Index, Index>> sample_omega(Index n1, Index n2, double p, Rng& rng);

/// Observations L*_{ij} + N(0, sigma^2) on omega.
ObservationSet add_noise(const Matrix& l_star, const std::vector<std::pair<Index, Index>>& omega,
                         double p, double sigma, Rng& rng);

/// Noise-only values on omega (for effective-noise diagnostics).
ObservationSet noise_only(Index n1, Index n2, const std::vector<std::pair<Index, Index>>& omega,
                          double p, double sigma, Rng& rng);

/// Orthonormal X (n x a) whose principal angles against col(U*) are exactly
/// the prescribed target angles: column i of X is
/// cos(theta_i) U*_i + sin(theta_i) U1_i for i <= r, with U1, U2 orthonormal
/// completions orthogonal to U*. Requires r <= a <= n - r.
Matrix gen_inexact_side_info(const Matrix& u_star, Index a, double delta, Rng& rng);

/// Principal angles between col(U) and col(V), ascending. Cosines come from
/// the SVD of U^T V; angles below ~0.1 are refined through the sine route,
/// which is well-conditioned where arccos is not.
Vector principal_angles(const Matrix& u, const Matrix& v);

/// The aligned "ground truth" basis X*: first r columns are the principal
/// pairing of U* inside the construction, remaining a - r columns complete
/// the basis inside col(X). Satisfies ||X X^T - X* X*^T|| = max_i sin(theta_i).
Matrix align_basis(const Matrix& x, const Matrix& u_star);

/// Spectral norm of X X^T - W W^T for orthonormal X, W without forming the
/// n x n projectors: it equals the largest principal-angle sine.
double projector_distance(const Matrix& x, const Matrix& w);

}  // namespace imc
