#include "imc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "imc/linalg.hpp"

namespace imc {

SyntheticInstance gen_ground_truth(Index n1, Index n2, Index a1, Index a2, Index r, Rng& rng) {
  if (r < 1 || r > std::min(a1, a2)) throw_invalid("gen_ground_truth: need 1 <= r <= min(a1, a2)");
  if (a1 > n1 || a2 > n2) throw_invalid("gen_ground_truth: need a1 <= n1 and a2 <= n2");

  Matrix x_star = orthonormalize(rng.gaussian_matrix(n1, a1));
  Matrix y_star = orthonormalize(rng.gaussian_matrix(n2, a2));
  Matrix z = rng.gaussian_matrix(a1, r) * rng.gaussian_matrix(a2, r).transpose();
  z /= spectral_norm(z);

  GroundTruth truth(std::move(x_star), std::move(y_star), std::move(z), r);
  SideInfo si(truth.x_star, truth.y_star);
  return {std::move(truth), std::move(si)};
}

std::vector<std::pair<Index, Index>> sample_omega(Index n1, Index n2, double p, Rng& rng) {
  if (!(p > 0.0) || p > 1.0) throw_invalid("sample_omega: p must be in (0, 1]");
  std::vector<std::pair<Index, Index>> omega;
  omega.reserve(static_cast<std::size_t>(static_cast<double>(n1 * n2) * p * 1.1) + 16);
  for (Index i = 0; i < n1; ++i)
    for (Index j = 0; j < n2; ++j)
      if (p >= 1.0 || rng.bernoulli(p)) omega.emplace_back(i, j);
  return omega;
}

ObservationSet add_noise(const Matrix& l_star, const std::vector<std::pair<Index, Index>>& omega,
                         double p, double sigma, Rng& rng) {
  if (sigma < 0.0) throw_invalid("add_noise: sigma must be >= 0");
  std::vector<Triple> triples;
  triples.reserve(omega.size());
  for (const auto& [i, j] : omega) {
    const double noise = sigma > 0.0 ? sigma * rng.normal() : 0.0;
    triples.push_back({i, j, l_star(i, j) + noise});
  }
  return ObservationSet(l_star.rows(), l_star.cols(), p, std::move(triples));
}

ObservationSet noise_only(Index n1, Index n2, const std::vector<std::pair<Index, Index>>& omega,
                          double p, double sigma, Rng& rng) {
  if (sigma < 0.0) throw_invalid("noise_only: sigma must be >= 0");
  std::vector<Triple> triples;
  triples.reserve(omega.size());
  for (const auto& [i, j] : omega)
    triples.push_back({i, j, sigma > 0.0 ? sigma * rng.normal() : 0.0});
  return ObservationSet(n1, n2, p, std::move(triples));
}

Matrix gen_inexact_side_info(const Matrix& u_star, Index a, double delta, Rng& rng) {
  require_orthonormal(u_star, "gen_inexact_side_info: U*", 1e-8);
  const Index n = u_star.rows();
  const Index r = u_star.cols();
  if (a < r) throw_invalid("gen_inexact_side_info: need a >= r");
  if (a > n - r) {
    std::ostringstream oss;
    oss << "gen_inexact_side_info: a = " << a << " exceeds n - r = " << (n - r)
        << "; the orthogonal complement is too small";
    throw_invalid(oss.str());
  }
  if (delta < 0.0 || delta > 1.0) throw_invalid("gen_inexact_side_info: delta must be in [0, 1]");

  // Target angles: theta_r = arcsin(delta), the rest uniform below it, sorted.
  std::vector<double> theta(r);
  const double theta_max = std::asin(delta);
  for (Index i = 0; i + 1 < r; ++i) theta[i] = theta_max * rng.uniform();
  theta[r - 1] = theta_max;
  std::sort(theta.begin(), theta.end());

  // Orthonormal directions orthogonal to U*: U1 rotates the first r columns,
  // U2 fills the remaining a - r. Rank deficiency of the Gaussian draw has
  // probability zero; guarded with a redraw anyway.
  Matrix u_perp;
  for (int attempt = 0;; ++attempt) {
    Matrix g = rng.gaussian_matrix(n, a);
    g -= u_star * (u_star.transpose() * g);
    try {
      u_perp = orthonormalize(g);
      break;
    } catch (const std::invalid_argument&) {
      if (attempt >= 4) throw;
    }
  }
  // One more projection pass kills the O(eps) residual against U*.
  u_perp -= u_star * (u_star.transpose() * u_perp);
  u_perp = orthonormalize(u_perp);

  Matrix x(n, a);
  for (Index i = 0; i < r; ++i)
    x.col(i) = std::cos(theta[i]) * u_star.col(i) + std::sin(theta[i]) * u_perp.col(i);
  if (a > r) x.rightCols(a - r) = u_perp.rightCols(a - r);
  return x;
}

Vector principal_angles(const Matrix& u, const Matrix& v) {
  require_orthonormal(u, "principal_angles: U", 1e-8);
  require_orthonormal(v, "principal_angles: V", 1e-8);
  if (u.rows() != v.rows()) throw_invalid("principal_angles: row dimensions differ");

  const Matrix* small = &v;
  const Matrix* large = &u;
  if (small->cols() > large->cols()) std::swap(small, large);
  const Index k = small->cols();

  // Cosine route: descending singular values of U^T V give ascending angles.
  const Matrix gram = large->transpose() * *small;
  Vector cosines = svd(gram).s;

  // Sine route for the well-aligned directions (arccos loses half the
  // precision near 1): singular values of (I - P_large) V, ascending.
  const Matrix residual = *small - *large * gram;
  Vector sines = svd(residual).s;

  Vector angles(k);
  for (Index i = 0; i < k; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::clamp(sines(k - 1 - i), 0.0, 1.0);
    angles(i) = c > M_SQRT1_2 ? std::asin(s) : std::acos(c);
  }
  std::sort(angles.data(), angles.data() + k);
  return angles;
}

Matrix align_basis(const Matrix& x, const Matrix& u_star) {
  require_orthonormal(x, "align_basis: X", 1e-8);
  require_orthonormal(u_star, "align_basis: U*", 1e-8);
  if (x.rows() != u_star.rows()) throw_invalid("align_basis: row dimensions differ");
  const Index a = x.cols();
  const Index r = u_star.cols();
  if (r > a) throw_invalid("align_basis: need r <= a");

  // Principal pairs from X^T U* = P Sigma Q^T: the r directions of col(X)
  // closest to col(U*) are X P; the matched directions of col(U*) are U* Q.
  const SvdResult dec = svd(x.transpose() * u_star);
  Matrix x_star(x.rows(), a);
  x_star.leftCols(r) = u_star * dec.v;
  if (a > r) {
    // Complete {X P} to a basis of col(X); the completion is orthogonal to
    // col(U*) as well (principal-pair orthogonality), so X* is orthonormal.
    Eigen::HouseholderQR<Matrix> qr(dec.u);
    const Matrix completion = qr.householderQ() * Matrix::Identity(a, a).rightCols(a - r);
    x_star.rightCols(a - r) = x * completion;
  }
  return x_star;
}

double projector_distance(const Matrix& x, const Matrix& w) {
  const Vector angles = principal_angles(x, w);
  double max_sine = std::sin(angles(angles.size() - 1));
  // When the column counts differ the extra directions contribute sin = 1.
  if (x.cols() != w.cols()) max_sine = 1.0;
  return max_sine;
}

}  // namespace imc
