#include "imc/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "imc/rng.hpp"

namespace imc {

void throw_invalid(const std::string& what) { throw std::invalid_argument(what); }

void require_finite(const Matrix& m, const std::string& name) {
  if (!m.allFinite()) throw_invalid(name + ": non-finite entries");
}

void require_orthonormal(const Matrix& m, const std::string& name, double tolerance) {
  if (!is_orthonormal(m, tolerance)) {
    std::ostringstream oss;
    oss << name << ": columns not orthonormal to " << tolerance;
    throw_invalid(oss.str());
  }
}

namespace {

void apply_sign_convention(Matrix& u, Matrix& v) {
  for (Index j = 0; j < u.cols(); ++j) {
    Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    if (u(imax, j) < 0.0) {
      u.col(j) = -u.col(j);
      if (j < v.cols()) v.col(j) = -v.col(j);
    }
  }
}

}  // namespace

SvdResult svd(const Matrix& m, Index k) {
  require_finite(m, "svd: input");
  if (m.rows() < 1 || m.cols() < 1) throw_invalid("svd: empty matrix");
  const Index full = std::min(m.rows(), m.cols());
  if (k == kFullRank) k = full;
  if (k < 1 || k > full) throw_invalid("svd: k out of range");

  SvdResult out;
  if (full <= 16) {
    Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.u = dec.matrixU();
    out.s = dec.singularValues();
    out.v = dec.matrixV();
  } else {
    Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success) throw std::runtime_error("svd: failed to converge");
    out.u = dec.matrixU();
    out.s = dec.singularValues();
    out.v = dec.matrixV();
  }
  if (k < full) {
    out.u = out.u.leftCols(k).eval();
    out.s = out.s.head(k).eval();
    out.v = out.v.leftCols(k).eval();
  }
  apply_sign_convention(out.u, out.v);
  return out;
}

Matrix orthonormalize(const Matrix& m, double rank_tolerance) {
  require_finite(m, "orthonormalize: input");
  if (m.rows() < m.cols()) throw_invalid("orthonormalize: more columns than rows");
  SvdResult dec = svd(m);
  const double cutoff = rank_tolerance * dec.s(0);
  Index deficient = 0;
  for (Index i = 0; i < dec.s.size(); ++i)
    if (dec.s(i) <= cutoff) ++deficient;
  if (deficient > 0) {
    std::ostringstream oss;
    oss << "orthonormalize: input rank-deficient, " << deficient << " of " << m.cols()
        << " columns dependent";
    throw_invalid(oss.str());
  }
  return dec.u;
}

double two_inf_norm(const Matrix& m) { return m.rowwise().norm().maxCoeff(); }

double spectral_norm(const Matrix& m, double tolerance) {
  require_finite(m, "spectral_norm: input");
  if (m.norm() == 0.0) return 0.0;
  // Power iteration on the Gram operator; start vector from a fixed stream.
  Rng rng(0x5eedf00dULL, 17);
  Vector x = rng.gaussian_matrix(m.cols(), 1);
  x.normalize();
  double rayleigh = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vector y = m.transpose() * (m * x);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    y /= norm;
    const double next = (m * y).squaredNorm();
    const bool converged = std::abs(next - rayleigh) <= tolerance * std::max(next, 1e-300);
    x.swap(y);
    rayleigh = next;
    if (converged && it > 2) break;
  }
  return std::sqrt(rayleigh);
}

SvdResult topk_svd(const LinearOperator& op, Index k, double tolerance, int max_sweeps) {
  if (k < 1 || k > std::min(op.rows, op.cols)) throw_invalid("topk_svd: k out of range");
  const Index block = std::min(op.cols, k + std::min<Index>(k + 2, 10));

  Rng rng(0x70b5bdULL, 3);
  Matrix q = rng.gaussian_matrix(op.cols, block);
  q = Eigen::HouseholderQR<Matrix>(q).householderQ() * Matrix::Identity(op.cols, block);

  Matrix z(op.rows, block), w(op.cols, block);
  Vector prev = Vector::Zero(k);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    op.apply(q, z);
    z = Eigen::HouseholderQR<Matrix>(z).householderQ() * Matrix::Identity(op.rows, block);
    op.apply_transpose(z, w);
    Eigen::HouseholderQR<Matrix> qr(w);
    q = qr.householderQ() * Matrix::Identity(op.cols, block);
    Vector cur = qr.matrixQR().topRows(block).diagonal().cwiseAbs().head(k);
    std::sort(cur.data(), cur.data() + cur.size(), std::greater<double>());
    if (sweep > 0 && (cur - prev).cwiseAbs().maxCoeff() <= tolerance * std::max(cur(0), 1e-300))
      break;
    prev = cur;
  }

  // Rayleigh-Ritz on the converged subspace: SVD of the small projected block.
  op.apply(q, z);  // z = A q, rows × block
  SvdResult small = svd(z, std::min<Index>(k, block));
  SvdResult out;
  out.u = small.u;
  out.s = small.s;
  out.v = q * small.v;
  return out;
}

}  // namespace imc
