#include "imc/types.hpp"

#include <sstream>

namespace imc {

SideInfo::SideInfo(Matrix x_in, Matrix y_in) : x(std::move(x_in)), y(std::move(y_in)) {
  require_finite(x, "SideInfo: X");
  require_finite(y, "SideInfo: Y");
  if (x.cols() > x.rows()) throw_invalid("SideInfo: a1 > n1");
  if (y.cols() > y.rows()) throw_invalid("SideInfo: a2 > n2");
  require_orthonormal(x, "SideInfo: X");
  require_orthonormal(y, "SideInfo: Y");
}

FactorPair::FactorPair(Matrix a_in, Matrix b_in) : a(std::move(a_in)), b(std::move(b_in)) {
  require_finite(a, "FactorPair: A");
  require_finite(b, "FactorPair: B");
  if (a.cols() != b.cols()) {
    std::ostringstream oss;
    oss << "FactorPair: inner dimensions differ, A has " << a.cols() << " columns, B has "
        << b.cols();
    throw_invalid(oss.str());
  }
  if (a.cols() < 1) throw_invalid("FactorPair: rank must be >= 1");
}

GroundTruth::GroundTruth(Matrix x_star_in, Matrix y_star_in, Matrix z_in, Index r)
    : x_star(std::move(x_star_in)), y_star(std::move(y_star_in)), z(std::move(z_in)), rank(r) {
  require_orthonormal(x_star, "GroundTruth: X*");
  require_orthonormal(y_star, "GroundTruth: Y*");
  require_finite(z, "GroundTruth: Z");
  if (rank < 1 || rank > std::min(z.rows(), z.cols()))
    throw_invalid("GroundTruth: rank out of range");

  const SvdResult dec = svd(z);
  sigma_max = dec.s(0);
  sigma_min = dec.s(rank - 1);
  if (sigma_min <= 0.0) throw_invalid("GroundTruth: Z has fewer than r nonzero singular values");
  for (Index i = rank; i < dec.s.size(); ++i) {
    if (dec.s(i) > tol::rank_cut * sigma_max) {
      std::ostringstream oss;
      oss << "GroundTruth: Z has effective rank > " << rank << " (sigma_" << (i + 1) << " = "
          << dec.s(i) << ")";
      throw_invalid(oss.str());
    }
  }
  kappa = sigma_max / sigma_min;

  l_star = x_star * z * y_star.transpose();
}

Matrix reconstruct_imc(const FactorPair& f, const SideInfo& si) {
  return si.x * (f.a * f.b.transpose()) * si.y.transpose();
}

Matrix reconstruct_mc(const FactorPair& f) { return f.a * f.b.transpose(); }

}  // namespace imc
