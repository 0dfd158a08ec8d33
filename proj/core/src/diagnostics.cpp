#include "imc/diagnostics.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "imc/io.hpp"
#include "imc/linalg.hpp"

namespace imc {
namespace {

double max_leverage(const Matrix& basis) { return basis.rowwise().squaredNorm().maxCoeff(); }

}  // namespace

double incoherence(const Matrix& m, Index r) {
  if (r < 1 || r > std::min(m.rows(), m.cols())) throw_invalid("incoherence: r out of range");
  const SvdResult dec = svd(m);
  if (dec.s(r - 1) <= 1e-12 * dec.s(0)) {
    std::ostringstream oss;
    oss << "incoherence: effective rank below " << r << " (sigma_r / sigma_1 = "
        << dec.s(r - 1) / dec.s(0) << ")";
    throw_invalid(oss.str());
  }
  const double lev_u = max_leverage(dec.u.leftCols(r));
  const double lev_v = max_leverage(dec.v.leftCols(r));
  const double rd = static_cast<double>(r);
  return std::max(static_cast<double>(m.rows()) / rd * lev_u,
                  static_cast<double>(m.cols()) / rd * lev_v);
}

std::pair<double, double> side_info_incoherence(const SideInfo& si) {
  const double mu1 = static_cast<double>(si.n1()) / static_cast<double>(si.a1()) *
                     max_leverage(si.x);
  const double mu2 = static_cast<double>(si.n2()) / static_cast<double>(si.a2()) *
                     max_leverage(si.y);
  return {mu1, mu2};
}

double effective_noise(const ObservationSet& noise_on_omega, const SideInfo& si) {
  if (si.n1() != noise_on_omega.n1() || si.n2() != noise_on_omega.n2())
    throw_invalid("effective_noise: dimension mismatch");
  if (noise_on_omega.empty()) return 0.0;
  const Matrix x_t = si.x.transpose();
  Matrix t = Matrix::Zero(si.a1(), si.n2());
  for (const Triple& tr : noise_on_omega.triples()) t.col(tr.col) += tr.value * x_t.col(tr.row);
  const Matrix g = (t * si.y) / noise_on_omega.p();
  return spectral_norm(g);
}

double relative_error(const Matrix& l_hat, const Matrix& l_star) {
  if (l_hat.rows() != l_star.rows() || l_hat.cols() != l_star.cols())
    throw_invalid("relative_error: shape mismatch");
  const double denom = l_star.norm();
  if (denom == 0.0) throw_invalid("relative_error: ||L*||_F is zero");
  return (l_hat - l_star).norm() / denom;
}

double misspec_residual(const Matrix& l, const SideInfo& si) {
  if (l.rows() != si.n1() || l.cols() != si.n2())
    throw_invalid("misspec_residual: shape mismatch");
  const double total_sq = l.squaredNorm();
  const double inside_sq = (si.x.transpose() * l * si.y).squaredNorm();
  double residual_sq = total_sq - inside_sq;
  if (residual_sq < 0.0) {
    if (residual_sq < -1e-9 * total_sq)
      throw std::runtime_error(
          "misspec_residual: projected norm exceeds total norm; side info is not orthonormal");
    residual_sq = 0.0;
  }
  return std::sqrt(residual_sq);
}

InstanceReport instance_report(const GroundTruth& truth, const SideInfo& si,
                               const ObservationSet& obs, const ObservationSet* noise_on_omega) {
  InstanceReport rep;
  rep.mu0 = incoherence(truth.l_star, truth.rank);
  std::tie(rep.mu1, rep.mu2) = side_info_incoherence(si);
  rep.kappa = truth.kappa;
  rep.gamma_e = noise_on_omega != nullptr ? effective_noise(*noise_on_omega, si) : 0.0;
  rep.sample_count = obs.size();

  const double n = static_cast<double>(std::max(obs.n1(), obs.n2()));
  const double effective = std::max(rep.mu1 * static_cast<double>(si.a1()),
                                    rep.mu2 * static_cast<double>(si.a2()));
  const double r = static_cast<double>(truth.rank);
  const double denom =
      rep.kappa * rep.kappa * effective * rep.mu0 * rep.mu0 * r * r * std::log(n);
  rep.sample_ratio =
      static_cast<double>(obs.n1()) * static_cast<double>(obs.n2()) * obs.p() / denom;
  return rep;
}

void InstanceReport::write_csv(std::ostream& os) const {
  os << "mu0,mu1,mu2,kappa,gamma_E,sample_count,sample_ratio\n"
     << format_double(mu0) << ',' << format_double(mu1) << ',' << format_double(mu2) << ','
     << format_double(kappa) << ',' << format_double(gamma_e) << ',' << sample_count << ','
     << format_double(sample_ratio) << '\n';
}

void InstanceReport::print(std::ostream& os) const {
  os << "incoherence mu0 (L*):        " << mu0 << '\n'
     << "incoherence mu1 (X):         " << mu1 << '\n'
     << "incoherence mu2 (Y):         " << mu2 << '\n'
     << "condition number kappa (Z):  " << kappa << '\n'
     << "effective noise gamma_E:     " << gamma_e << '\n'
     << "observed entries |Omega|:    " << sample_count << '\n'
     << "sample ratio (C_sample = 1): " << sample_ratio << '\n';
}

}  // namespace imc
