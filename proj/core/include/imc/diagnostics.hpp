#pragma once

#include <iosfwd>

#include "imc/observation.hpp"
#include "imc/types.hpp"

namespace imc {

/// The scalar quantities the error and sample-size conditions are stated in.
struct InstanceReport {
  double mu0 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double kappa = 0.0;
  double gamma_e = 0.0;
  std::size_t sample_count = 0;
  /// n1 n2 p / (kappa^2 (mu1 a1 v mu2 a2) mu0^2 r^2 log n), unit constant.
  double sample_ratio = 0.0;

  void write_csv(std::ostream& os) const;
  void print(std::ostream& os) const;
};

/// Incoherence of a rank-r matrix: max(n1/r max_lev(U), n2/r max_lev(V)) with
/// the leverage scores taken from the rank-r singular subspaces, so the value
/// does not depend on the sign or rotation choices of the SVD backend.
double incoherence(const Matrix& m, Index r);

/// (mu1, mu2) of the side-information bases: n/a * ||.||_{2,inf}^2.
std::pair<double, double> side_info_incoherence(const SideInfo& si);

/// gamma_E = (1/p) || X^T P_Omega(E) Y ||, the effective noise size.
double effective_noise(const ObservationSet& noise_on_omega, const SideInfo& si);

/// ||L_hat - L*||_F / ||L*||_F.
double relative_error(const Matrix& l_hat, const Matrix& l_star);

/// || L - X X^T L Y Y^T ||_F via the orthogonal split
/// ||L||_F^2 - ||X^T L Y||_F^2; tiny negative residuals are roundoff and
/// clamp to zero, larger ones indicate broken orthonormality and throw.
double misspec_residual(const Matrix& l, const SideInfo& si);

/// Full report for a synthetic instance.
InstanceReport instance_report(const GroundTruth& truth, const SideInfo& si,
                               const ObservationSet& obs,
                               const ObservationSet* noise_on_omega = nullptr);

}  // namespace imc
