#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "imc/observation.hpp"
#include "imc/types.hpp"

namespace imc {

enum class ProjectionMode { enforce, monitor, off };

struct SolverConfig {
  Index rank = 1;
  /// Explicit step size; <= 0 selects the automatic step step_scale / ||Z0||.
  double step_size = 0.0;
  double step_scale = 0.5;
  /// Conservative theory step [480000 (n/n_min)^2 mu0^2 r^2 kappa sigma_max]^-1.
  bool safe_step = false;
  int max_iters = 2000;
  /// Stop when the relative change of the loss drops below this; 0 disables.
  double rel_tol = 1e-12;
  ProjectionMode projection = ProjectionMode::monitor;
  double mu0_hint = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceRecord {
  int iter = 0;
  double loss = 0.0;
  std::optional<double> rel_error;
  double two_inf_a = 0.0;
  double two_inf_b = 0.0;
  bool projection_active = false;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  FactorPair final_factors;
  double z0_norm = 0.0;
  double projection_radius = 0.0;
  double step_size = 0.0;
  std::vector<std::string> warnings;

  explicit SolverTrace(FactorPair init) : final_factors(std::move(init)) {}

  const TraceRecord& final_record() const { return records.back(); }
  double final_loss() const { return records.back().loss; }
  std::optional<double> final_rel_error() const { return records.back().rel_error; }
};

/// Thrown when the loss exceeds 1e6 x its initial value; names the step size
/// so a bad eta fails loudly instead of producing NaN traces.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double eta, int iter, double loss, double initial_loss);
  double eta;
  int iter;
};

/// Serializes records as iter,loss,rel_error,two_inf_A,two_inf_B,projection_active.
void write_trace_csv(std::ostream& os, const SolverTrace& trace);

// ---- IMC objective: (1/2p) ||P_Omega(X A B^T Y^T - M)||_F^2
//                   + (1/16) ||A^T A - B^T B||_F^2

double imc_loss(const FactorPair& f, const ObservationSet& obs, const SideInfo& si);
FactorPair imc_gradient(const FactorPair& f, const ObservationSet& obs, const SideInfo& si);

struct SpectralInit {
  FactorPair factors;
  double z0_norm;
  bool rank_deficient;
};

/// A0 = U0 (S0)^1/2, B0 = V0 (S0)^1/2 from the top-r SVD of
/// (1/p) X^T P_Omega(M) Y; z0_norm = S0(0) sizes the projection set.
SpectralInit spectral_init_imc(const ObservationSet& obs, const SideInfo& si, Index r);

/// Projection onto C = { ||X A||_{2,inf} <= radius, ||Y B||_{2,inf} <= radius }.
/// Interior points are returned unchanged with active = false. The set has no
/// closed-form projection for general X; an alternating row-clip/pull-back
/// scheme runs until feasible (hard rescale fallback after 50 rounds).
std::pair<FactorPair, bool> project_c(const FactorPair& f, const SideInfo& si, double radius);

SolverTrace solve_imc(const ObservationSet& obs, const SideInfo& si, const SolverConfig& cfg,
                      const GroundTruth* truth = nullptr);

// ---- Non-inductive MC objective on ambient factors A (n1 x r), B (n2 x r)

double mc_loss(const FactorPair& f, const ObservationSet& obs);
FactorPair mc_gradient(const FactorPair& f, const ObservationSet& obs);
SpectralInit spectral_init_mc(const ObservationSet& obs, Index r);
SolverTrace solve_mc(const ObservationSet& obs, const SolverConfig& cfg,
                     const GroundTruth* truth = nullptr);

// ---- Interpolation objective: MC loss + lambda ||L - X X^T L Y Y^T||_F^2,
//      L = A B^T, evaluated in factored form (no n1 x n2 product).

double interp_loss(const FactorPair& f, const ObservationSet& obs, const SideInfo& si,
                   double lambda);
FactorPair interp_gradient(const FactorPair& f, const ObservationSet& obs, const SideInfo& si,
                           double lambda);
SolverTrace solve_interp(const ObservationSet& obs, const SideInfo& si, double lambda,
                         const SolverConfig& cfg, const GroundTruth* truth = nullptr);

}  // namespace imc
