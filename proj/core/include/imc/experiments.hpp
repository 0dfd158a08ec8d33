#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "imc/solver.hpp"
#include "imc/synthetic.hpp"

namespace imc {
namespace experiments {

struct SolverOverrides {
  double step_size = 0.0;  // 0 = automatic
  double step_scale = 0.5;
  bool safe_step = false;
  int max_iters = 2000;
  double rel_tol = -1.0;  // < 0 = per-experiment default
  ProjectionMode projection = ProjectionMode::monitor;
};

struct ExperimentConfig {
  std::string experiment;
  Index n1 = 200, n2 = 200, a1 = 20, a2 = 20, rank = 5;
  std::vector<double> p_grid;
  std::vector<double> delta_grid;
  std::vector<double> lambda_grid;
  double sigma = 0.0;
  int trials = 20;
  std::uint64_t seed = 1;
  std::string out_dir = "results";
  SolverOverrides solver;
  /// Regenerate L* per trial instead of fixing it across trials.
  bool regen_truth = false;
  int threads = 0;  // 0 = hardware concurrency
  double success_threshold = 1e-3;
  std::string movielens_dir;
  std::vector<std::size_t> m_grid;
  int cv_folds = 5;

  void validate() const;
};

/// One long-format result cell. Key columns that do not apply to the
/// experiment stay empty in the CSV.
struct ResultRow {
  std::string experiment;
  int trial = 0;
  std::optional<double> p;
  std::optional<double> delta;
  std::optional<double> lambda;
  std::string method;
  std::string metric;
  double value = 0.0;
  bool failed = false;
  std::string note;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  void write_csv(std::ostream& os) const;
  void write_csv_file(const std::string& path) const;

  /// Mean of non-failed values matching the selector; count_failed reports
  /// how many matching cells were excluded.
  double mean(const std::string& method, const std::string& metric,
              std::optional<double> p = std::nullopt, std::optional<double> delta = std::nullopt,
              std::optional<double> lambda = std::nullopt, int* count_failed = nullptr) const;
};

ResultTable run_phase(const ExperimentConfig& cfg);
ResultTable run_phase_imc_fine(const ExperimentConfig& cfg);
ResultTable run_noisy_error(const ExperimentConfig& cfg);
ResultTable run_inexact(const ExperimentConfig& cfg);
ResultTable run_delta_sweep(const ExperimentConfig& cfg);
ResultTable run_interp(const ExperimentConfig& cfg);
ResultTable run_interp_cv(const ExperimentConfig& cfg);
ResultTable run_projection_check(const ExperimentConfig& cfg);
ResultTable run_movielens(const ExperimentConfig& cfg);

/// Dispatch by cfg.experiment.
ResultTable run_experiment(const ExperimentConfig& cfg);

/// Per-figure data CSVs plus self-contained Vega-Lite plot specs. No
/// plotting library is linked; the specs are declarative JSON any Vega
/// runtime renders. Re-running on an identical table is byte-identical.
void emit_plots(const ResultTable& table, const std::string& out_dir);

enum class Preset { paper, desk };

/// Paper-scale (n = 1000, a = 50, r = 10) and desk-scale (n = 200, a = 20,
/// r = 5) defaults for every experiment. Desk grids come from the committed
/// pilot sweep.
ExperimentConfig make_preset(const std::string& experiment, Preset preset);

/// True singular subspaces of L* (U* = X* U_z, V* = Y* V_z), the reference
/// for inexact-side-information generation.
std::pair<Matrix, Matrix> truth_singular_subspaces(const GroundTruth& truth);

/// mu0 of L* through the factored form; avoids the ambient SVD.
double truth_incoherence(const GroundTruth& truth);

/// Runs tasks on a small work pool; each task writes only its own slot, so
/// results do not depend on scheduling order.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace experiments
}  // namespace imc
