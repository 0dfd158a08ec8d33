#include "imc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "imc/diagnostics.hpp"
#include "imc/io.hpp"
#include "imc/movielens.hpp"

namespace imc {
namespace experiments {

namespace {

// Stream roles; combined with grid indices and the trial number so every
// random object is a pure function of (seed, cell).
enum Role : std::uint64_t {
  kRoleTruth = 1,
  kRoleOmega = 2,
  kRoleNoise = 3,
  kRoleSideX = 4,
  kRoleSideY = 5,
  kRoleShuffle = 6,
};

struct TruthContext {
  GroundTruth truth;
  SideInfo exact_si;
  double mu0;
  Matrix u_star;
  Matrix v_star;
};

std::shared_ptr<const TruthContext> make_truth_context(const ExperimentConfig& cfg,
                                                       std::uint64_t trial_stream) {
  Rng rng(cfg.seed, derive_stream({kRoleTruth, trial_stream}));
  SyntheticInstance inst = gen_ground_truth(cfg.n1, cfg.n2, cfg.a1, cfg.a2, cfg.rank, rng);
  auto [u_star, v_star] = truth_singular_subspaces(inst.truth);
  const double mu0 = truth_incoherence(inst.truth);
  return std::make_shared<TruthContext>(TruthContext{
      std::move(inst.truth), std::move(inst.exact_side_info), mu0, std::move(u_star),
      std::move(v_star)});
}

// Fixed instance shared across trials unless regen_truth asks otherwise.
class TruthProvider {
 public:
  explicit TruthProvider(const ExperimentConfig& cfg) : cfg_(cfg) {
    if (!cfg.regen_truth) fixed_ = make_truth_context(cfg, 0);
  }

  std::shared_ptr<const TruthContext> get(int trial) const {
    if (fixed_) return fixed_;
    return make_truth_context(cfg_, static_cast<std::uint64_t>(trial) + 1);
  }

 private:
  const ExperimentConfig& cfg_;
  std::shared_ptr<const TruthContext> fixed_;
};

SolverConfig solver_config(const ExperimentConfig& cfg, double default_rel_tol, double mu0) {
  SolverConfig sc;
  sc.rank = cfg.rank;
  sc.step_size = cfg.solver.step_size;
  sc.step_scale = cfg.solver.step_scale;
  sc.safe_step = cfg.solver.safe_step;
  sc.max_iters = cfg.solver.max_iters;
  sc.rel_tol = cfg.solver.rel_tol >= 0.0 ? cfg.solver.rel_tol : default_rel_tol;
  sc.projection = cfg.solver.projection;
  sc.mu0_hint = mu0;
  sc.seed = cfg.seed;
  return sc;
}

ObservationSet make_observations(const TruthContext& ctx, const ExperimentConfig& cfg,
                                 double p, std::uint64_t cell, int trial) {
  Rng omega_rng(cfg.seed, derive_stream({kRoleOmega, cell, static_cast<std::uint64_t>(trial)}));
  auto omega = sample_omega(cfg.n1, cfg.n2, p, omega_rng);
  Rng noise_rng(cfg.seed, derive_stream({kRoleNoise, cell, static_cast<std::uint64_t>(trial)}));
  return add_noise(ctx.truth.l_star, omega, p, cfg.sigma, noise_rng);
}

SideInfo make_inexact_side_info(const TruthContext& ctx, const ExperimentConfig& cfg,
                                double delta, std::uint64_t cell, int trial) {
  Rng x_rng(cfg.seed, derive_stream({kRoleSideX, cell, static_cast<std::uint64_t>(trial)}));
  Rng y_rng(cfg.seed, derive_stream({kRoleSideY, cell, static_cast<std::uint64_t>(trial)}));
  Matrix x = gen_inexact_side_info(ctx.u_star, cfg.a1, delta, x_rng);
  Matrix y = gen_inexact_side_info(ctx.v_star, cfg.a2, delta, y_rng);
  return SideInfo(std::move(x), std::move(y));
}

ResultRow make_row(const std::string& experiment, int trial, std::optional<double> p,
                   std::optional<double> delta, std::optional<double> lambda,
                   const std::string& method, const std::string& metric, double value) {
  ResultRow row;
  row.experiment = experiment;
  row.trial = trial;
  row.p = p;
  row.delta = delta;
  row.lambda = lambda;
  row.method = method;
  row.metric = metric;
  row.value = value;
  return row;
}

ResultRow failed_row(ResultRow row, const std::string& note) {
  row.failed = true;
  row.value = 0.0;
  row.note = note;
  return row;
}

// Runs one solver, emitting rel_error (and optionally success) rows;
// divergence becomes an accounted failure instead of aborting the sweep.
template <typename Solve>
void record_solver(std::vector<ResultRow>& rows, const ExperimentConfig& cfg,
                   const std::string& method, int trial, std::optional<double> p,
                   std::optional<double> delta, std::optional<double> lambda, bool with_success,
                   Solve&& solve) {
  ResultRow err = make_row(cfg.experiment, trial, p, delta, lambda, method, "rel_error", 0.0);
  try {
    const SolverTrace trace = solve();
    err.value = trace.final_rel_error().value();
    rows.push_back(err);
    if (with_success)
      rows.push_back(make_row(cfg.experiment, trial, p, delta, lambda, method, "success",
                              err.value < cfg.success_threshold ? 1.0 : 0.0));
  } catch (const DivergenceError& e) {
    rows.push_back(failed_row(err, e.what()));
    if (with_success) {
      ResultRow s = make_row(cfg.experiment, trial, p, delta, lambda, method, "success", 0.0);
      s.note = "diverged";
      rows.push_back(s);
    }
  }
}

ResultTable collect(std::size_t count, int threads,
                    const std::function<std::vector<ResultRow>(std::size_t)>& job) {
  std::vector<std::vector<ResultRow>> slots(count);
  parallel_for(count, threads, [&](std::size_t k) { slots[k] = job(k); });
  ResultTable table;
  for (auto& slot : slots)
    for (auto& row : slot) table.rows.push_back(std::move(row));
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n1 < 1 || n2 < 1 || a1 < 1 || a2 < 1) throw_invalid("ExperimentConfig: bad dimensions");
  if (rank < 1 || rank > std::min(a1, a2)) throw_invalid("ExperimentConfig: bad rank");
  if (trials < 1) throw_invalid("ExperimentConfig: trials must be >= 1");
  if (sigma < 0.0) throw_invalid("ExperimentConfig: sigma must be >= 0");
  auto check_grid = [](const std::vector<double>& grid, const char* name) {
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (grid[i] <= grid[i - 1])
        throw_invalid(std::string("ExperimentConfig: ") + name + " must be strictly increasing");
  };
  check_grid(p_grid, "p grid");
  check_grid(delta_grid, "delta grid");
  check_grid(lambda_grid, "lambda grid");
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(count)));
  if (n_threads == 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= count) return;
      try {
        body(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::pair<Matrix, Matrix> truth_singular_subspaces(const GroundTruth& truth) {
  const SvdResult dec = svd(truth.z, truth.rank);
  return {truth.x_star * dec.u, truth.y_star * dec.v};
}

double truth_incoherence(const GroundTruth& truth) {
  auto [u_star, v_star] = truth_singular_subspaces(truth);
  const double r = static_cast<double>(truth.rank);
  const double lev_u = u_star.rowwise().squaredNorm().maxCoeff();
  const double lev_v = v_star.rowwise().squaredNorm().maxCoeff();
  return std::max(static_cast<double>(truth.n1()) / r * lev_u,
                  static_cast<double>(truth.n2()) / r * lev_v);
}

ResultTable run_phase(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.sigma != 0.0) throw_invalid("run_phase: requires sigma = 0");
  if (cfg.p_grid.empty()) throw_invalid("run_phase: empty p grid");
  TruthProvider truths(cfg);

  const std::size_t count = cfg.p_grid.size() * static_cast<std::size_t>(cfg.trials);
  return collect(count, cfg.threads, [&](std::size_t k) {
    const std::size_t p_idx = k / cfg.trials;
    const int trial = static_cast<int>(k % cfg.trials);
    const double p = cfg.p_grid[p_idx];
    auto ctx = truths.get(trial);
    const ObservationSet obs = make_observations(*ctx, cfg, p, p_idx, trial);
    const SolverConfig sc = solver_config(cfg, 0.0, ctx->mu0);

    std::vector<ResultRow> rows;
    record_solver(rows, cfg, "imc", trial, p, std::nullopt, std::nullopt, true,
                  [&] { return solve_imc(obs, ctx->exact_si, sc, &ctx->truth); });
    record_solver(rows, cfg, "mc", trial, p, std::nullopt, std::nullopt, true,
                  [&] { return solve_mc(obs, sc, &ctx->truth); });
    return rows;
  });
}

ResultTable run_phase_imc_fine(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.sigma != 0.0) throw_invalid("run_phase_imc_fine: requires sigma = 0");
  TruthProvider truths(cfg);

  const std::size_t count = cfg.p_grid.size() * static_cast<std::size_t>(cfg.trials);
  return collect(count, cfg.threads, [&](std::size_t k) {
    const std::size_t p_idx = k / cfg.trials;
    const int trial = static_cast<int>(k % cfg.trials);
    const double p = cfg.p_grid[p_idx];
    auto ctx = truths.get(trial);
    const ObservationSet obs = make_observations(*ctx, cfg, p, p_idx, trial);
    const SolverConfig sc = solver_config(cfg, 0.0, ctx->mu0);

    std::vector<ResultRow> rows;
    record_solver(rows, cfg, "imc", trial, p, std::nullopt, std::nullopt, true,
                  [&] { return solve_imc(obs, ctx->exact_si, sc, &ctx->truth); });
    return rows;
  });
}

ResultTable run_noisy_error(const ExperimentConfig& cfg) {
  cfg.validate();
  TruthProvider truths(cfg);

  const std::size_t count = cfg.p_grid.size() * static_cast<std::size_t>(cfg.trials);
  return collect(count, cfg.threads, [&](std::size_t k) {
    const std::size_t p_idx = k / cfg.trials;
    const int trial = static_cast<int>(k % cfg.trials);
    const double p = cfg.p_grid[p_idx];
    auto ctx = truths.get(trial);
    const ObservationSet obs = make_observations(*ctx, cfg, p, p_idx, trial);
    const SolverConfig sc = solver_config(cfg, 1e-12, ctx->mu0);

    std::vector<ResultRow> rows;
    record_solver(rows, cfg, "imc", trial, p, std::nullopt, std::nullopt, false,
                  [&] { return solve_imc(obs, ctx->exact_si, sc, &ctx->truth); });
    record_solver(rows, cfg, "mc", trial, p, std::nullopt, std::nullopt, false,
                  [&] { return solve_mc(obs, sc, &ctx->truth); });
    return rows;
  });
}

ResultTable run_inexact(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.delta_grid.empty()) throw_invalid("run_inexact: empty delta grid");
  TruthProvider truths(cfg);

  // MC once per (p, trial); IMC per (p, delta, trial).
  const std::size_t mc_count = cfg.p_grid.size() * static_cast<std::size_t>(cfg.trials);
  const std::size_t count = mc_count * (1 + cfg.delta_grid.size());
  return collect(count, cfg.threads, [&](std::size_t k) {
    const std::size_t block = k / mc_count;  // 0 = mc, 1.. = delta index + 1
    const std::size_t rem = k % mc_count;
    const std::size_t p_idx = rem / cfg.trials;
    const int trial = static_cast<int>(rem % cfg.trials);
    const double p = cfg.p_grid[p_idx];
    auto ctx = truths.get(trial);
    const ObservationSet obs = make_observations(*ctx, cfg, p, p_idx, trial);
    const SolverConfig sc = solver_config(cfg, 1e-12, ctx->mu0);

    std::vector<ResultRow> rows;
    if (block == 0) {
      record_solver(rows, cfg, "mc", trial, p, std::nullopt, std::nullopt, false,
                    [&] { return solve_mc(obs, sc, &ctx->truth); });
    } else {
      const std::size_t d_idx = block - 1;
      const double delta = cfg.delta_grid[d_idx];
      const SideInfo si = make_inexact_side_info(*ctx, cfg, delta, d_idx, trial);
      record_solver(rows, cfg, "imc", trial, p, delta, std::nullopt, false,
                    [&] { return solve_imc(obs, si, sc, &ctx->truth); });
    }
    return rows;
  });
}

ResultTable run_delta_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.p_grid.size() != 1) throw_invalid("run_delta_sweep: needs exactly one p");
  if (cfg.delta_grid.empty()) throw_invalid("run_delta_sweep: empty delta grid");
  TruthProvider truths(cfg);
  const double p = cfg.p_grid.front();

  const std::size_t count = cfg.delta_grid.size() * static_cast<std::size_t>(cfg.trials);
  return collect(count, cfg.threads, [&](std::size_t k) {
    const std::size_t d_idx = k / cfg.trials;
    const int trial = static_cast<int>(k % cfg.trials);
    const double delta = cfg.delta_grid[d_idx];
    auto ctx = truths.get(trial);
    const ObservationSet obs = make_observations(*ctx, cfg, p, d_idx, trial);
    const SideInfo si = make_inexact_side_info(*ctx, cfg, delta, d_idx, trial);
    const SolverConfig sc = solver_config(cfg, 1e-12, ctx->mu0);

    std::vector<ResultRow> rows;
    record_solver(rows, cfg, "imc", trial, p, delta, std::nullopt, false,
                  [&] { return solve_imc(obs, si, sc, &ctx->truth); });
    // The misspecification floor of this instance, for the error lower bound.
    rows.push_back(make_row(cfg.experiment, trial, p, delta, std::nullopt, "data",
                            "misspec_floor",
                            misspec_residual(ctx->truth.l_star, si) / ctx->truth.l_star.norm()));
    return rows;
  });
}

ResultTable run_interp(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.delta_grid.size() != 1) throw_invalid("run_interp: needs exactly one delta");
  if (cfg.lambda_grid.empty()) throw_invalid("run_interp: empty lambda grid");
  TruthProvider truths(cfg);
  const double delta = cfg.delta_grid.front();

  const std::size_t per_p = static_cast<std::size_t>(cfg.trials) * (cfg.lambda_grid.size() + 1);
  const std::size_t count = cfg.p_grid.size() * per_p;
  return collect(count, cfg.threads, [&](std::size_t k) {
    const std::size_t p_idx = k / per_p;
    const std::size_t rem = k % per_p;
    const std::size_t l_block = rem / cfg.trials;  // 0 = imc reference, 1.. = lambda
    const int trial = static_cast<int>(rem % cfg.trials);
    const double p = cfg.p_grid[p_idx];
    auto ctx = truths.get(trial);
    const ObservationSet obs = make_observations(*ctx, cfg, p, p_idx, trial);
    const SideInfo si = make_inexact_side_info(*ctx, cfg, delta, p_idx, trial);
    const SolverConfig sc = solver_config(cfg, 1e-12, ctx->mu0);

    std::vector<ResultRow> rows;
    if (l_block == 0) {
      record_solver(rows, cfg, "imc", trial, p, delta, std::nullopt, false,
                    [&] { return solve_imc(obs, si, sc, &ctx->truth); });
    } else {
      const double lambda = cfg.lambda_grid[l_block - 1];
      record_solver(rows, cfg, "interp", trial, p, delta, lambda, false,
                    [&] { return solve_interp(obs, si, lambda, sc, &ctx->truth); });
    }
    return rows;
  });
}

namespace {

std::vector<std::vector<std::size_t>> make_folds(std::size_t size, int folds, Rng& rng) {
  std::vector<std::size_t> order(size);
  for (std::size_t i = 0; i < size; ++i) order[i] = i;
  for (std::size_t i = size; i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::vector<std::size_t>> out(folds);
  for (std::size_t i = 0; i < size; ++i) out[i % folds].push_back(order[i]);
  return out;
}

double validation_mse(const SolverTrace& trace, const ObservationSet& obs,
                      const std::vector<std::size_t>& fold) {
  const Matrix& a = trace.final_factors.a;
  const Matrix& b = trace.final_factors.b;
  double acc = 0.0;
  for (std::size_t pos : fold) {
    const Triple& t = obs.triples()[pos];
    const double diff = a.row(t.row).dot(b.row(t.col)) - t.value;
    acc += diff * diff;
  }
  return acc / static_cast<double>(fold.size());
}

}  // namespace

ResultTable run_interp_cv(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.delta_grid.size() != 1) throw_invalid("run_interp_cv: needs exactly one delta");
  if (cfg.lambda_grid.empty()) throw_invalid("run_interp_cv: empty lambda grid");
  if (cfg.cv_folds < 2) throw_invalid("run_interp_cv: needs at least 2 folds");
  TruthProvider truths(cfg);
  const double delta = cfg.delta_grid.front();

  const std::size_t count = cfg.p_grid.size() * static_cast<std::size_t>(cfg.trials);
  return collect(count, cfg.threads, [&](std::size_t k) {
    const std::size_t p_idx = k / cfg.trials;
    const int trial = static_cast<int>(k % cfg.trials);
    const double p = cfg.p_grid[p_idx];
    auto ctx = truths.get(trial);
    const ObservationSet obs = make_observations(*ctx, cfg, p, p_idx, trial);
    const SideInfo si = make_inexact_side_info(*ctx, cfg, delta, p_idx, trial);
    const SolverConfig sc = solver_config(cfg, 1e-12, ctx->mu0);

    Rng fold_rng(cfg.seed,
                 derive_stream({kRoleShuffle, p_idx, static_cast<std::uint64_t>(trial)}));
    const auto folds = make_folds(obs.size(), cfg.cv_folds, fold_rng);
    for (const auto& fold : folds)
      if (fold.empty())
        throw std::runtime_error("run_interp_cv: empty validation fold; |Omega| too small");

    std::vector<ResultRow> rows;
    double best_lambda = cfg.lambda_grid.front();
    double best_mse = std::numeric_limits<double>::infinity();
    for (const double lambda : cfg.lambda_grid) {
      double mse_sum = 0.0;
      for (int f = 0; f < cfg.cv_folds; ++f) {
        std::vector<std::size_t> train;
        train.reserve(obs.size() - folds[f].size());
        for (int g = 0; g < cfg.cv_folds; ++g)
          if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
        std::sort(train.begin(), train.end());
        const ObservationSet train_obs =
            obs.subset(train, static_cast<double>(train.size()) /
                                  static_cast<double>(obs.size()));
        const SolverTrace trace = solve_interp(train_obs, si, lambda, sc);
        mse_sum += validation_mse(trace, obs, folds[f]);
      }
      const double mean_mse = mse_sum / cfg.cv_folds;
      rows.push_back(
          make_row(cfg.experiment, trial, p, delta, lambda, "interp", "cv_mse", mean_mse));
      // Ties break toward larger lambda: prefer more structure.
      if (mean_mse <= best_mse) {
        best_mse = mean_mse;
        best_lambda = lambda;
      }
    }

    rows.push_back(make_row(cfg.experiment, trial, p, delta, std::nullopt, "interp",
                            "lambda_star", best_lambda));
    record_solver(rows, cfg, "interp", trial, p, delta, best_lambda, false,
                  [&] { return solve_interp(obs, si, best_lambda, sc, &ctx->truth); });
    record_solver(rows, cfg, "imc", trial, p, delta, std::nullopt, false,
                  [&] { return solve_imc(obs, si, sc, &ctx->truth); });
    record_solver(rows, cfg, "mc", trial, p, delta, std::nullopt, false,
                  [&] { return solve_mc(obs, sc, &ctx->truth); });
    return rows;
  });
}

ResultTable run_projection_check(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.p_grid.size() != 1) throw_invalid("run_projection_check: needs exactly one p");
  TruthProvider truths(cfg);
  const double p = cfg.p_grid.front();

  std::vector<std::optional<SolverTrace>> traces(cfg.trials);

  ExperimentConfig monitored = cfg;
  monitored.solver.projection = ProjectionMode::monitor;

  ResultTable table =
      collect(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t k) {
        const int trial = static_cast<int>(k);
        auto ctx = truths.get(trial);
        const ObservationSet obs = make_observations(*ctx, cfg, p, 0, trial);
        const SolverConfig sc = solver_config(monitored, 0.0, ctx->mu0);
        const SolverTrace trace = solve_imc(obs, ctx->exact_si, sc, &ctx->truth);

        double max_ratio_a = 0.0, max_ratio_b = 0.0;
        bool any_active = false;
        for (const TraceRecord& rec : trace.records) {
          max_ratio_a = std::max(max_ratio_a, rec.two_inf_a / trace.projection_radius);
          max_ratio_b = std::max(max_ratio_b, rec.two_inf_b / trace.projection_radius);
          any_active = any_active || rec.projection_active;
        }
        std::vector<ResultRow> rows;
        rows.push_back(make_row(cfg.experiment, trial, p, std::nullopt, std::nullopt, "imc",
                                "max_ratio_a", max_ratio_a));
        rows.push_back(make_row(cfg.experiment, trial, p, std::nullopt, std::nullopt, "imc",
                                "max_ratio_b", max_ratio_b));
        rows.push_back(make_row(cfg.experiment, trial, p, std::nullopt, std::nullopt, "imc",
                                "projection_active", any_active ? 1.0 : 0.0));
        traces[k] = trace;
        return rows;
      });

  // Per-iteration norm trace for the figure: one representative trial.
  if (!cfg.out_dir.empty() && traces[0].has_value()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream os(cfg.out_dir + "/projection_trace.csv");
    const SolverTrace& t = *traces[0];
    os << "iter,two_inf_A,two_inf_B,radius\n";
    for (const TraceRecord& rec : t.records)
      os << rec.iter << ',' << format_double(rec.two_inf_a) << ',' << format_double(rec.two_inf_b)
         << ',' << format_double(t.projection_radius) << '\n';
  }
  return table;
}

ResultTable run_movielens(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.movielens_dir.empty()) throw_invalid("run_movielens: dataset directory not set");
  if (cfg.m_grid.empty()) throw_invalid("run_movielens: empty m grid");
  const movielens::RatingsTable table = movielens::load_movielens(cfg.movielens_dir);

  const std::size_t count = cfg.m_grid.size() * static_cast<std::size_t>(cfg.trials);
  ResultTable results = collect(count, cfg.threads, [&](std::size_t k) {
    const std::size_t m_idx = k / cfg.trials;
    const int trial = static_cast<int>(k % cfg.trials);
    const std::size_t m = cfg.m_grid[m_idx];
    Rng split_rng(cfg.seed,
                  derive_stream({kRoleShuffle, m_idx, static_cast<std::uint64_t>(trial)}));
    auto [train, test] = movielens::split_train_test(table, m, split_rng);
    const ObservationSet obs = movielens::to_observations(table, train);
    const double p_hat = obs.p();

    const movielens::BuiltSideInfo built = movielens::build_side_info(table, train);
    SolverConfig sc = solver_config(cfg, 1e-12, 1.0);

    std::vector<ResultRow> rows;

    // Cold-start accounting: users/movies with no training observation.
    std::vector<char> user_seen(table.n_users(), 0), item_seen(table.n_items(), 0);
    for (std::size_t pos : train) {
      user_seen[table.ratings[pos].user] = 1;
      item_seen[table.ratings[pos].item] = 1;
    }
    const double cold_users = static_cast<double>(
        std::count(user_seen.begin(), user_seen.end(), 0));
    const double cold_items = static_cast<double>(
        std::count(item_seen.begin(), item_seen.end(), 0));
    rows.push_back(make_row(cfg.experiment, trial, p_hat, std::nullopt, std::nullopt, "data",
                            "cold_users", cold_users));
    rows.push_back(make_row(cfg.experiment, trial, p_hat, std::nullopt, std::nullopt, "data",
                            "cold_items", cold_items));
    rows.push_back(make_row(cfg.experiment, trial, p_hat, std::nullopt, std::nullopt, "data",
                            "m", static_cast<double>(m)));

    auto predict_and_score = [&](const Matrix& row_factors, const Matrix& col_factors) {
      std::vector<double> preds;
      preds.reserve(test.size());
      for (std::size_t pos : test) {
        const movielens::Rating& rt = table.ratings[pos];
        preds.push_back(row_factors.row(rt.user).dot(col_factors.row(rt.item)));
      }
      return movielens::evaluate_rmse(preds, table, test);
    };

    {
      ResultRow row = make_row(cfg.experiment, trial, p_hat, std::nullopt, std::nullopt, "imc",
                               "rmse", 0.0);
      try {
        const SolverTrace trace = solve_imc(obs, built.side_info, sc);
        const Matrix xa = built.side_info.x * trace.final_factors.a;
        const Matrix yb = built.side_info.y * trace.final_factors.b;
        row.value = predict_and_score(xa, yb);
        rows.push_back(row);
      } catch (const DivergenceError& e) {
        rows.push_back(failed_row(row, e.what()));
      }
    }
    {
      ResultRow row = make_row(cfg.experiment, trial, p_hat, std::nullopt, std::nullopt, "mc",
                               "rmse", 0.0);
      try {
        const SolverTrace trace = solve_mc(obs, sc);
        row.value = predict_and_score(trace.final_factors.a, trace.final_factors.b);
        rows.push_back(row);
      } catch (const DivergenceError& e) {
        rows.push_back(failed_row(row, e.what()));
      }
    }
    return rows;
  });

  // Dedicated results file in the movielens schema: m,trial,method,rmse.
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream os(cfg.out_dir + "/movielens_rmse.csv");
    os << "m,trial,method,rmse\n";
    for (std::size_t m_idx = 0; m_idx < cfg.m_grid.size(); ++m_idx)
      for (int trial = 0; trial < cfg.trials; ++trial)
        for (const char* method : {"imc", "mc"}) {
          for (const ResultRow& row : results.rows) {
            const double p_hat = static_cast<double>(cfg.m_grid[m_idx]) /
                                 (static_cast<double>(table.n_users()) *
                                  static_cast<double>(table.n_items()));
            if (row.trial == trial && row.method == method && row.metric == "rmse" &&
                !row.failed && row.p && *row.p == p_hat)
              os << cfg.m_grid[m_idx] << ',' << trial << ',' << method << ','
                 << format_double(row.value) << '\n';
          }
        }
  }
  return results;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "phase") return run_phase(cfg);
  if (cfg.experiment == "phase-imc-fine") return run_phase_imc_fine(cfg);
  if (cfg.experiment == "noisy-error") return run_noisy_error(cfg);
  if (cfg.experiment == "inexact-error") return run_inexact(cfg);
  if (cfg.experiment == "delta-sweep") return run_delta_sweep(cfg);
  if (cfg.experiment == "interp-sweep") return run_interp(cfg);
  if (cfg.experiment == "interp-cv") return run_interp_cv(cfg);
  if (cfg.experiment == "projection-check") return run_projection_check(cfg);
  if (cfg.experiment == "movielens") return run_movielens(cfg);
  throw_invalid("unknown experiment id: " + cfg.experiment);
}

}  // namespace experiments
}  // namespace imc
