#include "imc/solver.hpp"

#include <cfloat>
#include <cmath>
#include <ostream>
#include <sstream>

#include "imc/io.hpp"

namespace imc {
namespace {

void check_imc_dims(const FactorPair& f, const ObservationSet& obs, const SideInfo& si) {
  if (si.n1() != obs.n1() || si.n2() != obs.n2()) {
    std::ostringstream oss;
    oss << "dimension mismatch: side info is " << si.n1() << "x" << si.n2()
        << ", observations are " << obs.n1() << "x" << obs.n2();
    throw_invalid(oss.str());
  }
  if (si.a1() != f.a.rows() || si.a2() != f.b.rows()) {
    std::ostringstream oss;
    oss << "dimension mismatch: factors are " << f.a.rows() << "/" << f.b.rows()
        << " rows, side info has a1/a2 = " << si.a1() << "/" << si.a2();
    throw_invalid(oss.str());
  }
}

void check_mc_dims(const FactorPair& f, const ObservationSet& obs) {
  if (obs.n1() != f.a.rows() || obs.n2() != f.b.rows()) {
    std::ostringstream oss;
    oss << "dimension mismatch: factors are " << f.a.rows() << "/" << f.b.rows()
        << " rows, observations are " << obs.n1() << "x" << obs.n2();
    throw_invalid(oss.str());
  }
}

// One pass over Omega for any objective whose data term is
// (1/2p) sum_t (lhs_i . rhs_j - v)^2, with lhs/rhs the effective row factors
// (X A / Y B for IMC, A / B for MC). Factor-transposed layout keeps the
// per-triple column accesses contiguous.
struct DataTerm {
  double loss = 0.0;
  Matrix grad_lhs_t;  // r x n1 = (1/p) (S * rhs)^T, S the sparse residual
  Matrix grad_rhs_t;  // r x n2 = (1/p) (S^T * lhs)^T
};

DataTerm data_term(const Matrix& lhs_t, const Matrix& rhs_t, const ObservationSet& obs,
                   bool with_grad) {
  DataTerm out;
  const double inv_p = 1.0 / obs.p();
  if (with_grad) {
    out.grad_lhs_t = Matrix::Zero(lhs_t.rows(), lhs_t.cols());
    out.grad_rhs_t = Matrix::Zero(rhs_t.rows(), rhs_t.cols());
  }
  double acc = 0.0;
  for (const Triple& t : obs.triples()) {
    const double s = lhs_t.col(t.row).dot(rhs_t.col(t.col)) - t.value;
    acc += s * s;
    if (with_grad) {
      out.grad_lhs_t.col(t.row) += s * rhs_t.col(t.col);
      out.grad_rhs_t.col(t.col) += s * lhs_t.col(t.row);
    }
  }
  out.loss = 0.5 * inv_p * acc;
  if (with_grad) {
    out.grad_lhs_t *= inv_p;
    out.grad_rhs_t *= inv_p;
  }
  return out;
}

struct Evaluation {
  double loss = 0.0;
  Matrix grad_a;
  Matrix grad_b;
  double two_inf_a = 0.0;
  double two_inf_b = 0.0;
};

double max_col_norm(const Matrix& m_t) { return m_t.colwise().norm().maxCoeff(); }

Evaluation eval_imc(const FactorPair& f, const ObservationSet& obs, const SideInfo& si,
                    bool with_grad) {
  Evaluation ev;
  const Matrix xa_t = (si.x * f.a).transpose();
  const Matrix yb_t = (si.y * f.b).transpose();
  ev.two_inf_a = max_col_norm(xa_t);
  ev.two_inf_b = max_col_norm(yb_t);

  const DataTerm data = data_term(xa_t, yb_t, obs, with_grad);
  const Matrix balance = f.a.transpose() * f.a - f.b.transpose() * f.b;
  ev.loss = data.loss + balance.squaredNorm() / 16.0;
  if (with_grad) {
    ev.grad_a = (data.grad_lhs_t * si.x).transpose() + 0.25 * f.a * balance;
    ev.grad_b = (data.grad_rhs_t * si.y).transpose() - 0.25 * f.b * balance;
  }
  return ev;
}

// Shared by the MC objective (lambda absent) and the interpolation objective.
// The penalty lambda ||L - X X^T L Y Y^T||_F^2 with L = A B^T is evaluated
// through the a-dimensional compressions C_A = X^T A, C_B = Y^T B:
//   penalty = lambda (tr(G_A G_B) - ||C_A C_B^T||_F^2)
//   d/dA    = 2 lambda (A G_B - X C_A (C_B^T C_B))
// so nothing n1 x n2 is ever formed.
Evaluation eval_ambient(const FactorPair& f, const ObservationSet& obs, const SideInfo* si,
                        double lambda, bool with_grad) {
  Evaluation ev;
  const Matrix a_t = f.a.transpose();
  const Matrix b_t = f.b.transpose();
  ev.two_inf_a = max_col_norm(a_t);
  ev.two_inf_b = max_col_norm(b_t);

  const DataTerm data = data_term(a_t, b_t, obs, with_grad);
  const Matrix gram_a = f.a.transpose() * f.a;
  const Matrix gram_b = f.b.transpose() * f.b;
  ev.loss = data.loss + (gram_a - gram_b).squaredNorm() / 16.0;
  if (with_grad) {
    ev.grad_a = data.grad_lhs_t.transpose() + 0.25 * f.a * (gram_a - gram_b);
    ev.grad_b = data.grad_rhs_t.transpose() - 0.25 * f.b * (gram_a - gram_b);
  }
  if (si != nullptr && lambda != 0.0) {
    const Matrix ca = si->x.transpose() * f.a;
    const Matrix cb = si->y.transpose() * f.b;
    const double full_sq = (gram_a.array() * gram_b.array()).sum();
    const double projected_sq = (ca * cb.transpose()).squaredNorm();
    ev.loss += lambda * std::max(0.0, full_sq - projected_sq);
    if (with_grad) {
      ev.grad_a += 2.0 * lambda * (f.a * gram_b - si->x * (ca * (cb.transpose() * cb)));
      ev.grad_b += 2.0 * lambda * (f.b * gram_a - si->y * (cb * (ca.transpose() * ca)));
    }
  }
  return ev;
}

SpectralInit init_from_svd(const SvdResult& dec, Index r) {
  SpectralInit init{FactorPair(Matrix::Zero(dec.u.rows(), r), Matrix::Zero(dec.v.rows(), r)), 0.0,
                    false};
  const Vector sqrt_s = dec.s.head(r).cwiseMax(0.0).cwiseSqrt();
  init.factors.a = dec.u.leftCols(r) * sqrt_s.asDiagonal();
  init.factors.b = dec.v.leftCols(r) * sqrt_s.asDiagonal();
  init.z0_norm = dec.s(0);
  init.rank_deficient = dec.s(r - 1) < 1e-14 * dec.s(0);
  return init;
}

double theorem_step(const ObservationSet& obs, double mu0, Index r, double kappa,
                    double sigma_max) {
  const double n = static_cast<double>(std::max(obs.n1(), obs.n2()));
  const double n_min = static_cast<double>(std::min(obs.n1(), obs.n2()));
  const double ratio = n / n_min;
  const double denom = 480000.0 * ratio * ratio * mu0 * mu0 * static_cast<double>(r * r) * kappa *
                       sigma_max;
  return denom > 0.0 ? 1.0 / denom : 1.0;
}

// How the per-solver pieces plug into the shared descent loop.
struct LoopHooks {
  std::function<Evaluation(const FactorPair&, bool)> eval;
  std::function<double(const FactorPair&)> rel_error;  // null when no truth
  std::function<std::pair<FactorPair, bool>(const FactorPair&)> project;  // null: no projection
  ProjectionMode mode = ProjectionMode::off;
  double radius = 0.0;
};

SolverTrace run_descent(FactorPair f, const SolverConfig& cfg, const SpectralInit& init,
                        double eta, const LoopHooks& hooks) {
  SolverTrace trace(f);
  trace.z0_norm = init.z0_norm;
  trace.projection_radius = hooks.radius;
  trace.step_size = eta;
  if (init.rank_deficient)
    trace.warnings.push_back("spectral initialization is rank-deficient at the requested rank");

  const double feasible_slack = hooks.radius * (1.0 + tol::projection_feasible);
  bool last_active = false;
  if (hooks.mode == ProjectionMode::enforce && hooks.project) {
    auto [projected, active] = hooks.project(f);
    last_active = active;
    f = std::move(projected);
  }

  double initial_loss = 0.0;
  double prev_loss = 0.0;
  for (int iter = 0; iter <= cfg.max_iters; ++iter) {
    const bool final_iter = iter == cfg.max_iters;
    Evaluation ev = hooks.eval(f, !final_iter);

    TraceRecord rec;
    rec.iter = iter;
    rec.loss = ev.loss;
    rec.two_inf_a = ev.two_inf_a;
    rec.two_inf_b = ev.two_inf_b;
    // In monitor mode "active" means the iterate violates C (the projection
    // would move it); in enforce mode it reports the actual projection.
    rec.projection_active =
        hooks.mode == ProjectionMode::monitor
            ? (ev.two_inf_a > feasible_slack || ev.two_inf_b > feasible_slack)
            : last_active;
    if (hooks.rel_error) rec.rel_error = hooks.rel_error(f);
    trace.records.push_back(rec);

    if (iter == 0) {
      initial_loss = ev.loss;
    } else {
      if (ev.loss > 1e6 * std::max(initial_loss, DBL_MIN))
        throw DivergenceError(eta, iter, ev.loss, initial_loss);
      if (cfg.rel_tol > 0.0 &&
          std::abs(prev_loss - ev.loss) <= cfg.rel_tol * std::max(prev_loss, DBL_MIN))
        break;
    }
    prev_loss = ev.loss;
    if (final_iter) break;

    f.a -= eta * ev.grad_a;
    f.b -= eta * ev.grad_b;

    last_active = false;
    if (hooks.mode == ProjectionMode::enforce && hooks.project) {
      auto [projected, active] = hooks.project(f);
      last_active = active;
      f = std::move(projected);
    }
  }

  trace.final_factors = std::move(f);
  return trace;
}

double resolve_step(const SolverConfig& cfg, const ObservationSet& obs, const SvdResult& w_svd,
                    double z0_norm) {
  if (cfg.step_size > 0.0) return cfg.step_size;
  const double sigma_max = std::max(z0_norm, DBL_MIN);
  if (cfg.safe_step) {
    const double sigma_r = w_svd.s(std::min<Index>(cfg.rank, w_svd.s.size()) - 1);
    const double kappa = sigma_r > 0.0 ? z0_norm / sigma_r : 1.0;
    return theorem_step(obs, cfg.mu0_hint, cfg.rank, kappa, sigma_max);
  }
  return cfg.step_scale / sigma_max;
}

// An automatically selected step may be unstable in the data-starved regime
// where the sampled objective is rougher than sigma_max suggests. Retry with
// a smaller step, deterministically; an explicit user step still fails loudly.
SolverTrace run_descent_with_backoff(const FactorPair& init_factors, const SolverConfig& cfg,
                                     const SpectralInit& init, double eta,
                                     const LoopHooks& hooks) {
  const bool auto_step = cfg.step_size <= 0.0 && !cfg.safe_step;
  std::vector<std::string> retry_warnings;
  for (int attempt = 0;; ++attempt) {
    try {
      SolverTrace trace = run_descent(init_factors, cfg, init, eta, hooks);
      trace.warnings.insert(trace.warnings.end(), retry_warnings.begin(), retry_warnings.end());
      return trace;
    } catch (const DivergenceError&) {
      if (!auto_step || attempt >= 6) throw;
      eta *= 0.25;
      std::ostringstream oss;
      oss << "automatic step diverged; retrying with eta = " << eta;
      retry_warnings.push_back(oss.str());
    }
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (rank < 1) throw_invalid("SolverConfig: rank must be >= 1");
  if (max_iters < 1) throw_invalid("SolverConfig: max_iters must be >= 1");
  if (rel_tol < 0.0) throw_invalid("SolverConfig: rel_tol must be >= 0");
  if (step_size <= 0.0 && step_scale <= 0.0)
    throw_invalid("SolverConfig: automatic step needs step_scale > 0");
}

DivergenceError::DivergenceError(double eta_in, int iter_in, double loss, double initial_loss)
    : std::runtime_error([&] {
        std::ostringstream oss;
        oss << "solver diverged at iteration " << iter_in << ": loss " << loss << " exceeds 1e6 x "
            << "initial loss " << initial_loss << "; step size eta = " << eta_in
            << " is too large for this instance";
        return oss.str();
      }()),
      eta(eta_in),
      iter(iter_in) {}

void write_trace_csv(std::ostream& os, const SolverTrace& trace) {
  os << "iter,loss,rel_error,two_inf_A,two_inf_B,projection_active\n";
  for (const TraceRecord& rec : trace.records) {
    os << rec.iter << ',' << format_double(rec.loss) << ',';
    if (rec.rel_error) os << format_double(*rec.rel_error);
    os << ',' << format_double(rec.two_inf_a) << ',' << format_double(rec.two_inf_b) << ','
       << (rec.projection_active ? 1 : 0) << '\n';
  }
}

double imc_loss(const FactorPair& f, const ObservationSet& obs, const SideInfo& si) {
  check_imc_dims(f, obs, si);
  return eval_imc(f, obs, si, false).loss;
}

FactorPair imc_gradient(const FactorPair& f, const ObservationSet& obs, const SideInfo& si) {
  check_imc_dims(f, obs, si);
  Evaluation ev = eval_imc(f, obs, si, true);
  return FactorPair(std::move(ev.grad_a), std::move(ev.grad_b));
}

namespace {

// W = (1/p) X^T P_Omega(M) Y, assembled sparse-first: O(|Omega| a1 + n2 a1 a2).
SvdResult imc_observation_svd(const ObservationSet& obs, const SideInfo& si, Index k) {
  const Matrix x_t = si.x.transpose();
  Matrix t = Matrix::Zero(si.a1(), si.n2());
  for (const Triple& tr : obs.triples()) t.col(tr.col) += tr.value * x_t.col(tr.row);
  return svd((t * si.y) / obs.p(), k);
}

void check_init_args(const ObservationSet& obs, const SideInfo& si, Index r) {
  if (si.n1() != obs.n1() || si.n2() != obs.n2())
    throw_invalid("spectral_init_imc: side info / observation dimension mismatch");
  if (r < 1 || r > std::min(si.a1(), si.a2()))
    throw_invalid("spectral_init_imc: rank out of range");
}

}  // namespace

SpectralInit spectral_init_imc(const ObservationSet& obs, const SideInfo& si, Index r) {
  check_init_args(obs, si, r);
  return init_from_svd(imc_observation_svd(obs, si, r), r);
}

std::pair<FactorPair, bool> project_c(const FactorPair& f, const SideInfo& si, double radius) {
  if (radius <= 0.0) throw_invalid("project_c: radius must be positive");

  auto clip_side = [&](const Matrix& basis, const Matrix& factor, bool& moved) -> Matrix {
    const double slack = radius * (1.0 + tol::projection_feasible);
    Matrix out = factor;
    for (int round = 0; round < 50; ++round) {
      Matrix w = basis * out;
      double worst = 0.0;
      for (Index i = 0; i < w.rows(); ++i) {
        const double norm = w.row(i).norm();
        worst = std::max(worst, norm);
        if (norm > radius) w.row(i) *= radius / norm;
      }
      if (worst <= slack) return out;
      moved = true;
      out = basis.transpose() * w;
    }
    // Fallback: scale the whole factor into the set.
    const double norm = two_inf_norm(basis * out);
    if (norm > radius) out *= radius / norm;
    return out;
  };

  bool moved = false;
  Matrix a = clip_side(si.x, f.a, moved);
  Matrix b = clip_side(si.y, f.b, moved);
  return {FactorPair(std::move(a), std::move(b)), moved};
}

SolverTrace solve_imc(const ObservationSet& obs, const SideInfo& si, const SolverConfig& cfg,
                      const GroundTruth* truth) {
  cfg.validate();
  check_init_args(obs, si, cfg.rank);
  const SvdResult w_svd = imc_observation_svd(obs, si, cfg.rank);
  SpectralInit init = init_from_svd(w_svd, cfg.rank);

  const double n_min = static_cast<double>(std::min(obs.n1(), obs.n2()));
  const double radius =
      2.0 * std::sqrt(cfg.mu0_hint * static_cast<double>(cfg.rank) / n_min) * init.z0_norm;

  LoopHooks hooks;
  hooks.mode = cfg.projection;
  hooks.radius = radius;
  hooks.eval = [&](const FactorPair& f, bool g) { return eval_imc(f, obs, si, g); };
  if (radius > 0.0 && cfg.projection == ProjectionMode::enforce)
    hooks.project = [&, radius](const FactorPair& f) { return project_c(f, si, radius); };
  if (truth != nullptr) {
    // || X A B^T Y^T - L* ||_F^2 expanded through G = X^T L* Y; O(a^2 r) per call.
    const Matrix g = si.x.transpose() * truth->l_star * si.y;
    const double l_norm_sq = truth->l_star.squaredNorm();
    const double l_norm = std::sqrt(l_norm_sq);
    hooks.rel_error = [g, l_norm_sq, l_norm](const FactorPair& f) {
      const Matrix gram_a = f.a.transpose() * f.a;
      const Matrix gram_b = f.b.transpose() * f.b;
      const double est_sq = (gram_a.array() * gram_b.array()).sum();
      const double cross = (f.a.array() * (g * f.b).array()).sum();
      return std::sqrt(std::max(0.0, est_sq - 2.0 * cross + l_norm_sq)) / l_norm;
    };
  }

  const double eta = resolve_step(cfg, obs, w_svd, init.z0_norm);
  return run_descent_with_backoff(init.factors, cfg, init, eta, hooks);
}

double mc_loss(const FactorPair& f, const ObservationSet& obs) {
  check_mc_dims(f, obs);
  return eval_ambient(f, obs, nullptr, 0.0, false).loss;
}

FactorPair mc_gradient(const FactorPair& f, const ObservationSet& obs) {
  check_mc_dims(f, obs);
  Evaluation ev = eval_ambient(f, obs, nullptr, 0.0, true);
  return FactorPair(std::move(ev.grad_a), std::move(ev.grad_b));
}

namespace {

// Dense SVD below this entry count; block subspace iteration above.
constexpr Index kDenseSvdEntries = 250000;

SvdResult scaled_observation_topk(const ObservationSet& obs, Index k) {
  if (obs.n1() * obs.n2() <= kDenseSvdEntries) {
    return svd(obs.to_dense() / obs.p(), k);
  }
  const double inv_p = 1.0 / obs.p();
  LinearOperator op;
  op.rows = obs.n1();
  op.cols = obs.n2();
  op.apply = [&obs, inv_p](const Matrix& x, Matrix& out) {
    out = Matrix::Zero(obs.n1(), x.cols());
    for (const Triple& t : obs.triples()) out.row(t.row) += inv_p * t.value * x.row(t.col);
  };
  op.apply_transpose = [&obs, inv_p](const Matrix& x, Matrix& out) {
    out = Matrix::Zero(obs.n2(), x.cols());
    for (const Triple& t : obs.triples()) out.row(t.col) += inv_p * t.value * x.row(t.row);
  };
  return topk_svd(op, k);
}

}  // namespace

SpectralInit spectral_init_mc(const ObservationSet& obs, Index r) {
  if (r < 1 || r > std::min(obs.n1(), obs.n2()))
    throw_invalid("spectral_init_mc: rank out of range");
  return init_from_svd(scaled_observation_topk(obs, r), r);
}

namespace {

SolverTrace solve_ambient(const ObservationSet& obs, const SideInfo* si, double lambda,
                          const SolverConfig& cfg, const GroundTruth* truth) {
  cfg.validate();
  if (lambda < 0.0) throw_invalid("solve_interp: lambda must be >= 0");
  if (si != nullptr && (si->n1() != obs.n1() || si->n2() != obs.n2()))
    throw_invalid("solve_interp: side info / observation dimension mismatch");

  SvdResult dec = scaled_observation_topk(obs, cfg.rank);
  SpectralInit init = init_from_svd(dec, cfg.rank);

  LoopHooks hooks;
  hooks.mode = ProjectionMode::off;  // plain gradient descent in the ambient space
  hooks.eval = [&, si, lambda](const FactorPair& f, bool g) {
    return eval_ambient(f, obs, si, lambda, g);
  };
  if (truth != nullptr) {
    // || A B^T - X* Z Y*^T ||_F^2 through the factored cross term; everything
    // the closure needs is captured by value.
    const double l_norm_sq = truth->z.squaredNorm();
    const double l_norm = std::sqrt(l_norm_sq);
    hooks.rel_error = [x_star_t = Matrix(truth->x_star.transpose()),
                       y_star_t = Matrix(truth->y_star.transpose()), z = truth->z, l_norm_sq,
                       l_norm](const FactorPair& f) {
      const Matrix gram_a = f.a.transpose() * f.a;
      const Matrix gram_b = f.b.transpose() * f.b;
      const double est_sq = (gram_a.array() * gram_b.array()).sum();
      const Matrix pa = x_star_t * f.a;
      const Matrix qb = y_star_t * f.b;
      const double cross = (pa.array() * (z * qb).array()).sum();
      return std::sqrt(std::max(0.0, est_sq - 2.0 * cross + l_norm_sq)) / l_norm;
    };
  }

  const double eta = resolve_step(cfg, obs, dec, init.z0_norm);
  return run_descent_with_backoff(init.factors, cfg, init, eta, hooks);
}

}  // namespace

SolverTrace solve_mc(const ObservationSet& obs, const SolverConfig& cfg,
                     const GroundTruth* truth) {
  return solve_ambient(obs, nullptr, 0.0, cfg, truth);
}

double interp_loss(const FactorPair& f, const ObservationSet& obs, const SideInfo& si,
                   double lambda) {
  check_mc_dims(f, obs);
  if (lambda < 0.0) throw_invalid("interp_loss: lambda must be >= 0");
  return eval_ambient(f, obs, &si, lambda, false).loss;
}

FactorPair interp_gradient(const FactorPair& f, const ObservationSet& obs, const SideInfo& si,
                           double lambda) {
  check_mc_dims(f, obs);
  if (lambda < 0.0) throw_invalid("interp_gradient: lambda must be >= 0");
  Evaluation ev = eval_ambient(f, obs, &si, lambda, true);
  return FactorPair(std::move(ev.grad_a), std::move(ev.grad_b));
}

SolverTrace solve_interp(const ObservationSet& obs, const SideInfo& si, double lambda,
                         const SolverConfig& cfg, const GroundTruth* truth) {
  return solve_ambient(obs, &si, lambda, cfg, truth);
}

}  // namespace imc
