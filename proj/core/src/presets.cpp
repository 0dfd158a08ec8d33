#include <cmath>

#include "imc/experiments.hpp"

namespace imc {
namespace experiments {

namespace {

std::vector<double> logspace(double lo_exp, double hi_exp, int count) {
  std::vector<double> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / (count - 1)));
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid{0.0};
  for (double v : logspace(-4.0, 2.0, 13)) grid.push_back(v);
  return grid;
}

void apply_scale(ExperimentConfig& cfg, Preset preset) {
  if (preset == Preset::paper) {
    cfg.n1 = cfg.n2 = 1000;
    cfg.a1 = cfg.a2 = 50;
    cfg.rank = 10;
    cfg.trials = 100;
  } else {
    cfg.n1 = cfg.n2 = 200;
    cfg.a1 = cfg.a2 = 20;
    cfg.rank = 5;
    cfg.trials = 20;
  }
}

}  // namespace

ExperimentConfig make_preset(const std::string& experiment, Preset preset) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  apply_scale(cfg, preset);
  const bool paper = preset == Preset::paper;

  if (experiment == "phase") {
    cfg.sigma = 0.0;
    // Desk grid located by the committed pilot sweep (tools/presets).
    cfg.p_grid = paper ? std::vector<double>{0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2}
                       : std::vector<double>{0.02, 0.04, 0.06, 0.1, 0.15, 0.22, 0.3};
  } else if (experiment == "phase-imc-fine") {
    cfg.sigma = 0.0;
    cfg.p_grid = paper ? std::vector<double>{0.0005, 0.0008, 0.001, 0.0014, 0.002, 0.003, 0.005}
                       : std::vector<double>{0.005, 0.008, 0.012, 0.02, 0.03, 0.05};
  } else if (experiment == "noisy-error") {
    cfg.sigma = 0.001;
    cfg.p_grid = paper ? std::vector<double>{0.01, 0.02, 0.03, 0.04, 0.05}
                       : std::vector<double>{0.05, 0.08, 0.12, 0.2, 0.3};
  } else if (experiment == "inexact-error") {
    cfg.sigma = 0.001;
    cfg.p_grid = paper ? std::vector<double>{0.01, 0.02, 0.03, 0.04, 0.05}
                       : std::vector<double>{0.05, 0.08, 0.12, 0.2, 0.3};
    cfg.delta_grid = {0.05, 0.1, 0.2};
  } else if (experiment == "delta-sweep") {
    cfg.sigma = 0.001;
    cfg.p_grid = paper ? std::vector<double>{0.05} : std::vector<double>{0.2};
    cfg.delta_grid = {0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20};
  } else if (experiment == "interp-sweep") {
    cfg.sigma = 0.0;
    cfg.p_grid = paper ? std::vector<double>{0.02, 0.1} : std::vector<double>{0.06, 0.3};
    cfg.delta_grid = {0.05};
    cfg.lambda_grid = default_lambda_grid();
  } else if (experiment == "interp-cv") {
    cfg.sigma = 0.0;
    cfg.p_grid = paper ? std::vector<double>{0.02, 0.05} : std::vector<double>{0.06, 0.15};
    cfg.delta_grid = {0.05};
    cfg.lambda_grid = default_lambda_grid();
    cfg.trials = paper ? 5 : 10;
  } else if (experiment == "projection-check") {
    cfg.sigma = 0.0;
    cfg.p_grid = paper ? std::vector<double>{0.01} : std::vector<double>{0.05};
    if (!paper) {
      cfg.n1 = cfg.n2 = 300;
      cfg.a1 = cfg.a2 = 20;
      cfg.rank = 5;
    }
    cfg.trials = 20;
    cfg.solver.max_iters = 200;
  } else if (experiment == "movielens") {
    cfg.rank = 5;
    cfg.trials = 20;
    cfg.m_grid = {5000, 10000, 20000, 40000, 60000, 80000};
    if (!paper) {
      cfg.trials = 5;
      cfg.m_grid = {5000, 20000, 80000};
    }
  } else {
    throw_invalid("make_preset: unknown experiment id: " + experiment);
  }
  return cfg;
}

}  // namespace experiments
}  // namespace imc
