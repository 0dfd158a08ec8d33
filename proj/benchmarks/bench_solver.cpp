#include <benchmark/benchmark.h>

#include "imc/diagnostics.hpp"
#include "imc/solver.hpp"
#include "imc/synthetic.hpp"

namespace {

struct Instance {
  imc::SyntheticInstance inst;
  imc::ObservationSet obs;
};

Instance make_instance(imc::Index n, imc::Index a, imc::Index r, double p) {
  imc::Rng rng(7, 0);
  imc::SyntheticInstance inst = imc::gen_ground_truth(n, n, a, a, r, rng);
  imc::Rng omega_rng = rng.stream(1);
  auto omega = imc::sample_omega(n, n, p, omega_rng);
  imc::Rng noise_rng = rng.stream(2);
  auto obs = imc::add_noise(inst.truth.l_star, omega, p, 0.001, noise_rng);
  return {std::move(inst), std::move(obs)};
}

void BM_ImcGradient(benchmark::State& state) {
  const auto n = static_cast<imc::Index>(state.range(0));
  Instance data = make_instance(n, n / 20, n / 100 + 2, 0.05);
  auto init = imc::spectral_init_imc(data.obs, data.inst.exact_side_info, n / 100 + 2);
  for (auto _ : state) {
    auto grad = imc::imc_gradient(init.factors, data.obs, data.inst.exact_side_info);
    benchmark::DoNotOptimize(grad.a.data());
  }
}
BENCHMARK(BM_ImcGradient)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_McGradient(benchmark::State& state) {
  const auto n = static_cast<imc::Index>(state.range(0));
  Instance data = make_instance(n, n / 20, n / 100 + 2, 0.05);
  auto init = imc::spectral_init_mc(data.obs, n / 100 + 2);
  for (auto _ : state) {
    auto grad = imc::mc_gradient(init.factors, data.obs);
    benchmark::DoNotOptimize(grad.a.data());
  }
}
BENCHMARK(BM_McGradient)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SpectralInitImc(benchmark::State& state) {
  const auto n = static_cast<imc::Index>(state.range(0));
  Instance data = make_instance(n, n / 20, n / 100 + 2, 0.05);
  for (auto _ : state) {
    auto init = imc::spectral_init_imc(data.obs, data.inst.exact_side_info, n / 100 + 2);
    benchmark::DoNotOptimize(init.z0_norm);
  }
}
BENCHMARK(BM_SpectralInitImc)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SolveImcDesk(benchmark::State& state) {
  Instance data = make_instance(200, 20, 5, 0.1);
  imc::SolverConfig cfg;
  cfg.rank = 5;
  cfg.max_iters = 200;
  cfg.rel_tol = 0.0;
  for (auto _ : state) {
    auto trace = imc::solve_imc(data.obs, data.inst.exact_side_info, cfg);
    benchmark::DoNotOptimize(trace.final_loss());
  }
}
BENCHMARK(BM_SolveImcDesk)->Unit(benchmark::kMillisecond);

}  // namespace
