#include <memory>

#include <benchmark/benchmark.h>

#include "mdagar/dagar.hpp"
#include "mdagar/evidence.hpp"
#include "mdagar/gibbs.hpp"
#include "mdagar/joint.hpp"
#include "mdagar/model.hpp"
#include "mdagar/simulation.hpp"

using namespace mdagar;

namespace {

std::shared_ptr<const ArealGraph> grid(std::size_t side) {
  return std::make_shared<const ArealGraph>(grid_graph(side, side));
}

Eigen::VectorXd noise(std::size_t n, Rng& rng) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = standard_normal(rng);
  return v;
}

InteractionCoeffs chain_eta(std::size_t q) {
  InteractionCoeffs eta(q);
  for (std::size_t i = 1; i < q; ++i)
    for (std::size_t ip = 0; ip < i; ++ip) eta.set(i, ip, 0.5, 0.2);
  return eta;
}

// one replicate of the three-disease generator on the grid fixture
std::shared_ptr<const Dataset> three_disease_data() {
  GeneratorConfig cfg = three_disease_config(grid_minus_corner(), {0, 1, 2});
  cfg.n_replicates = 1;
  return std::make_shared<const Dataset>(simulate(cfg).replicates[0].data);
}

void BM_DagarQuadForm(benchmark::State& state) {
  const auto g = grid(static_cast<std::size_t>(state.range(0)));
  const DagarPrecision p(g, 0.6);
  Rng rng(1);
  const Eigen::VectorXd w = noise(g->size(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(p.quad_form(w));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(g->size()));
}
BENCHMARK(BM_DagarQuadForm)->Arg(7)->Arg(16)->Arg(32)->Complexity();

void BM_DagarMatvec(benchmark::State& state) {
  const auto g = grid(static_cast<std::size_t>(state.range(0)));
  const DagarPrecision p(g, 0.6);
  Rng rng(2);
  const Eigen::VectorXd w = noise(g->size(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(p.matvec(w));
}
BENCHMARK(BM_DagarMatvec)->Arg(7)->Arg(16)->Arg(32);

void BM_JointSample(benchmark::State& state) {
  const auto q = static_cast<std::size_t>(state.range(0));
  const auto g = grid(7);
  const JointPrecision jp = build_joint(g, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(q), 0.5),
                                        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(q), 0.5), chain_eta(q));
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(jp.sample(rng));
}
BENCHMARK(BM_JointSample)->Arg(2)->Arg(3)->Arg(4);

void BM_IntegratedLoglik(benchmark::State& state) {
  const auto data = three_disease_data();
  const ModelSpec spec(grid_minus_corner().graph, data, PriorSpec::simulation(), {0, 1, 2});
  const ParamState s = initial_state(spec);
  for (auto _ : state) benchmark::DoNotOptimize(integrated_loglik(s, spec));
}
BENCHMARK(BM_IntegratedLoglik)->Unit(benchmark::kMicrosecond);

void BM_GibbsSweep(benchmark::State& state) {
  const auto data = three_disease_data();
  const ModelSpec spec(grid_minus_corner().graph, data, PriorSpec::simulation(), {0, 1, 2});
  ParamState s = initial_state(spec);
  const std::vector<double> steps(3, 1.0);
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(gibbs_sweep(s, spec, steps, rng));
}
BENCHMARK(BM_GibbsSweep)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
