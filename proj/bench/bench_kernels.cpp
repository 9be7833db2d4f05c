// Serial reference against the OpenMP path for the parallel kernels.
// Argument 0 runs serially, 1 in parallel with the default thread count.
#include <benchmark/benchmark.h>

#include "mcf/conley.hpp"
#include "mcf/inducedmaps.hpp"
#include "mcf/parallel.hpp"

using namespace mcf;
using namespace mcf::flow;

namespace {

const char* kTorus = "(2+cos(2*pi*x2))*cos(2*pi*x1) + 0.1*sin(2*pi*x2)";

void set_mode(benchmark::State& st) {
  bool parallel = st.range(0) != 0;
  par::set_default_exec(parallel ? par::Exec::parallel : par::Exec::serial);
  st.SetLabel(parallel ? "parallel x" + std::to_string(par::threads()) : "serial");
}

MorseDatum torus_datum() {
  return make_datum(ScalarField::parse(Domain::torus(2), kTorus), Metric(2), nullptr, FlowConfig{});
}

// Newton from a seed lattice
void BM_critical_points(benchmark::State& st) {
  set_mode(st);
  auto f = ScalarField::parse(Domain::torus(2), kTorus);
  for (auto _ : st) benchmark::DoNotOptimize(find_critical_points(f, Metric(2), nullptr, FlowConfig{}));
}

// shooting from every critical point
void BM_boundary_operator(benchmark::State& st) {
  set_mode(st);
  auto d = torus_datum();
  for (auto _ : st) benchmark::DoNotOptimize(moduli::boundary_operator(d, nullptr, FlowConfig{}));
}

// boundary mesh and interior grid orbits
void BM_isolation(benchmark::State& st) {
  set_mode(st);
  Domain sq = Domain::box({{-2, 2}, {-2, 2}});
  auto X = ExpressionField::parse(sq, {"x1", "-x2"});
  Neighborhood N(sq, {Box{{-1, -1}, {1, 1}}});
  for (auto _ : st)
    benchmark::DoNotOptimize(conley::verify_isolating_neighborhood(X, N, FlowConfig{}, conley::ConleyConfig{}));
}

// branch sampling of a torus self-map
void BM_induced_map(benchmark::State& st) {
  set_mode(st);
  auto d = torus_datum();
  FlowConfig cfg;
  auto c = moduli::boundary_operator(d, nullptr, cfg);
  auto id = maps::MapChain::identity(Domain::torus(2));
  for (auto _ : st) benchmark::DoNotOptimize(induced::induced_chain_map(id, induced::Pair{&d, &d}, c, c, cfg));
}

}  // namespace

BENCHMARK(BM_critical_points)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_boundary_operator)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(3);
BENCHMARK(BM_isolation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_induced_map)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
