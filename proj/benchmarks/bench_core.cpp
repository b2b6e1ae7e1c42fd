#include "lck/report.hpp"

#include <benchmark/benchmark.h>

using namespace lck;

namespace {

const ZooEntry& calabi() {
  static const ZooEntry e = resolve_selector("calabi{ell=sin,b=pi}");
  return e;
}

const ZooEntry& hopf3() {
  static const ZooEntry e = resolve_selector("hopf{n=3}");
  return e;
}

void BM_Christoffel(benchmark::State& state) {
  Settings s;
  s.mode = state.range(0) ? DiffMode::analytic : DiffMode::fd;
  const Chart& C = calabi().charts[0];
  const Vec p = C.domain.center();
  for (auto _ : state) benchmark::DoNotOptimize(christoffel_symbols(C, p, s));
}
BENCHMARK(BM_Christoffel)->Arg(0)->Arg(1);

void BM_Riemann(benchmark::State& state) {
  const Settings s;
  const Chart& C = hopf3().charts[0];
  const Vec p = C.domain.center();
  for (auto _ : state) benchmark::DoNotOptimize(riemann(C, p, s));
}
BENCHMARK(BM_Riemann);

void BM_LeeForm(benchmark::State& state) {
  const Settings s;
  const HermitianStructure& H = calabi().structures[0];
  const Vec p = H.chart.domain.center();
  for (auto _ : state) benchmark::DoNotOptimize(lee_form(H, p, s));
}
BENCHMARK(BM_LeeForm);

void BM_CurvatureJ(benchmark::State& state) {
  const Settings s;
  const HermitianStructure& H = hopf3().structures[0];
  const Vec p = H.chart.domain.center();
  const Vec X = Vec::LinSpaced(6, 0.1, 0.6), Y = Vec::LinSpaced(6, -0.3, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(curvature_j_residuals(H, p, X, Y, s));
}
BENCHMARK(BM_CurvatureJ);

void BM_LoopTransport(benchmark::State& state) {
  const Settings s;
  const Chart& C = calabi().calabi->g_plus;
  const Vec c0 = C.domain.center();
  Vec a = c0, b = c0, d = c0;
  a[0] += 0.3;
  b[0] += 0.3;
  b[3] += 0.3;
  d[3] += 0.3;
  const Loop L = polygon_loop({c0, a, b, d, c0}, static_cast<int>(state.range(0)));
  const Mat E = orthonormal_frame(metric(C, c0));
  for (auto _ : state) benchmark::DoNotOptimize(parallel_transport(C, L, E, s));
}
BENCHMARK(BM_LoopTransport)->Arg(250)->Arg(1000);

void BM_IdentitySuite(benchmark::State& state) {
  SuiteConfig c;
  c.manifold = "calabi{ell=sin,b=pi}";
  c.suites = {"lck-identities"};
  c.samples = 10;
  c.parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(run(c));
}
BENCHMARK(BM_IdentitySuite)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
