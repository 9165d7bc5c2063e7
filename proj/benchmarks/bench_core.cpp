#include <benchmark/benchmark.h>

#include <phigeo/geodesic.hpp>
#include <phigeo/geometry.hpp>
#include <phigeo/models.hpp>

using namespace phigeo;

namespace {

ChartPoint pt2(double a, double b) {
    ChartPoint p{Vec(2), 0};
    p.coords << a, b;
    return p;
}

void bm_curvature_pack(benchmark::State& state) {
    auto model = build_model(ModelSpec{CigarSpec{}});
    const ChartPoint p = pt2(1.3, -0.7);
    for (auto _ : state) benchmark::DoNotOptimize(curvature_pack(*model, p));
}
BENCHMARK(bm_curvature_pack);

void bm_ivp_step(benchmark::State& state) {
    auto model = build_model(ModelSpec{CigarSpec{}});
    auto phi = make_phi(*model, PhiSpec::cR(0.25));
    Vec v0(2);
    v0 << 0.3, 0.4;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            integrate_phi_geodesic(*model, *phi, pt2(1.0, 0.0), v0, 1.0, 1e-2));
}
BENCHMARK(bm_ivp_step);

void bm_minimize_j_small(benchmark::State& state) {
    auto model = build_model(ModelSpec{CigarSpec{}});
    auto phi = make_phi(*model, PhiSpec::cR(0.25));
    for (auto _ : state)
        benchmark::DoNotOptimize(minimize_j(*model, *phi, pt2(0, 0), pt2(2, 0), 3.0, 64));
}
BENCHMARK(bm_minimize_j_small);

void bm_riemann_distance(benchmark::State& state) {
    auto model = build_model(ModelSpec{CigarSpec{}});
    for (auto _ : state)
        benchmark::DoNotOptimize(riemann_distance(*model, pt2(0, 0), pt2(3, 0), 128));
}
BENCHMARK(bm_riemann_distance);

}  // namespace

BENCHMARK_MAIN();
