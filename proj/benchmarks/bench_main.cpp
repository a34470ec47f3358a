#include <benchmark/benchmark.h>

#include <random>

#include "euchar/geometry.hpp"
#include "euchar/morse.hpp"
#include "euchar/oscillatory.hpp"
#include "euchar/recovery.hpp"
#include "euchar/transforms.hpp"

using namespace euchar;
using morse::ProbeFunction;

namespace {

const TriangleMesh& torus_mesh() {
    static TriangleMesh m = generate_parametric(SurfaceKind::Torus, {2.0, 1.0}, 64).second;
    return m;
}

}  // namespace

static void BM_TrianglePlaneWave(benchmark::State& state) {
    Vec3 v0{0.1, 0.2, 0.3}, v1{0.9, 0.15, 0.4}, v2{0.3, 0.8, 0.1};
    Vec3 k{3.1, -2.2, double(state.range(0))};
    for (auto _ : state) {
        benchmark::DoNotOptimize(oscillatory::triangle_plane_wave(v0, v1, v2, k));
    }
}
BENCHMARK(BM_TrianglePlaneWave)->Arg(0)->Arg(40);

static void BM_MeshPairingPerLambda(benchmark::State& state) {
    const auto& m = torus_mesh();
    auto probe = ProbeFunction::height(normalized(Vec3{0.8, 0.5, 0.2}));
    double lambda = static_cast<double>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(oscillatory::pairing(m, probe, lambda));
    }
    state.SetItemsProcessed(state.iterations() * m.face_count());
}
BENCHMARK(BM_MeshPairingPerLambda)->Arg(5)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_ParametricPairing(benchmark::State& state) {
    auto tor = ParametricSurface::torus(2.0, 1.0);
    auto probe = ProbeFunction::height({1, 0, 0});
    oscillatory::PairingOptions opts;
    opts.fast_grid = state.range(1) != 0;
    double lambda = static_cast<double>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(oscillatory::pairing(tor, probe, lambda, opts));
    }
}
BENCHMARK(BM_ParametricPairing)
    ->Args({10, 0})
    ->Args({10, 1})
    ->Args({50, 1})
    ->Unit(benchmark::kMillisecond);

static void BM_RadonDeposition(benchmark::State& state) {
    const auto& m = torus_mesh();
    Vec3 w = normalized(Vec3{1.0, 0.2, 0.1});
    for (auto _ : state) {
        benchmark::DoNotOptimize(transforms::radon_profile(m, w, 600));
    }
    state.SetItemsProcessed(state.iterations() * m.face_count());
}
BENCHMARK(BM_RadonDeposition)->Unit(benchmark::kMillisecond);

static void BM_ProfileSynthesis(benchmark::State& state) {
    oscillatory::LineSpectrum s;
    std::size_t n = 512;
    s.lambda_grid = {0.0, 0.25, n};
    s.values.assign(n, Complex{0.1, -0.2});
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            recovery::synthesize_profile(s, recovery::WindowKind::Hann, 10.0, 2 * n, false));
    }
    state.SetItemsProcessed(state.iterations() * n * 2 * n);
}
BENCHMARK(BM_ProfileSynthesis)->Unit(benchmark::kMillisecond);

static void BM_AmplitudeFit(benchmark::State& state) {
    oscillatory::LineSpectrum s;
    std::size_t n = 2000;
    s.lambda_grid = {0.0, 0.05, n};
    s.values.assign(n, Complex{});
    std::vector<double> t{-1.4, 0.3, 2.2};
    std::vector<Complex> a{{0.0, -1.7}, {0.9, 0.05}, {0.0, 2.2}};
    for (std::size_t j = 1; j < n; ++j) {
        double l = s.lambda_grid[j];
        Complex acc{};
        for (std::size_t k = 0; k < t.size(); ++k) acc += a[k] * std::polar(1.0, -l * t[k]);
        s.values[j] = 2.0 * kPi / l * acc;
    }
    recovery::FitOptions fops;
    fops.sweeps = 2;
    fops.golden_iterations = 24;
    fops.max_fit_samples = 384;
    for (auto _ : state) {
        benchmark::DoNotOptimize(recovery::fit_amplitudes(s, {-1.41, 0.31, 2.19}, fops));
    }
}
BENCHMARK(BM_AmplitudeFit)->Unit(benchmark::kMillisecond);

static void BM_MeshCriticalPoints(benchmark::State& state) {
    const auto& m = torus_mesh();
    auto probe = ProbeFunction::height(normalized(Vec3{1.0, 0.13, 0.07}));
    for (auto _ : state) {
        benchmark::DoNotOptimize(morse::critical_points(m, probe));
    }
    state.SetItemsProcessed(state.iterations() * m.vertex_count());
}
BENCHMARK(BM_MeshCriticalPoints)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
