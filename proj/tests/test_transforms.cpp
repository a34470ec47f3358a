#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "euchar/geometry.hpp"
#include "euchar/morse.hpp"
#include "euchar/recovery.hpp"
#include "euchar/transforms.hpp"

using namespace euchar;
using namespace euchar::transforms;

namespace {

const TriangleMesh& sphere96() {
    static TriangleMesh m = generate_parametric(SurfaceKind::Sphere, {1.0}, 96).second;
    return m;
}

const TriangleMesh& torus96() {
    static TriangleMesh m = generate_parametric(SurfaceKind::Torus, {2.0, 1.0}, 96).second;
    return m;
}

}  // namespace

TEST_CASE("radon profile of the sphere: Archimedes hat-box") {
    auto radon = radon_profile(sphere96(), {0, 0, 1}, 400);

    // mass conservation is exact
    CHECK(radon.total_area == doctest::Approx(total_area(sphere96())).epsilon(1e-12));

    // interior plateau at 2 pi, away from the edges
    for (std::size_t i = 0; i < radon.values.size(); ++i) {
        double tau = radon.tau_grid[i];
        if (std::abs(tau) < 0.9) {
            CHECK(radon.values[i] == doctest::Approx(2.0 * kPi).epsilon(0.02));
        }
        if (std::abs(tau) > 1.0 + 2.0 * radon.tau_grid.step) {
            CHECK(radon.values[i] == 0.0);
        }
        CHECK(radon.values[i] >= 0.0);
    }
}

TEST_CASE("radon profile translation covariance") {
    Vec3 w = normalized(Vec3{0.3, -0.2, 0.93});
    Vec3 c{0.4, 1.3, -0.7};
    auto base = radon_profile(torus96(), w, 300);
    TriangleMesh shifted = torus96();
    shifted.translate(c);
    auto moved = radon_profile(shifted, w, 300);
    REQUIRE(moved.values.size() == base.values.size());
    // same grid shape, start displaced by w.c
    CHECK(moved.tau_grid.start - base.tau_grid.start ==
          doctest::Approx(dot(w, c)).epsilon(1e-9));
    for (std::size_t i = 0; i < base.values.size(); ++i) {
        CHECK(moved.values[i] == doctest::Approx(base.values[i]).epsilon(1e-6));
    }
}

TEST_CASE("radon derivative profile: sphere peaks at +-1 with phases +-pi/2") {
    auto radon = radon_profile(sphere96(), {0, 0, 1}, 400);
    auto prof = radon_to_profile_u(radon);

    // detect and locate
    auto peaks = recovery::detect_peaks(prof, 0.3);
    REQUIRE(peaks.size() == 2);
    CHECK(std::abs(peaks[0] + 1.0) <= 2.0 * radon.tau_grid.step);
    CHECK(std::abs(peaks[1] - 1.0) <= 2.0 * radon.tau_grid.step);

    // phase of u at the peak samples: +pi/2 at +1, -pi/2 at -1
    std::size_t ip = 0, im = 0;
    for (std::size_t i = 0; i < prof.values.size(); ++i) {
        if (std::abs(prof.values[i]) > std::abs(prof.values[ip]) && prof.t_grid[i] > 0) ip = i;
        if (std::abs(prof.values[i]) > std::abs(prof.values[im]) && prof.t_grid[i] < 0) im = i;
    }
    CHECK(std::arg(prof.values[ip]) == doctest::Approx(kPi / 2).epsilon(1e-6));
    CHECK(std::arg(prof.values[im]) == doctest::Approx(-kPi / 2).epsilon(1e-6));

    // interior plateau differentiates to ~0
    for (std::size_t i = 0; i < prof.values.size(); ++i) {
        if (std::abs(prof.t_grid[i]) < 0.8)
            CHECK(std::abs(prof.values[i]) < 0.05 * std::abs(prof.values[ip]));
    }
}

TEST_CASE("radon derivative profile: torus height-critical values") {
    auto radon = radon_profile(torus96(), {1, 0, 0}, 600);
    auto prof = radon_to_profile_u(radon, /*min_gap=*/2.0);
    // the saddle log-spikes in |dR| carry twin humps a bin either side of the
    // critical value; merge at the bin-limited resolution
    recovery::PeakOptions opts;
    opts.rel_threshold = 0.08;
    opts.merge_rayleigh = 1.5;
    auto peaks = recovery::detect_peaks(prof, opts);
    REQUIRE(peaks.size() == 4);
    const double tol = 2.0 * radon.tau_grid.step;
    CHECK(std::abs(peaks[0] + 3.0) <= tol);
    CHECK(std::abs(peaks[1] + 1.0) <= tol);
    CHECK(std::abs(peaks[2] - 1.0) <= tol);
    CHECK(std::abs(peaks[3] - 3.0) <= tol);
}

TEST_CASE("radon resolution guard") {
    auto radon = radon_profile(sphere96(), {0, 0, 1}, 32);
    CHECK_THROWS_AS(radon_to_profile_u(radon, /*min_gap=*/0.2), ResolutionError);
}

TEST_CASE("projection-slice spectrum matches the sphere closed form") {
    auto radon = radon_profile(sphere96(), {0, 0, 1}, 800);
    auto s = radon_to_spectrum(radon, 0.25, 128);  // Lambda = 31.75
    for (std::size_t j = 1; j < s.values.size(); ++j) {
        double l = s.lambda_grid[j];
        double expected = 4.0 * kPi * std::sin(l) / l;
        CHECK(std::abs(s.values[j] - Complex(expected, 0)) < 0.02 * 4.0 * kPi / std::max(1.0, l));
    }
    // radon-route chi
    auto dec = recovery::fit_amplitudes(s, {-1.0, 1.0});
    CHECK(recovery::euler_characteristic(dec).chi == 2);
}

TEST_CASE("wave trace of the sphere from (2,0,0)") {
    auto trace = wave_trace(sphere96(), {2, 0, 0}, 300);
    const double dt = trace.t_grid.step;

    // support is [1, 3] within one bin
    for (std::size_t i = 0; i < trace.values.size(); ++i) {
        double t = trace.t_grid[i];
        if (t < 1.0 - dt || t > 3.0 + dt) {
            CHECK(trace.values[i] == 0.0);
        }
    }
    // quiet zone before the first arrival
    std::size_t half = static_cast<std::size_t>(0.5 / dt);
    CHECK(trace.values[half] == 0.0);

    // exact interior oracle: dA/dr = pi r for a unit sphere seen from
    // distance 2, so u(t) = (pi t)/(4 pi t) = 1/4 across the support
    for (std::size_t i = 0; i < trace.values.size(); ++i) {
        double t = trace.t_grid[i];
        if (t > 1.0 + 2 * dt && t < 3.0 - 2 * dt) {
            CHECK(trace.values[i] == doctest::Approx(0.25).epsilon(0.01));
        }
    }

    // deposited mass is the total area
    CHECK(trace.deposited_area == doctest::Approx(total_area(sphere96())).epsilon(1e-9));
}

TEST_CASE("wave trace clearance") {
    CHECK_THROWS_AS(wave_trace(sphere96(), {1.0001, 0, 0}, 200), ClearanceError);
}

TEST_CASE("wave normalized spectrum: certificates and recovery") {
    SUBCASE("focal center is rejected") {
        CHECK_THROWS_AS(wave_normalized_spectrum(sphere96(), {0, 0, 0}, 0.4, 128),
                        GenericityError);
    }
    SUBCASE("sphere receiver (2,0,0): peaks {1,3}, chi = 2") {
        auto s = wave_normalized_spectrum(sphere96(), {2, 0, 0}, 0.4, 256);
        CHECK(s.meta.method.rfind("wave_", 0) == 0);
        auto prof = recovery::synthesize_profile(s, recovery::WindowKind::Hann, 4.0, 1200,
                                                 /*two_sided=*/false);
        auto peaks = recovery::detect_peaks(prof, 0.2);
        REQUIRE(peaks.size() == 2);
        CHECK(std::abs(peaks[0] - 1.0) < 0.05);
        CHECK(std::abs(peaks[1] - 3.0) < 0.05);
        auto dec = recovery::fit_amplitudes(s, peaks);
        auto chi = recovery::euler_characteristic(dec);
        CHECK(chi.chi == 2);
    }
}

TEST_CASE("time-domain operator cross-validates the frequency route") {
    auto trace = wave_trace(sphere96(), {2, 0, 0}, 400);
    auto prof = time_domain_operator(trace);
    const double dt = trace.t_grid.step;

    // dominant features at t = 1 and t = 3, within one bin
    auto mag_near = [&](double t) {
        double best = 0.0;
        for (std::size_t i = 0; i < prof.values.size(); ++i) {
            if (std::abs(prof.t_grid[i] - t) <= 1.5 * dt)
                best = std::max(best, std::abs(prof.values[i]));
        }
        return best;
    };
    double background = 0.0;
    for (std::size_t i = 0; i < prof.values.size(); ++i) {
        if (std::abs(prof.t_grid[i] - 2.0) < 0.5) background =
            std::max(background, std::abs(prof.values[i]));
    }
    CHECK(mag_near(1.0) > 3.0 * background);
    CHECK(mag_near(3.0) > 3.0 * background);

    // locality: output support within one stencil of the input support
    for (std::size_t i = 1; i + 1 < prof.values.size(); ++i) {
        if (trace.values[i - 1] == 0.0 && trace.values[i] == 0.0 && trace.values[i + 1] == 0.0)
            CHECK(std::abs(prof.values[i]) == 0.0);
    }

    // zero trace maps to zero profile
    WaveTrace zero = trace;
    std::fill(zero.values.begin(), zero.values.end(), 0.0);
    auto zprof = time_domain_operator(zero);
    for (const auto& v : zprof.values) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("csv writers with json sidecars") {
    auto dir = std::filesystem::temp_directory_path() / "euchar_transforms_test";
    std::filesystem::create_directories(dir);
    auto radon = radon_profile(sphere96(), {0, 0, 1}, 64);
    write_radon_csv(radon, (dir / "radon.csv").string(), (dir / "radon.json").string());
    auto trace = wave_trace(sphere96(), {2, 0, 0}, 64);
    write_wave_csv(trace, (dir / "wave.csv").string(), (dir / "wave.json").string());
    CHECK(std::filesystem::file_size(dir / "radon.csv") > 0);
    CHECK(std::filesystem::file_size(dir / "radon.json") > 0);
    CHECK(std::filesystem::file_size(dir / "wave.csv") > 0);
    CHECK(std::filesystem::file_size(dir / "wave.json") > 0);
}
