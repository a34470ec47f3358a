#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "euchar/geometry.hpp"
#include "euchar/morse.hpp"
#include "euchar/oscillatory.hpp"

using namespace euchar;
using morse::ProbeFunction;
using namespace euchar::oscillatory;

namespace {

// Independent oracle: 7-point degree-5 Gauss rule with uniform 4-way
// subdivision, refined until two levels agree.
Complex plane_wave_oracle(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& k) {
    static const double s15 = std::sqrt(15.0);
    static const double w[3] = {9.0 / 40.0, (155.0 - s15) / 1200.0, (155.0 + s15) / 1200.0};
    static const double a1 = (6.0 - s15) / 21.0, a2 = (6.0 + s15) / 21.0;

    auto rule = [&](const Vec3& p0, const Vec3& p1, const Vec3& p2) {
        double area = 0.5 * cross(p1 - p0, p2 - p0).norm();
        auto at = [&](double b0, double b1, double b2) {
            Vec3 p = p0 * b0 + p1 * b1 + p2 * b2;
            return std::polar(1.0, -dot(k, p));
        };
        Complex acc = w[0] * at(1.0 / 3, 1.0 / 3, 1.0 / 3);
        acc += w[1] * (at(1 - 2 * a1, a1, a1) + at(a1, 1 - 2 * a1, a1) + at(a1, a1, 1 - 2 * a1));
        acc += w[2] * (at(1 - 2 * a2, a2, a2) + at(a2, 1 - 2 * a2, a2) + at(a2, a2, 1 - 2 * a2));
        return acc * area;
    };

    std::function<Complex(const Vec3&, const Vec3&, const Vec3&, int)> subdivide =
        [&](const Vec3& p0, const Vec3& p1, const Vec3& p2, int depth) -> Complex {
        Complex coarse = rule(p0, p1, p2);
        Vec3 m01 = (p0 + p1) * 0.5, m12 = (p1 + p2) * 0.5, m20 = (p2 + p0) * 0.5;
        Complex fine =
            rule(p0, m01, m20) + rule(m01, p1, m12) + rule(m20, m12, p2) + rule(m01, m12, m20);
        if (depth > 9 || std::abs(fine - coarse) < 1e-14) return fine;
        return subdivide(p0, m01, m20, depth + 1) + subdivide(m01, p1, m12, depth + 1) +
               subdivide(m20, m12, p2, depth + 1) + subdivide(m01, m12, m20, depth + 1);
    };
    return subdivide(v0, v1, v2, 0);
}

}  // namespace

TEST_CASE("triangle plane wave: trivial values") {
    Vec3 v0{0, 0, 0}, v1{1, 0, 0}, v2{0, 1, 0};
    // k = 0: the area
    CHECK(triangle_plane_wave(v0, v1, v2, {0, 0, 0}).real() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(triangle_plane_wave(v0, v1, v2, {0, 0, 0}).imag() == doctest::Approx(0.0));
    // phase constant on the triangle: still the area
    Complex c = triangle_plane_wave(v0, v1, v2, {0, 0, 7.3});
    CHECK(std::abs(c - Complex(0.5, 0)) < 1e-14);
    // degenerate triangle rejected
    CHECK_THROWS_AS(triangle_plane_wave(v0, v1, (v0 + v1) * 0.5, {1, 0, 0}), ParameterError);
}

TEST_CASE("triangle plane wave matches the subdivision oracle") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 24; ++trial) {
        Vec3 v0{U(rng), U(rng), U(rng)}, v1{U(rng), U(rng), U(rng)}, v2{U(rng), U(rng), U(rng)};
        if (0.5 * cross(v1 - v0, v2 - v0).norm() < 1e-3) continue;
        double scale = trial % 3 == 0 ? 0.3 : (trial % 3 == 1 ? 5.0 : 40.0);
        Vec3 k = Vec3{U(rng), U(rng), U(rng)} * scale;
        Complex exact = triangle_plane_wave(v0, v1, v2, k);
        Complex oracle = plane_wave_oracle(v0, v1, v2, k);
        CHECK(std::abs(exact - oracle) <= 1e-10 * std::max(1e-3, std::abs(oracle)));
    }
}

TEST_CASE("triangle plane wave: near-coincident phases stay accurate") {
    // spans around the series threshold 1e-4
    Vec3 v0{0, 0, 0}, v1{1, 0, 0}, v2{0, 1, 0};
    for (double eps : {1e-6, 5e-5, 1.2e-4, 1e-3}) {
        Vec3 k{eps, 0.7 * eps, 3.0};  // z component is irrelevant on this triangle
        Complex exact = triangle_plane_wave(v0, v1, v2, k);
        Complex oracle = plane_wave_oracle(v0, v1, v2, k);
        CHECK(std::abs(exact - oracle) <= 1e-12);
    }
}

TEST_CASE("sphere pairing against the closed form 4 pi sin(lambda)/lambda") {
    auto sph = ParametricSurface::sphere(1.0);
    auto probe = ProbeFunction::height({0, 0, 1});

    SUBCASE("lambda = pi/2 gives 8") {
        Complex v = pairing(sph, probe, kPi / 2.0);
        CHECK(std::abs(v - Complex(8.0, 0.0)) <= 1e-6 * 8.0);
    }
    SUBCASE("lambda = pi is a zero") {
        Complex v = pairing(sph, probe, kPi);
        CHECK(std::abs(v) <= 1e-4 * 4.0 * kPi);
    }
    SUBCASE("lambda = 0 is the area") {
        Complex v = pairing(sph, probe, 0.0);
        CHECK(std::abs(v - Complex(4.0 * kPi, 0.0)) <= 1e-8 * 4.0 * kPi);
    }
    SUBCASE("generic direction, larger lambda") {
        Vec3 w = normalized(Vec3{0.4, -0.3, 0.85});
        double l = 37.7;
        Complex v = pairing(sph, ProbeFunction::height(w), l);
        double expected = 4.0 * kPi * std::sin(l) / l;
        CHECK(std::abs(v - Complex(expected, 0.0)) <= 1e-6 * std::abs(expected) + 1e-9);
    }
}

TEST_CASE("mesh pairing is close to the closed form") {
    auto [s, m] = generate_parametric(SurfaceKind::Sphere, {1.0}, 64);
    auto probe = ProbeFunction::height({0, 0, 1});
    Complex v = pairing(m, probe, kPi / 2.0);
    CHECK(std::abs(v - Complex(8.0, 0.0)) <= 1e-2 * 8.0);
    Complex v0 = pairing(m, probe, 0.0);
    CHECK(v0.real() == doctest::Approx(total_area(m)).epsilon(1e-13));
}

TEST_CASE("conjugate symmetry of height pairings") {
    auto [s, m] = generate_parametric(SurfaceKind::Torus, {2.0, 1.0}, 32);
    auto probe = ProbeFunction::height(normalized(Vec3{0.8, 0.5, 0.2}));
    for (double l : {0.7, 3.3, 11.0}) {
        Complex plus = pairing(m, probe, l);
        Complex minus = pairing(m, probe, -l);
        CHECK(std::abs(minus - std::conj(plus)) <= 1e-12 * std::abs(plus));
    }
}

TEST_CASE("positive phase sign flag conjugates") {
    auto [s, m] = generate_parametric(SurfaceKind::Sphere, {1.0}, 24);
    auto probe = ProbeFunction::height({0, 0, 1});
    PairingOptions pos;
    pos.sign = PhaseSign::Positive;
    Complex a = pairing(m, probe, 2.1);
    Complex b = pairing(m, probe, 2.1, pos);
    CHECK(std::abs(b - std::conj(a)) <= 1e-15 * std::abs(a) + 1e-18);
}

TEST_CASE("translation and rotation covariance") {
    auto [s, m] = generate_parametric(SurfaceKind::Torus, {2.0, 1.0}, 32);
    Vec3 w = normalized(Vec3{0.3, 0.9, 0.1});
    auto probe = ProbeFunction::height(w);
    double l = 4.2;
    Complex base = pairing(m, probe, l);

    SUBCASE("translation multiplies by e^{-i lambda w.c}") {
        Vec3 c{0.37, -1.2, 0.55};
        TriangleMesh shifted = m;
        shifted.translate(c);
        Complex v = pairing(shifted, probe, l);
        Complex expected = base * std::polar(1.0, -l * dot(w, c));
        CHECK(std::abs(v - expected) <= 1e-11 * std::abs(base));
    }
    SUBCASE("rotating surface and direction together is invariant") {
        double th = 0.83;
        std::array<std::array<double, 3>, 3> R{{{std::cos(th), -std::sin(th), 0.0},
                                                {std::sin(th), std::cos(th), 0.0},
                                                {0.0, 0.0, 1.0}}};
        TriangleMesh rotated = m;
        rotated.rotate(R);
        Vec3 wr{R[0][0] * w.x + R[0][1] * w.y + R[0][2] * w.z,
                R[1][0] * w.x + R[1][1] * w.y + R[1][2] * w.z,
                R[2][0] * w.x + R[2][1] * w.y + R[2][2] * w.z};
        Complex v = pairing(rotated, ProbeFunction::height(wr), l);
        CHECK(std::abs(v - base) <= 1e-10 * std::abs(base));
    }
}

TEST_CASE("flat refinement exactness: subdividing flat faces changes nothing") {
    TriangleMesh tet;
    tet.vertices = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    tet.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};

    TriangleMesh fine;
    fine.vertices = tet.vertices;
    for (const auto& f : tet.faces) {
        auto mid = [&](std::uint32_t a, std::uint32_t b) {
            fine.vertices.push_back((tet.vertices[a] + tet.vertices[b]) * 0.5);
            return static_cast<std::uint32_t>(fine.vertices.size() - 1);
        };
        std::uint32_t m01 = mid(f[0], f[1]), m12 = mid(f[1], f[2]), m20 = mid(f[2], f[0]);
        fine.faces.push_back({f[0], m01, m20});
        fine.faces.push_back({m01, f[1], m12});
        fine.faces.push_back({m20, m12, f[2]});
        fine.faces.push_back({m01, m12, m20});
    }
    auto probe = ProbeFunction::height(normalized(Vec3{0.2, 0.5, 0.9}));
    for (double l : {1.3, 9.4}) {
        Complex a = pairing(tet, probe, l);
        Complex b = pairing(fine, probe, l);
        CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    }
}

TEST_CASE("stein envelope on a certified direction") {
    auto tor = ParametricSurface::torus(2.0, 1.0);
    auto probe = ProbeFunction::height({1, 0, 0});
    auto pts = morse::critical_points(tor, probe);
    double C = 0.0;
    for (const auto& p : pts) C += 1.0 / std::sqrt(std::abs(p.hessian_det));
    C *= 2.0 * kPi * 1.25;  // margin
    for (double l : {10.0, 20.0, 50.0, 120.0, 200.0}) {
        Complex v = pairing(tor, probe, l);
        CHECK(std::abs(v) * (1.0 + l) <= C + 1e-9);
    }
}

TEST_CASE("spectrum on the sphere matches 4 pi sinc and its invariants") {
    auto sph = ParametricSurface::sphere(1.0);
    auto probe = ProbeFunction::height({0, 0, 1});
    auto s = spectrum(sph, probe, 0.1, 256);
    REQUIRE(s.values.size() == 256);
    CHECK(std::abs(s.values[0] - Complex(4.0 * kPi, 0)) <= 1e-7 * 4.0 * kPi);
    double area = 4.0 * kPi;
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        double l = s.lambda_grid[j];
        double expected = l == 0.0 ? area : 4.0 * kPi * std::sin(l) / l;
        CHECK(std::abs(s.values[j] - Complex(expected, 0)) <= 1e-6 * area);
        CHECK(std::abs(s.values[j]) <= area * (1.0 + 1e-9));
    }
}

TEST_CASE("aliasing guard raises a configuration error") {
    auto sph = ParametricSurface::sphere(1.0);
    auto probe = ProbeFunction::height({0, 0, 1});
    CHECK_THROWS_AS(spectrum(sph, probe, 4.0, 64), ConfigurationError);
    CHECK_THROWS_AS(spectrum(sph, probe, 0.1, 32), ConfigurationError);
}

TEST_CASE("prediction: single synthetic point and the exact sphere expansion") {
    SUBCASE("single point") {
        morse::CriticalPoint p;
        p.position = {0, 0, 0};
        p.value = 0.5;
        p.index_minus = 1;
        p.index_plus = 1;
        p.hessian_det = -1.0;
        p.amplitude = {1.0, 0.0};
        UniformGrid grid{0.0, 0.5, 16};
        auto pred = predict({p}, grid);
        CHECK(std::abs(pred.sum[0]) == 0.0);  // lambda = 0 skipped
        for (std::size_t j = 1; j < grid.count; ++j) {
            double l = grid[j];
            Complex expected = (2.0 * kPi / l) * std::polar(1.0, -l * 0.5);
            CHECK(std::abs(pred.sum[j] - expected) <= 1e-14);
        }
    }
    SUBCASE("sphere: leading order is exact") {
        auto sph = ParametricSurface::sphere(1.0);
        auto probe = ProbeFunction::height({0, 0, 1});
        auto pts = morse::critical_points(sph, probe);
        UniformGrid grid{0.0, 0.7, 64};
        auto pred = predict(pts, grid);
        for (std::size_t j = 1; j < grid.count; ++j) {
            double l = grid[j];
            double expected = 4.0 * kPi * std::sin(l) / l;
            CHECK(std::abs(pred.sum[j] - Complex(expected, 0)) <= 4e-4 * 4.0 * kPi / l + 1e-9);
        }
    }
}

TEST_CASE("fast tensor grid agrees with the adaptive integrator") {
    auto tor = ParametricSurface::torus(2.0, 1.0);
    auto sph = ParametricSurface::sphere(1.0);
    auto probe = ProbeFunction::height(normalized(Vec3{0.7, 0.1, 0.3}));
    PairingOptions fast;
    fast.fast_grid = true;
    for (double l : {0.9, 5.0, 37.0}) {
        Complex a = pairing(tor, probe, l);
        Complex b = pairing(tor, probe, l, fast);
        CHECK(std::abs(a - b) <= 1e-8 * (std::abs(a) + 1.0));
        Complex c = pairing(sph, probe, l);
        Complex d = pairing(sph, probe, l, fast);
        CHECK(std::abs(c - d) <= 1e-8 * (std::abs(c) + 1.0));
    }
}

TEST_CASE("torus prediction error decays like lambda^-2") {
    auto tor = ParametricSurface::torus(2.0, 1.0);
    auto probe = ProbeFunction::height({1, 0, 0});
    auto pts = morse::critical_points(tor, probe);
    auto err_at = [&](double l) {
        UniformGrid g{l, 1.0, 1};
        auto pred = predict(pts, g);
        return std::abs(pairing(tor, probe, l) - pred.sum[0]);
    };
    double e30 = err_at(30.0), e60 = err_at(60.0);
    CHECK(e30 / e60 == doctest::Approx(4.0).epsilon(0.5));
}

TEST_CASE("spectrum csv round trip is bit exact") {
    auto sph = ParametricSurface::sphere(1.0);
    auto s = spectrum(sph, ProbeFunction::height({0, 0, 1}), 0.25, 64);
    auto dir = std::filesystem::temp_directory_path() / "euchar_osc_test";
    std::filesystem::create_directories(dir);
    auto path = (dir / "spec.csv").string();
    write_spectrum_csv(s, path);
    auto back = read_spectrum_csv(path);
    REQUIRE(back.values.size() == s.values.size());
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        CHECK(back.values[j].real() == s.values[j].real());
        CHECK(back.values[j].imag() == s.values[j].imag());
        CHECK(back.lambda_grid[j] == s.lambda_grid[j]);
    }
    CHECK(to_json(s).find("delta_lambda") != std::string::npos);
}
