#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "euchar/geometry.hpp"

using namespace euchar;

namespace {

TriangleMesh tetrahedron() {
    TriangleMesh m;
    m.vertices = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    // outward-oriented faces
    m.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
    return m;
}

}  // namespace

TEST_CASE("tetrahedron oracle values") {
    auto m = tetrahedron();
    m.validate();
    CHECK(euler_characteristic_mesh(m) == 2);
    CHECK(angle_defect_total(m) == doctest::Approx(4.0 * kPi).epsilon(1e-12));
}

TEST_CASE("generated sphere and torus topology") {
    auto [ss, sm] = generate_parametric(SurfaceKind::Sphere, {1.0}, 64);
    CHECK(euler_characteristic_mesh(sm) == 2);
    auto [ts, tm] = generate_parametric(SurfaceKind::Torus, {2.0, 1.0}, 64);
    CHECK(euler_characteristic_mesh(tm) == 0);

    // angle defect is 2 pi chi exactly, up to rounding
    CHECK(angle_defect_total(sm) == doctest::Approx(4.0 * kPi).epsilon(1e-9));
    CHECK(std::abs(angle_defect_total(tm)) < 1e-9 * 4.0 * kPi);
}

TEST_CASE("mesh areas converge to the smooth area") {
    auto [s, m] = generate_parametric(SurfaceKind::Sphere, {1.0}, 128);
    CHECK(total_area(m) == doctest::Approx(4.0 * kPi).epsilon(1e-3));

    // refinement convergence at order h^2
    double e1 = std::abs(total_area(generate_parametric(SurfaceKind::Sphere, {1.0}, 16).second) -
                         4.0 * kPi);
    double e2 = std::abs(total_area(generate_parametric(SurfaceKind::Sphere, {1.0}, 32).second) -
                         4.0 * kPi);
    double e3 = std::abs(total_area(generate_parametric(SurfaceKind::Sphere, {1.0}, 64).second) -
                         4.0 * kPi);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("parametric areas by quadrature") {
    CHECK(ParametricSurface::sphere(1.0).area() == doctest::Approx(4.0 * kPi).epsilon(1e-8));
    CHECK(ParametricSurface::torus(2.0, 1.0).area() ==
          doctest::Approx(8.0 * kPi * kPi).epsilon(1e-6));
}

TEST_CASE("gauss curvature closed forms") {
    auto sph = ParametricSurface::sphere(1.0);
    CHECK(sph.gauss_curvature(0.7, 1.1) == doctest::Approx(1.0).epsilon(1e-10));
    auto sph2 = ParametricSurface::sphere(2.0);
    CHECK(sph2.gauss_curvature(2.9, 2.0) == doctest::Approx(0.25).epsilon(1e-10));

    // torus closed form K = cos v / (r (R + r cos v))
    auto tor = ParametricSurface::torus(2.0, 1.0);
    CHECK(tor.gauss_curvature(0.3, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(tor.gauss_curvature(1.2, kPi) == doctest::Approx(-1.0).epsilon(1e-10));
    for (double v : {0.4, 1.7, 2.6, 4.4}) {
        double expected = std::cos(v) / (1.0 * (2.0 + std::cos(v)));
        CHECK(tor.gauss_curvature(0.9, v) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("gauss curvature matches finite-difference fundamental forms") {
    // independent oracle: centered differences of the chart, no analytic jets
    auto tor = ParametricSurface::torus(2.0, 1.0);
    auto pos = [&](double u, double v) { return tor.position(u, v); };
    const double h = 1e-5;
    for (auto [u, v] : {std::pair{0.5, 0.8}, std::pair{2.2, 2.9}, std::pair{4.0, 5.5}}) {
        Vec3 du = (pos(u + h, v) - pos(u - h, v)) / (2 * h);
        Vec3 dv = (pos(u, v + h) - pos(u, v - h)) / (2 * h);
        Vec3 duu = (pos(u + h, v) - pos(u, v) * 2.0 + pos(u - h, v)) / (h * h);
        Vec3 dvv = (pos(u, v + h) - pos(u, v) * 2.0 + pos(u, v - h)) / (h * h);
        Vec3 duv = (pos(u + h, v + h) - pos(u + h, v - h) - pos(u - h, v + h) +
                    pos(u - h, v - h)) / (4 * h * h);
        Vec3 n = normalized(cross(du, dv));
        double E = dot(du, du), F = dot(du, dv), G = dot(dv, dv);
        double L = dot(n, duu), M = dot(n, duv), N = dot(n, dvv);
        double K_fd = (L * N - M * M) / (E * G - F * F);
        CHECK(tor.gauss_curvature(u, v) == doctest::Approx(K_fd).epsilon(1e-5));
    }
}

TEST_CASE("marching tetrahedra fixtures") {
    SUBCASE("sphere level set") {
        auto m = mesh_implicit(sphere_field(1.0), 32);
        CHECK(euler_characteristic_mesh(m) == 2);
    }
    SUBCASE("torus level set") {
        auto m = mesh_implicit(torus_field(2.0, 1.0), 64);
        CHECK(euler_characteristic_mesh(m) == 0);
    }
    SUBCASE("genus-2 level set") {
        auto m = mesh_implicit(genus2_field(), 96);
        int chi = euler_characteristic_mesh(m);
        CHECK(chi == -2);
        // Gauss-Bonnet cross-oracle
        CHECK(angle_defect_total(m) == doctest::Approx(2.0 * kPi * chi).epsilon(1e-6));
    }
    SUBCASE("zero set touching the box is rejected") {
        ImplicitSurface s = sphere_field(1.0);
        s.box_min = {-0.5, -2, -2};
        s.box_max = {2, 2, 2};
        CHECK_THROWS_AS(mesh_implicit(s, 32), TopologyError);
    }
}

TEST_CASE("orientation flip leaves scalars unchanged and negates normals") {
    auto [s, m] = generate_parametric(SurfaceKind::Torus, {2.0, 1.0}, 24);
    Vec3 n0 = m.face_normal(7);
    double area = total_area(m);
    int chi = euler_characteristic_mesh(m);
    double defect = angle_defect_total(m);

    TriangleMesh flipped = m;
    flipped.flip_orientation();
    flipped.validate();
    Vec3 n1 = flipped.face_normal(7);
    CHECK(dot(n0, n1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(total_area(flipped) == doctest::Approx(area).epsilon(1e-15));
    CHECK(euler_characteristic_mesh(flipped) == chi);
    CHECK(angle_defect_total(flipped) == doctest::Approx(defect).epsilon(1e-9));
}

TEST_CASE("generated sphere faces point outward") {
    auto [s, m] = generate_parametric(SurfaceKind::Sphere, {1.0}, 16);
    for (std::size_t f = 0; f < m.face_count(); ++f) {
        CHECK(dot(m.face_normal(f), m.face_centroid(f)) > 0.0);
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(generate_parametric(SurfaceKind::Sphere, {-1.0}, 32), ParameterError);
    CHECK_THROWS_AS(generate_parametric(SurfaceKind::Torus, {1.0, 2.0}, 32), ParameterError);
    CHECK_THROWS_AS(generate_parametric(SurfaceKind::Sphere, {1.0}, 2), ParameterError);
    CHECK_THROWS_AS(mesh_implicit(sphere_field(1.0), 8), ParameterError);
}

TEST_CASE("open and degenerate meshes are rejected") {
    TriangleMesh open_mesh;
    open_mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    open_mesh.faces = {{0, 1, 2}};
    CHECK_THROWS_AS(open_mesh.validate(), TopologyError);
    CHECK_THROWS_AS(euler_characteristic_mesh(open_mesh), TopologyError);

    auto degen = tetrahedron();
    degen.vertices[3] = degen.vertices[0];  // collapses faces
    CHECK_THROWS(degen.validate());
}

TEST_CASE("obj round trip") {
    auto m = tetrahedron();
    auto dir = std::filesystem::temp_directory_path() / "euchar_geom_test";
    std::filesystem::create_directories(dir);
    auto path = (dir / "tet.obj").string();
    write_obj(m, path, {"unit test fixture"});
    auto back = read_obj(path);
    REQUIRE(back.vertex_count() == m.vertex_count());
    REQUIRE(back.face_count() == m.face_count());
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        CHECK(back.vertices[i].x == m.vertices[i].x);
        CHECK(back.vertices[i].y == m.vertices[i].y);
        CHECK(back.vertices[i].z == m.vertices[i].z);
    }
    CHECK(back.faces == m.faces);
    CHECK_THROWS_AS(read_obj((dir / "missing.obj").string()), IoError);
}

TEST_CASE("single right triangle area helper path") {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 2}};
    CHECK(m.face_area(0) == doctest::Approx(0.5).epsilon(1e-15));
}
