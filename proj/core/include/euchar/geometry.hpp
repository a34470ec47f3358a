#pragma once

// Closed oriented surfaces in R^3: triangle meshes, parametric charts and
// implicit level sets, plus the combinatorial Euler-characteristic oracles
// used to cross-check every spectral recovery downstream.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "euchar/core.hpp"

namespace euchar {

// ---------------------------------------------------------------------------
// TriangleMesh
// ---------------------------------------------------------------------------

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;  // oriented vertex triples

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t face_count() const { return faces.size(); }

    Vec3 face_normal(std::size_t f) const;      // unit normal, orientation-bearing
    double face_area(std::size_t f) const;
    Vec3 face_centroid(std::size_t f) const;

    // Axis-aligned bounding box diagonal; the length scale for tolerances.
    double bbox_diagonal() const;

    // Checks closedness (every undirected edge on exactly 2 faces), consistent
    // orientation (each directed edge used exactly once) and non-degeneracy
    // (face areas above eps_area, default 1e-12 * diag^2).
    // Throws TopologyError / ParameterError on violation.
    void validate(double eps_area = -1.0) const;

    void flip_orientation();
    void translate(const Vec3& c);
    void rotate(const std::array<std::array<double, 3>, 3>& R);
};

// V - E + F. Requires a closed mesh (validate() semantics for edges).
int euler_characteristic_mesh(const TriangleMesh& mesh);

// Sum over vertices of (2*pi - sum of incident face angles). Equals
// 2*pi*(V - E + F) exactly for any closed triangle mesh.
double angle_defect_total(const TriangleMesh& mesh);

double total_area(const TriangleMesh& mesh);

// ---------------------------------------------------------------------------
// ParametricSurface: a smooth closed chart image with analytic derivatives.
//
// Charts live on [0,2*pi)^2 with both directions periodic. The sphere and
// ellipsoid use the doubled polar chart (the image covers the surface twice,
// cover_count = 2, with degenerate rows at v in {0, pi}); the torus chart
// covers once.
// ---------------------------------------------------------------------------

enum class SurfaceKind { Sphere, Ellipsoid, Torus };

struct ChartJet {
    Vec3 p;            // position
    Vec3 du, dv;       // first derivatives
    Vec3 duu, duv, dvv;  // second derivatives
};

struct FundamentalForms {
    double E, F, G;  // first
    double L, M, N;  // second, w.r.t. the chart normal du x dv / |du x dv|
};

class ParametricSurface {
  public:
    static ParametricSurface sphere(double radius);
    static ParametricSurface ellipsoid(double a, double b, double c);
    static ParametricSurface torus(double major_radius, double minor_radius);

    SurfaceKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    std::string label() const;

    // Number of times the chart covers the surface (1 or 2).
    int cover_count() const { return cover_count_; }

    // Rows v = const where the chart fails to immerse (sphere poles).
    const std::vector<double>& degenerate_rows_v() const { return degenerate_rows_v_; }

    ChartJet jet(double u, double v) const;
    Vec3 position(double u, double v) const { return jet(u, v).p; }

    // position and |du x dv| only, via the closed-form area element of the
    // kind; the hot path of the oscillatory quadrature
    std::pair<Vec3, double> position_and_weight(double u, double v) const;

    // Outward unit normal, well defined at chart-degenerate rows too
    // (computed from the closed-form Gauss map of the kind).
    Vec3 outward_normal(double u, double v) const;

    // True where |du x dv| is above eps * scale^2.
    bool immersed_at(double u, double v, double eps = 1e-9) const;

    FundamentalForms fundamental_forms(double u, double v) const;

    // K = (LN - M^2)/(EG - F^2). Throws DegenerateChartError when the first
    // form is singular at the point.
    double gauss_curvature(double u, double v) const;

    // Upper bounds max |du|, |dv| over the chart (sampled, with margin);
    // used to size oscillation-aware quadrature grids.
    double max_du() const { return max_du_; }
    double max_dv() const { return max_dv_; }

    double bounding_radius() const { return bounding_radius_; }
    double length_scale() const { return 2.0 * bounding_radius_; }

    // Area by adaptive quadrature of |du x dv| / cover_count.
    double area(double rel_tol = 1e-10) const;

  private:
    ParametricSurface() = default;
    void finish_setup();

    SurfaceKind kind_ = SurfaceKind::Sphere;
    std::vector<double> params_;
    int cover_count_ = 1;
    std::vector<double> degenerate_rows_v_;
    double max_du_ = 0.0, max_dv_ = 0.0;
    double bounding_radius_ = 0.0;
};

// ---------------------------------------------------------------------------
// ImplicitSurface: scalar field with gradient, meshed by marching tetrahedra.
// ---------------------------------------------------------------------------

struct ImplicitSurface {
    std::function<double(const Vec3&)> field;
    std::function<Vec3(const Vec3&)> gradient;
    Vec3 box_min, box_max;
};

// The standard genus-2 level set used as a fixture:
// f = (x^2 (1 - x^2) - y^2)^2 + z^2 / 2 - 0.02 on [-1.5,1.5] x [-1,1] x [-1,1].
ImplicitSurface genus2_field();
ImplicitSurface sphere_field(double radius);
ImplicitSurface torus_field(double major_radius, double minor_radius);

// Marching tetrahedra (6 tets per cube) on a uniform grid with `resolution`
// cells per axis. Vertices are placed by linear interpolation on grid edges
// and deduplicated; faces are oriented so normals align with grad f.
// Throws TopologyError if the extracted surface has boundary.
TriangleMesh mesh_implicit(const ImplicitSurface& surface, int resolution);

// ---------------------------------------------------------------------------
// Builtin generators
// ---------------------------------------------------------------------------

// Returns the exact chart and a consistent triangulation of it.
// sphere: params = {R}; ellipsoid: {a,b,c}; torus: {R,r} with R > r.
std::pair<ParametricSurface, TriangleMesh>
generate_parametric(SurfaceKind kind, const std::vector<double>& params, int resolution);

// ---------------------------------------------------------------------------
// OBJ I/O (ASCII subset: v/f records, triangles only, 1-based indices)
// ---------------------------------------------------------------------------

void write_obj(const TriangleMesh& mesh, const std::string& path,
               const std::vector<std::string>& header_comments = {});
TriangleMesh read_obj(const std::string& path);

}  // namespace euchar
