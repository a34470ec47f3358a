#include "euchar/geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "euchar/detail/quadrature.hpp"

namespace euchar {

// ---------------------------------------------------------------------------
// TriangleMesh
// ---------------------------------------------------------------------------

Vec3 TriangleMesh::face_normal(std::size_t f) const {
    const auto& t = faces[f];
    Vec3 n = cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
    return normalized(n);
}

double TriangleMesh::face_area(std::size_t f) const {
    const auto& t = faces[f];
    return 0.5 * cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]).norm();
}

Vec3 TriangleMesh::face_centroid(std::size_t f) const {
    const auto& t = faces[f];
    return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

double TriangleMesh::bbox_diagonal() const {
    if (vertices.empty()) return 0.0;
    Vec3 lo = vertices[0], hi = vertices[0];
    for (const auto& v : vertices) {
        lo.x = std::min(lo.x, v.x); lo.y = std::min(lo.y, v.y); lo.z = std::min(lo.z, v.z);
        hi.x = std::max(hi.x, v.x); hi.y = std::max(hi.y, v.y); hi.z = std::max(hi.z, v.z);
    }
    return (hi - lo).norm();
}

namespace {

inline std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

void TriangleMesh::validate(double eps_area) const {
    if (vertices.empty() || faces.empty()) throw TopologyError("empty mesh");
    const double diag = bbox_diagonal();
    if (eps_area < 0.0) eps_area = 1e-12 * diag * diag;

    const std::uint32_t nv = static_cast<std::uint32_t>(vertices.size());
    // key -> (count a->b with a<b, count b->a)
    std::unordered_map<std::uint64_t, std::pair<int, int>> edges;
    edges.reserve(faces.size() * 3);

    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& t = faces[f];
        for (int k = 0; k < 3; ++k) {
            if (t[k] >= nv) throw TopologyError("face references missing vertex");
            std::uint32_t a = t[k], b = t[(k + 1) % 3];
            if (a == b) throw TopologyError("face with repeated vertex");
            auto& e = edges[edge_key(a, b)];
            (a < b ? e.first : e.second) += 1;
        }
        if (face_area(f) <= eps_area) {
            throw ParameterError("degenerate face " + std::to_string(f) +
                                 " (area below eps_area)");
        }
    }
    for (const auto& [key, counts] : edges) {
        (void)key;
        if (counts.first + counts.second != 2) {
            throw TopologyError("mesh is not closed: edge shared by " +
                                std::to_string(counts.first + counts.second) + " faces");
        }
        if (counts.first != 1 || counts.second != 1) {
            throw TopologyError("inconsistent orientation: edge traversed twice in one direction");
        }
    }
}

void TriangleMesh::flip_orientation() {
    for (auto& t : faces) std::swap(t[1], t[2]);
}

void TriangleMesh::translate(const Vec3& c) {
    for (auto& v : vertices) v += c;
}

void TriangleMesh::rotate(const std::array<std::array<double, 3>, 3>& R) {
    for (auto& v : vertices) {
        Vec3 w{R[0][0] * v.x + R[0][1] * v.y + R[0][2] * v.z,
               R[1][0] * v.x + R[1][1] * v.y + R[1][2] * v.z,
               R[2][0] * v.x + R[2][1] * v.y + R[2][2] * v.z};
        v = w;
    }
}

int euler_characteristic_mesh(const TriangleMesh& mesh) {
    std::unordered_map<std::uint64_t, int> edges;
    edges.reserve(mesh.faces.size() * 3);
    for (const auto& t : mesh.faces) {
        for (int k = 0; k < 3; ++k) edges[edge_key(t[k], t[(k + 1) % 3])] += 1;
    }
    for (const auto& [key, c] : edges) {
        (void)key;
        if (c != 2) throw TopologyError("mesh is not closed");
    }
    const long long V = static_cast<long long>(mesh.vertices.size());
    const long long E = static_cast<long long>(edges.size());
    const long long F = static_cast<long long>(mesh.faces.size());
    return static_cast<int>(V - E + F);
}

double angle_defect_total(const TriangleMesh& mesh) {
    std::vector<double> angle_sum(mesh.vertices.size(), 0.0);
    for (const auto& t : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            const Vec3& p = mesh.vertices[t[k]];
            Vec3 e1 = mesh.vertices[t[(k + 1) % 3]] - p;
            Vec3 e2 = mesh.vertices[t[(k + 2) % 3]] - p;
            angle_sum[t[k]] += std::atan2(cross(e1, e2).norm(), dot(e1, e2));
        }
    }
    double defect = 0.0;
    for (double s : angle_sum) defect += 2.0 * kPi - s;
    return defect;
}

double total_area(const TriangleMesh& mesh) {
    double a = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) a += mesh.face_area(f);
    return a;
}

// ---------------------------------------------------------------------------
// ParametricSurface
// ---------------------------------------------------------------------------

ParametricSurface ParametricSurface::sphere(double radius) {
    if (radius <= 0.0) throw ParameterError("sphere radius must be positive");
    ParametricSurface s;
    s.kind_ = SurfaceKind::Sphere;
    s.params_ = {radius};
    s.cover_count_ = 2;
    s.degenerate_rows_v_ = {0.0, kPi, 2.0 * kPi};
    s.finish_setup();
    return s;
}

ParametricSurface ParametricSurface::ellipsoid(double a, double b, double c) {
    if (a <= 0.0 || b <= 0.0 || c <= 0.0) throw ParameterError("ellipsoid semi-axes must be positive");
    ParametricSurface s;
    s.kind_ = SurfaceKind::Ellipsoid;
    s.params_ = {a, b, c};
    s.cover_count_ = 2;
    s.degenerate_rows_v_ = {0.0, kPi, 2.0 * kPi};
    s.finish_setup();
    return s;
}

ParametricSurface ParametricSurface::torus(double major_radius, double minor_radius) {
    if (major_radius <= 0.0 || minor_radius <= 0.0)
        throw ParameterError("torus radii must be positive");
    if (major_radius <= minor_radius)
        throw ParameterError("torus requires R > r");
    ParametricSurface s;
    s.kind_ = SurfaceKind::Torus;
    s.params_ = {major_radius, minor_radius};
    s.cover_count_ = 1;
    s.finish_setup();
    return s;
}

void ParametricSurface::finish_setup() {
    // Sampled chart Lipschitz bounds with margin; drives quadrature grids.
    const int n = 96;
    double mu = 0.0, mv = 0.0, br = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            ChartJet J = jet(2.0 * kPi * (i + 0.5) / n, 2.0 * kPi * (j + 0.5) / n);
            mu = std::max(mu, J.du.norm());
            mv = std::max(mv, J.dv.norm());
            br = std::max(br, J.p.norm());
        }
    }
    max_du_ = 1.05 * mu;
    max_dv_ = 1.05 * mv;
    bounding_radius_ = br;
}

std::string ParametricSurface::label() const {
    char buf[128];
    switch (kind_) {
        case SurfaceKind::Sphere:
            std::snprintf(buf, sizeof buf, "sphere{R=%g}", params_[0]);
            break;
        case SurfaceKind::Ellipsoid:
            std::snprintf(buf, sizeof buf, "ellipsoid{a=%g,b=%g,c=%g}", params_[0], params_[1], params_[2]);
            break;
        case SurfaceKind::Torus:
            std::snprintf(buf, sizeof buf, "torus{R=%g,r=%g}", params_[0], params_[1]);
            break;
    }
    return buf;
}

ChartJet ParametricSurface::jet(double u, double v) const {
    const double cu = std::cos(u), su = std::sin(u);
    const double cv = std::cos(v), sv = std::sin(v);
    ChartJet J;
    switch (kind_) {
        case SurfaceKind::Sphere:
        case SurfaceKind::Ellipsoid: {
            const double a = params_[0];
            const double b = kind_ == SurfaceKind::Sphere ? params_[0] : params_[1];
            const double c = kind_ == SurfaceKind::Sphere ? params_[0] : params_[2];
            J.p   = {a * cu * sv,  b * su * sv,  c * cv};
            J.du  = {-a * su * sv, b * cu * sv,  0.0};
            J.dv  = {a * cu * cv,  b * su * cv,  -c * sv};
            J.duu = {-a * cu * sv, -b * su * sv, 0.0};
            J.duv = {-a * su * cv, b * cu * cv,  0.0};
            J.dvv = {-a * cu * sv, -b * su * sv, -c * cv};
            break;
        }
        case SurfaceKind::Torus: {
            const double R = params_[0], r = params_[1];
            const double w = R + r * cv;
            J.p   = {w * cu,       w * su,       r * sv};
            J.du  = {-w * su,      w * cu,       0.0};
            J.dv  = {-r * sv * cu, -r * sv * su, r * cv};
            J.duu = {-w * cu,      -w * su,      0.0};
            J.duv = {r * sv * su,  -r * sv * cu, 0.0};
            J.dvv = {-r * cv * cu, -r * cv * su, -r * sv};
            break;
        }
    }
    return J;
}

std::pair<Vec3, double> ParametricSurface::position_and_weight(double u, double v) const {
    const double cu = std::cos(u), su = std::sin(u);
    const double cv = std::cos(v), sv = std::sin(v);
    switch (kind_) {
        case SurfaceKind::Sphere: {
            const double R = params_[0];
            return {{R * cu * sv, R * su * sv, R * cv}, R * R * std::abs(sv)};
        }
        case SurfaceKind::Ellipsoid: {
            const double a = params_[0], b = params_[1], c = params_[2];
            Vec3 du{-a * su * sv, b * cu * sv, 0.0};
            Vec3 dv{a * cu * cv, b * su * cv, -c * sv};
            return {{a * cu * sv, b * su * sv, c * cv}, cross(du, dv).norm()};
        }
        case SurfaceKind::Torus: {
            const double R = params_[0], r = params_[1];
            const double w = R + r * cv;
            return {{w * cu, w * su, r * sv}, r * w};
        }
    }
    throw ParameterError("unknown surface kind");
}

Vec3 ParametricSurface::outward_normal(double u, double v) const {
    switch (kind_) {
        case SurfaceKind::Sphere:
            return position(u, v) / params_[0];
        case SurfaceKind::Ellipsoid: {
            Vec3 p = position(u, v);
            return normalized({p.x / (params_[0] * params_[0]),
                               p.y / (params_[1] * params_[1]),
                               p.z / (params_[2] * params_[2])});
        }
        case SurfaceKind::Torus: {
            Vec3 p = position(u, v);
            Vec3 ring{params_[0] * std::cos(u), params_[0] * std::sin(u), 0.0};
            return (p - ring) / params_[1];
        }
    }
    throw ParameterError("unknown surface kind");
}

bool ParametricSurface::immersed_at(double u, double v, double eps) const {
    ChartJet J = jet(u, v);
    double scale = bounding_radius_ * bounding_radius_;
    return cross(J.du, J.dv).norm() > eps * scale;
}

FundamentalForms ParametricSurface::fundamental_forms(double u, double v) const {
    ChartJet J = jet(u, v);
    Vec3 c = cross(J.du, J.dv);
    double cn = c.norm();
    if (cn <= 1e-12 * bounding_radius_ * bounding_radius_) {
        throw DegenerateChartError("chart not immersed at the requested point");
    }
    Vec3 nc = c / cn;
    return {dot(J.du, J.du), dot(J.du, J.dv), dot(J.dv, J.dv),
            dot(nc, J.duu), dot(nc, J.duv), dot(nc, J.dvv)};
}

double ParametricSurface::gauss_curvature(double u, double v) const {
    FundamentalForms f = fundamental_forms(u, v);
    double det1 = f.E * f.G - f.F * f.F;
    if (det1 <= 1e-12 * std::pow(bounding_radius_, 4)) {
        throw DegenerateChartError("first fundamental form is singular");
    }
    return (f.L * f.N - f.M * f.M) / det1;
}

double ParametricSurface::area(double rel_tol) const {
    auto f = [this](double u, double v) {
        ChartJet J = jet(u, v);
        return cross(J.du, J.dv).norm();
    };
    // Scale estimate for the absolute tolerance.
    double rough = 4.0 * kPi * bounding_radius_ * bounding_radius_;
    auto cells = detail::initial_cells(0.0, 2.0 * kPi, 0.0, 2.0 * kPi, 8, 8, degenerate_rows_v_);
    double out = 0.0;
    auto res = detail::adaptive_integrate<double>(f, cells, rel_tol * rough, 2'000'000, out);
    if (!res.converged) throw AccuracyError("area quadrature budget exhausted", res.error_estimate);
    return out / cover_count_;
}

// ---------------------------------------------------------------------------
// Builtin implicit fields
// ---------------------------------------------------------------------------

ImplicitSurface genus2_field() {
    ImplicitSurface s;
    s.field = [](const Vec3& p) {
        double q = p.x * p.x * (1.0 - p.x * p.x) - p.y * p.y;
        return q * q + 0.5 * p.z * p.z - 0.02;
    };
    s.gradient = [](const Vec3& p) {
        double q = p.x * p.x * (1.0 - p.x * p.x) - p.y * p.y;
        double dq_dx = 2.0 * p.x - 4.0 * p.x * p.x * p.x;
        return Vec3{2.0 * q * dq_dx, 2.0 * q * (-2.0 * p.y), p.z};
    };
    s.box_min = {-1.5, -1.0, -1.0};
    s.box_max = {1.5, 1.0, 1.0};
    return s;
}

ImplicitSurface sphere_field(double radius) {
    if (radius <= 0.0) throw ParameterError("sphere radius must be positive");
    ImplicitSurface s;
    s.field = [radius](const Vec3& p) { return p.squared_norm() - radius * radius; };
    s.gradient = [](const Vec3& p) { return p * 2.0; };
    double b = 2.0 * radius;
    s.box_min = {-b, -b, -b};
    s.box_max = {b, b, b};
    return s;
}

ImplicitSurface torus_field(double major_radius, double minor_radius) {
    if (major_radius <= minor_radius || minor_radius <= 0.0)
        throw ParameterError("torus requires R > r > 0");
    ImplicitSurface s;
    double R = major_radius, r = minor_radius;
    s.field = [R, r](const Vec3& p) {
        double rho = std::sqrt(p.x * p.x + p.y * p.y);
        double d = rho - R;
        return d * d + p.z * p.z - r * r;
    };
    s.gradient = [R](const Vec3& p) {
        double rho = std::sqrt(p.x * p.x + p.y * p.y);
        if (rho == 0.0) return Vec3{0, 0, 2.0 * p.z};
        double f = 2.0 * (rho - R) / rho;
        return Vec3{f * p.x, f * p.y, 2.0 * p.z};
    };
    double b = 1.4 * (R + r);
    s.box_min = {-b, -b, -1.4 * r - 0.4};
    s.box_max = {b, b, 1.4 * r + 0.4};
    return s;
}

// ---------------------------------------------------------------------------
// Marching tetrahedra
// ---------------------------------------------------------------------------

namespace {

// Kuhn 6-tetrahedra split of the unit cube around the 0-7 diagonal. Shared
// cube faces are cut along matching diagonals in neighbor cubes, so the
// extraction is watertight.
constexpr int kTets[6][4] = {
    {0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7}, {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};

struct MtBuilder {
    const ImplicitSurface& surf;
    int res;
    Vec3 bmin, cellsize;
    int nx1 = 0, ny1 = 0, nz1 = 0;  // grid point counts per axis
    std::uint64_t npoints = 0;

    std::vector<double> values;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;
    TriangleMesh mesh;

    std::uint64_t gid(int i, int j, int k) const {
        return (static_cast<std::uint64_t>(i) * ny1 + j) * nz1 + k;
    }
    Vec3 gpoint(int i, int j, int k) const {
        return {bmin.x + cellsize.x * i, bmin.y + cellsize.y * j, bmin.z + cellsize.z * k};
    }

    std::uint32_t edge_point(std::uint64_t ga, std::uint64_t gb, const Vec3& pa, const Vec3& pb,
                             double fa, double fb) {
        // snap interpolated vertices onto grid points; collapses duplicates
        double t = fa / (fa - fb);
        std::uint64_t key;
        Vec3 p;
        const double snap = 1e-9;
        if (t < snap) {
            key = (ga << 1) | 1ull;  // tag grid-point keys to avoid clashing with edge keys
            p = pa;
        } else if (t > 1.0 - snap) {
            key = (gb << 1) | 1ull;
            p = pb;
        } else {
            // exact unique edge key: grid ids fit in well under 32 bits each
            std::uint64_t lo = std::min(ga, gb), hi = std::max(ga, gb);
            key = ((lo * npoints + hi) << 1);
            p = pa + (pb - pa) * t;
        }
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        std::uint32_t idx = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(p);
        edge_vertex.emplace(key, idx);
        return idx;
    }

    void emit(std::uint32_t a, std::uint32_t b, std::uint32_t c) {
        if (a == b || b == c || a == c) return;  // collapsed sliver
        Vec3 n = cross(mesh.vertices[b] - mesh.vertices[a], mesh.vertices[c] - mesh.vertices[a]);
        Vec3 centroid = (mesh.vertices[a] + mesh.vertices[b] + mesh.vertices[c]) / 3.0;
        if (dot(n, surf.gradient(centroid)) < 0.0) std::swap(b, c);
        mesh.faces.push_back({a, b, c});
    }

    void run() {
        nx1 = res + 1; ny1 = res + 1; nz1 = res + 1;
        npoints = static_cast<std::uint64_t>(nx1) * ny1 * nz1;
        cellsize = (surf.box_max - surf.box_min) / static_cast<double>(res);
        bmin = surf.box_min;

        values.resize(static_cast<std::size_t>(nx1) * ny1 * nz1);
        for (int i = 0; i < nx1; ++i)
            for (int j = 0; j < ny1; ++j)
                for (int k = 0; k < nz1; ++k) values[gid(i, j, k)] = surf.field(gpoint(i, j, k));

        // the zero set must not touch the box boundary
        for (int i = 0; i < nx1; ++i)
            for (int j = 0; j < ny1; ++j)
                for (int k = 0; k < nz1; ++k) {
                    if (i > 0 && i < res && j > 0 && j < res && k > 0 && k < res) continue;
                    if (values[gid(i, j, k)] <= 0.0)
                        throw TopologyError(
                            "implicit surface reaches the bounding box; enlarge the box");
                }

        for (int i = 0; i < res; ++i) {
            for (int j = 0; j < res; ++j) {
                for (int k = 0; k < res; ++k) {
                    // local corner ids by bits (x,y,z)
                    int ci[8], cj[8], ck[8];
                    for (int c = 0; c < 8; ++c) {
                        ci[c] = i + (c & 1);
                        cj[c] = j + ((c >> 1) & 1);
                        ck[c] = k + ((c >> 2) & 1);
                    }
                    for (const auto& tet : kTets) {
                        process_tet(ci, cj, ck, tet);
                    }
                }
            }
        }

        if (mesh.faces.empty()) throw TopologyError("no surface found in the bounding box");
    }

    void process_tet(const int* ci, const int* cj, const int* ck, const int tet[4]) {
        double f[4];
        std::uint64_t g[4];
        Vec3 p[4];
        int inside_mask = 0;
        for (int m = 0; m < 4; ++m) {
            int c = tet[m];
            g[m] = gid(ci[c], cj[c], ck[c]);
            p[m] = gpoint(ci[c], cj[c], ck[c]);
            f[m] = values[g[m]];
            if (f[m] < 0.0) inside_mask |= 1 << m;  // f == 0 counts as outside
        }
        if (inside_mask == 0 || inside_mask == 0xF) return;

        int in[4], out[4], ni = 0, no = 0;
        for (int m = 0; m < 4; ++m) (inside_mask >> m & 1 ? in[ni++] : out[no++]) = m;

        auto ep = [&](int a, int b) {
            return edge_point(g[a], g[b], p[a], p[b], f[a], f[b]);
        };

        if (ni == 1) {
            emit(ep(in[0], out[0]), ep(in[0], out[1]), ep(in[0], out[2]));
        } else if (ni == 3) {
            emit(ep(in[0], out[0]), ep(in[1], out[0]), ep(in[2], out[0]));
        } else {
            // two in, two out: quad split into two triangles
            std::uint32_t q00 = ep(in[0], out[0]), q01 = ep(in[0], out[1]);
            std::uint32_t q10 = ep(in[1], out[0]), q11 = ep(in[1], out[1]);
            emit(q00, q01, q11);
            emit(q00, q11, q10);
        }
    }
};

// Collapses the shortest edge of every face whose area sits at the validation
// floor (micro-triangles and needle slivers from tets the surface barely
// grazes). Clusters are merged at their centroid; iterated until clean. The
// affected features are thousands of times smaller than a grid cell.
void collapse_degenerate_faces(TriangleMesh& m, double eps_area, int max_passes = 10) {
    for (int pass = 0; pass < max_passes; ++pass) {
        std::vector<std::uint32_t> parent(m.vertices.size());
        for (std::uint32_t i = 0; i < parent.size(); ++i) parent[i] = i;
        std::function<std::uint32_t(std::uint32_t)> find = [&](std::uint32_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };

        bool any = false;
        for (const auto& t : m.faces) {
            const Vec3 &p0 = m.vertices[t[0]], &p1 = m.vertices[t[1]], &p2 = m.vertices[t[2]];
            if (0.5 * cross(p1 - p0, p2 - p0).norm() > 2.0 * eps_area) continue;
            double e01 = (p1 - p0).squared_norm(), e12 = (p2 - p1).squared_norm(),
                   e20 = (p0 - p2).squared_norm();
            std::uint32_t a = t[0], b = t[1];
            if (e12 <= e01 && e12 <= e20) a = t[1], b = t[2];
            else if (e20 <= e01 && e20 <= e12) a = t[2], b = t[0];
            parent[find(a)] = find(b);
            any = true;
        }
        if (!any) return;

        // cluster centroids, then remap and drop collapsed faces
        std::vector<Vec3> centroid(m.vertices.size());
        std::vector<int> count(m.vertices.size(), 0);
        for (std::uint32_t i = 0; i < m.vertices.size(); ++i) {
            std::uint32_t r = find(i);
            centroid[r] += m.vertices[i];
            count[r] += 1;
        }
        std::vector<std::uint32_t> remap(m.vertices.size(), UINT32_MAX);
        std::vector<Vec3> verts;
        verts.reserve(m.vertices.size());
        for (std::uint32_t i = 0; i < m.vertices.size(); ++i) {
            std::uint32_t r = find(i);
            if (remap[r] == UINT32_MAX) {
                remap[r] = static_cast<std::uint32_t>(verts.size());
                verts.push_back(centroid[r] / static_cast<double>(count[r]));
            }
            remap[i] = remap[r];
        }
        std::vector<std::array<std::uint32_t, 3>> faces;
        faces.reserve(m.faces.size());
        for (const auto& t : m.faces) {
            std::array<std::uint32_t, 3> f{remap[t[0]], remap[t[1]], remap[t[2]]};
            if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
            faces.push_back(f);
        }
        m.vertices = std::move(verts);
        m.faces = std::move(faces);
    }
}

}  // namespace

TriangleMesh mesh_implicit(const ImplicitSurface& surface, int resolution) {
    if (resolution < 16) throw ParameterError("mesh_implicit requires resolution >= 16");
    if (!(surface.box_max.x > surface.box_min.x && surface.box_max.y > surface.box_min.y &&
          surface.box_max.z > surface.box_min.z))
        throw ParameterError("implicit surface bounding box is empty");

    MtBuilder b{surface, resolution, {}, {}, 0, 0, 0, 0, {}, {}, {}};
    b.run();
    double diag = b.mesh.bbox_diagonal();
    collapse_degenerate_faces(b.mesh, 1e-12 * diag * diag);
    b.mesh.validate();
    return std::move(b.mesh);
}

// ---------------------------------------------------------------------------
// Parametric mesh generation
// ---------------------------------------------------------------------------

namespace {

TriangleMesh uv_sphere_mesh(double a, double b, double c, int resolution) {
    // rings of constant polar angle; poles are single vertices
    const int rings = resolution;          // v subdivisions over [0, pi]
    const int segs = 2 * resolution;       // u subdivisions over [0, 2 pi)
    TriangleMesh m;
    m.vertices.push_back({0.0, 0.0, c});   // north pole
    for (int j = 1; j < rings; ++j) {
        double v = kPi * j / rings;
        for (int i = 0; i < segs; ++i) {
            double u = 2.0 * kPi * i / segs;
            m.vertices.push_back({a * std::cos(u) * std::sin(v), b * std::sin(u) * std::sin(v),
                                  c * std::cos(v)});
        }
    }
    m.vertices.push_back({0.0, 0.0, -c});  // south pole
    const std::uint32_t south = static_cast<std::uint32_t>(m.vertices.size() - 1);
    auto ring_vertex = [&](int j, int i) -> std::uint32_t {
        return 1 + static_cast<std::uint32_t>((j - 1) * segs + (i % segs));
    };

    // top cap: outward orientation is (pole, ring_i, ring_{i+1}) seen from +z
    for (int i = 0; i < segs; ++i) m.faces.push_back({0, ring_vertex(1, i), ring_vertex(1, i + 1)});
    for (int j = 1; j + 1 < rings; ++j) {
        for (int i = 0; i < segs; ++i) {
            std::uint32_t p00 = ring_vertex(j, i), p01 = ring_vertex(j, i + 1);
            std::uint32_t p10 = ring_vertex(j + 1, i), p11 = ring_vertex(j + 1, i + 1);
            m.faces.push_back({p00, p10, p11});
            m.faces.push_back({p00, p11, p01});
        }
    }
    for (int i = 0; i < segs; ++i)
        m.faces.push_back({south, ring_vertex(rings - 1, i + 1), ring_vertex(rings - 1, i)});
    return m;
}

TriangleMesh uv_torus_mesh(double R, double r, int resolution) {
    const int nu = 2 * resolution, nv = resolution;
    TriangleMesh m;
    for (int i = 0; i < nu; ++i) {
        double u = 2.0 * kPi * i / nu;
        for (int j = 0; j < nv; ++j) {
            double v = 2.0 * kPi * j / nv;
            double w = R + r * std::cos(v);
            m.vertices.push_back({w * std::cos(u), w * std::sin(u), r * std::sin(v)});
        }
    }
    auto vid = [&](int i, int j) -> std::uint32_t {
        return static_cast<std::uint32_t>(((i % nu + nu) % nu) * nv + ((j % nv + nv) % nv));
    };
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            std::uint32_t p00 = vid(i, j), p10 = vid(i + 1, j);
            std::uint32_t p01 = vid(i, j + 1), p11 = vid(i + 1, j + 1);
            m.faces.push_back({p00, p10, p11});
            m.faces.push_back({p00, p11, p01});
        }
    }
    return m;
}

}  // namespace

std::pair<ParametricSurface, TriangleMesh>
generate_parametric(SurfaceKind kind, const std::vector<double>& params, int resolution) {
    if (resolution < 3) throw ParameterError("resolution must be >= 3 per periodic direction");
    switch (kind) {
        case SurfaceKind::Sphere: {
            if (params.size() != 1) throw ParameterError("sphere takes one parameter {R}");
            auto s = ParametricSurface::sphere(params[0]);
            auto m = uv_sphere_mesh(params[0], params[0], params[0], resolution);
            m.validate();
            return {std::move(s), std::move(m)};
        }
        case SurfaceKind::Ellipsoid: {
            if (params.size() != 3) throw ParameterError("ellipsoid takes parameters {a,b,c}");
            auto s = ParametricSurface::ellipsoid(params[0], params[1], params[2]);
            auto m = uv_sphere_mesh(params[0], params[1], params[2], resolution);
            m.validate();
            return {std::move(s), std::move(m)};
        }
        case SurfaceKind::Torus: {
            if (params.size() != 2) throw ParameterError("torus takes parameters {R,r}");
            auto s = ParametricSurface::torus(params[0], params[1]);
            auto m = uv_torus_mesh(params[0], params[1], resolution);
            m.validate();
            return {std::move(s), std::move(m)};
        }
    }
    throw ParameterError("unknown surface kind");
}

// ---------------------------------------------------------------------------
// OBJ subset I/O
// ---------------------------------------------------------------------------

void write_obj(const TriangleMesh& mesh, const std::string& path,
               const std::vector<std::string>& header_comments) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& c : header_comments) out << "# " << c << "\n";
    char buf[160];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

TriangleMesh read_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    TriangleMesh mesh;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ss >> p.x >> p.y >> p.z))
                throw IoError(path + ":" + std::to_string(lineno) + ": malformed vertex");
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            std::array<std::uint32_t, 3> f{};
            std::string tok;
            int n = 0;
            while (ss >> tok) {
                if (n >= 3)
                    throw IoError(path + ":" + std::to_string(lineno) +
                                  ": only triangles are supported");
                // accept "i", "i/..." forms; use the vertex index only
                long idx = std::strtol(tok.c_str(), nullptr, 10);
                if (idx <= 0)
                    throw IoError(path + ":" + std::to_string(lineno) + ": bad face index");
                f[n++] = static_cast<std::uint32_t>(idx - 1);
            }
            if (n != 3)
                throw IoError(path + ":" + std::to_string(lineno) + ": face needs 3 vertices");
            mesh.faces.push_back(f);
        }
        // other record types are ignored
    }
    mesh.validate();
    return mesh;
}

}  // namespace euchar
