#include "euchar/morse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace euchar::morse {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// ProbeFunction
// ---------------------------------------------------------------------------

ProbeFunction ProbeFunction::height(const Vec3& direction) {
    ProbeFunction p;
    p.kind = Kind::Height;
    p.omega = normalized(direction);
    return p;
}

ProbeFunction ProbeFunction::distance(const Vec3& exterior_point) {
    ProbeFunction p;
    p.kind = Kind::Distance;
    p.source = exterior_point;
    return p;
}

ProbeFunction ProbeFunction::general(std::function<double(const Vec3&)> value,
                                     std::function<Vec3(const Vec3&)> gradient,
                                     std::function<Mat3(const Vec3&)> hessian) {
    if (!value || !gradient || !hessian)
        throw ParameterError("general probe needs value, gradient and hessian evaluators");
    ProbeFunction p;
    p.kind = Kind::General;
    p.general_value = std::move(value);
    p.general_gradient = std::move(gradient);
    p.general_hessian = std::move(hessian);
    return p;
}

double ProbeFunction::value(const Vec3& p) const {
    switch (kind) {
        case Kind::Height: return dot(omega, p);
        case Kind::Distance: return (p - source).norm();
        case Kind::General: return general_value(p);
    }
    return 0.0;
}

Vec3 ProbeFunction::gradient(const Vec3& p) const {
    switch (kind) {
        case Kind::Height: return omega;
        case Kind::Distance: return normalized(p - source);
        case Kind::General: return general_gradient(p);
    }
    return {};
}

Mat3 ProbeFunction::hessian(const Vec3& p) const {
    switch (kind) {
        case Kind::Height: return Mat3{};
        case Kind::Distance: {
            Vec3 d = p - source;
            double r = d.norm();
            Vec3 rh = d / r;
            Mat3 h;
            const double rr[3] = {rh.x, rh.y, rh.z};
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    h.m[i][j] = ((i == j ? 1.0 : 0.0) - rr[i] * rr[j]) / r;
            return h;
        }
        case Kind::General: return general_hessian(p);
    }
    return {};
}

std::string ProbeFunction::describe() const {
    char buf[160];
    switch (kind) {
        case Kind::Height:
            std::snprintf(buf, sizeof buf, "height{%.12g,%.12g,%.12g}", omega.x, omega.y, omega.z);
            break;
        case Kind::Distance:
            std::snprintf(buf, sizeof buf, "distance{%.12g,%.12g,%.12g}", source.x, source.y,
                          source.z);
            break;
        case Kind::General:
            std::snprintf(buf, sizeof buf, "general");
            break;
    }
    return buf;
}

// ---------------------------------------------------------------------------
// Shared classification helpers
// ---------------------------------------------------------------------------

namespace {

struct Hessian2 {
    double h11 = 0.0, h12 = 0.0, h22 = 0.0;  // surface Hessian of psi in orthonormal coords
    double det() const { return h11 * h22 - h12 * h12; }
    std::pair<double, double> eigenvalues() const {
        double tr = h11 + h22;
        double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det()));
        return {0.5 * (tr - disc), 0.5 * (tr + disc)};
    }
};

struct Classified {
    Vec3 position;
    double value = 0.0;
    Hessian2 hess;
    double det_signed = 0.0;  // surface-Hessian determinant; sign matches n_minus
    double min_abs_eig = 0.0;
    int n_minus = 0;  // # negative eigenvalues of Hess(-psi) = # positive of Hess(psi)
    std::optional<double> curvature;
};

// index_minus per the e^{-i lambda psi} kernel: count positive eigenvalues of
// the surface Hessian of psi (equivalently negative ones of -psi).
int count_index_minus(const Hessian2& h) {
    auto [lo, hi] = h.eigenvalues();
    return (lo > 0.0 ? 1 : 0) + (hi > 0.0 ? 1 : 0);
}

Complex amplitude_for(int n_minus, double hess_det) {
    int n_plus = 2 - n_minus;
    double phase = 0.25 * kPi * (n_plus - n_minus);
    return std::polar(1.0 / std::sqrt(std::abs(hess_det)), phase);
}

CriticalPoint finalize(const Classified& c, double tol_hess) {
    double det = c.det_signed;
    if (std::abs(det) <= tol_hess) {
        throw NonMorseError("degenerate critical point (|hessian det| <= tol); probe is not Morse "
                            "generic here",
                            c.position.to_array());
    }
    CriticalPoint p;
    p.position = c.position;
    p.value = c.value;
    p.index_minus = c.n_minus;
    p.index_plus = 2 - c.n_minus;
    p.hessian_det = det;
    p.curvature = c.curvature;
    p.amplitude = amplitude_for(p.index_minus, det);
    return p;
}

bool position_less(const Vec3& a, const Vec3& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.z < b.z;
}

void sort_points(std::vector<Classified>& pts) {
    std::sort(pts.begin(), pts.end(), [](const Classified& a, const Classified& b) {
        if (a.value != b.value) return a.value < b.value;
        return position_less(a.position, b.position);
    });
}

// Least-squares quadric q(a,b) = A a^2 + B ab + C b^2 + D a + E b + F through
// scattered samples; coordinates are normalized by `rho` for conditioning.
struct QuadricFit {
    double A, B, C, D, E, F0;
};

QuadricFit fit_quadric(const std::vector<std::array<double, 3>>& samples, double rho) {
    Eigen::MatrixXd M(samples.size(), 6);
    Eigen::VectorXd rhs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double a = samples[i][0] / rho, b = samples[i][1] / rho;
        M(i, 0) = a * a;
        M(i, 1) = a * b;
        M(i, 2) = b * b;
        M(i, 3) = a;
        M(i, 4) = b;
        M(i, 5) = 1.0;
        rhs(i) = samples[i][2];
    }
    Eigen::VectorXd x = M.householderQr().solve(rhs);
    return {x(0) / (rho * rho), x(1) / (rho * rho), x(2) / (rho * rho), x(3) / rho, x(4) / rho,
            x(5)};
}

double tangential_residual(const ProbeFunction& probe, const Vec3& p, const Vec3& normal) {
    Vec3 g = probe.gradient(p);
    Vec3 t = g - normal * dot(g, normal);
    return t.norm();
}

}  // namespace

// ---------------------------------------------------------------------------
// Parametric route: damped Newton on the chart stationarity system
// ---------------------------------------------------------------------------

namespace {

struct ChartEval {
    Vec3 p;
    double g1, g2;      // chart gradient of psi∘x
    double j11, j12, j22;  // chart Hessian of psi∘x
};

ChartEval chart_eval(const ParametricSurface& s, const ProbeFunction& probe, double u, double v) {
    ChartJet J = s.jet(u, v);
    Vec3 grad = probe.gradient(J.p);
    Mat3 H = probe.hessian(J.p);
    ChartEval e;
    e.p = J.p;
    e.g1 = dot(grad, J.du);
    e.g2 = dot(grad, J.dv);
    e.j11 = dot(J.du, H.apply(J.du)) + dot(grad, J.duu);
    e.j12 = dot(J.du, H.apply(J.dv)) + dot(grad, J.duv);
    e.j22 = dot(J.dv, H.apply(J.dv)) + dot(grad, J.dvv);
    return e;
}

// Classification at a chart point. Uses the analytic fundamental forms away
// from degenerate rows; falls back to a local 3D quadric fit at the rows
// (sphere poles), where the chart metric collapses but the surface is smooth.
Classified classify_parametric(const ParametricSurface& s, const ProbeFunction& probe, double u,
                               double v) {
    ChartJet J = s.jet(u, v);
    Classified out;
    out.position = J.p;
    out.value = probe.value(J.p);

    double scale2 = s.bounding_radius() * s.bounding_radius();
    Vec3 cr = cross(J.du, J.dv);

    if (cr.norm() > 1e-6 * scale2) {
        double E = dot(J.du, J.du), F = dot(J.du, J.dv), G = dot(J.dv, J.dv);
        ChartEval e = chart_eval(s, probe, u, v);
        // orthonormalize via the Cholesky factor of the first fundamental form
        double l11 = std::sqrt(E);
        double l21 = F / l11;
        double l22 = std::sqrt(std::max(G - l21 * l21, 1e-300));
        // H_orth = L^-1 Hc L^-T for symmetric 2x2
        double a11 = e.j11 / (l11 * l11);
        double a12 = (e.j12 - l21 * a11 * l11) / (l11 * l22);
        double a22 = (e.j22 - 2.0 * l21 * a12 * l22 - l21 * l21 * a11) / (l22 * l22);
        out.hess = {a11, a12, a22};
        if (probe.kind == ProbeFunction::Kind::Height) {
            out.curvature = s.gauss_curvature(u, v);
        }
    } else {
        // chart-degenerate row: sample the surface around the point in 3D
        Vec3 n = s.outward_normal(u, v);
        auto [t1, t2] = tangent_basis(n);
        const double dv = 2e-3;
        std::vector<std::array<double, 3>> surf_samples;
        double rho = 0.0;
        std::vector<Vec3> pts;
        for (int i = 0; i < 8; ++i) {
            double uu = 2.0 * kPi * i / 8.0;
            for (double dd : {-2.0 * dv, -dv, dv, 2.0 * dv}) {
                Vec3 q = s.position(uu, v + dd);
                pts.push_back(q);
                rho = std::max(rho, (q - J.p).norm());
            }
        }
        for (const Vec3& q : pts) {
            Vec3 d = q - J.p;
            surf_samples.push_back({dot(d, t1), dot(d, t2), dot(d, n)});
        }
        QuadricFit qs = fit_quadric(surf_samples, rho);
        double ii11 = 2.0 * qs.A, ii12 = qs.B, ii22 = 2.0 * qs.C;

        Vec3 grad = probe.gradient(J.p);
        Mat3 H = probe.hessian(J.p);
        double gn = dot(grad, n);
        out.hess = {dot(t1, H.apply(t1)) + gn * ii11, dot(t1, H.apply(t2)) + gn * ii12,
                    dot(t2, H.apply(t2)) + gn * ii22};
        if (probe.kind == ProbeFunction::Kind::Height) {
            out.curvature = ii11 * ii22 - ii12 * ii12;
        }
    }

    auto [lo, hi] = out.hess.eigenvalues();
    out.min_abs_eig = std::min(std::abs(lo), std::abs(hi));
    out.n_minus = count_index_minus(out.hess);
    out.det_signed = out.hess.det();
    return out;
}

std::vector<Classified> locate_parametric(const ParametricSurface& s, const ProbeFunction& probe,
                                          const CriticalOptions& opts) {
    if (probe.kind == ProbeFunction::Kind::Distance) {
        double clear = opts.clearance_factor * s.length_scale();
        double dmin = std::numeric_limits<double>::max();
        for (int i = 0; i < 48; ++i)
            for (int j = 0; j < 48; ++j)
                dmin = std::min(dmin,
                                (s.position(2.0 * kPi * i / 48, 2.0 * kPi * j / 48) - probe.source)
                                    .norm());
        if (dmin <= clear)
            throw ClearanceError("distance probe point is within the clearance band of S");
    }

    // probe gradient magnitude over the surface, for residual thresholds
    double gscale = 0.0;
    const int n = opts.seed_grid;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            gscale = std::max(
                gscale,
                probe.gradient(s.position(2.0 * kPi * (i + 0.5) / n, 2.0 * kPi * (j + 0.5) / n))
                    .norm());
    gscale = std::max(gscale, 1e-12);
    const double chart_scale = std::max(s.max_du(), s.max_dv());
    const double tol_g = 1e-11 * gscale * chart_scale;

    struct Candidate {
        double u, v, res;
        Vec3 p;
    };
    std::vector<Candidate> found;

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double u = 2.0 * kPi * (i + 0.5) / n;
            double v = 2.0 * kPi * (j + 0.5) / n;
            double mu = 0.0;
            bool ok = false;
            ChartEval e = chart_eval(s, probe, u, v);
            double r2 = e.g1 * e.g1 + e.g2 * e.g2;
            for (int it = 0; it < 80; ++it) {
                if (std::sqrt(r2) <= tol_g) {
                    ok = true;
                    break;
                }
                if (mu == 0.0) mu = 1e-4 * (std::abs(e.j11) + std::abs(e.j22) + 1e-30);
                // Levenberg step on |g|^2 with J symmetric
                double a11 = e.j11 * e.j11 + e.j12 * e.j12 + mu;
                double a12 = e.j12 * (e.j11 + e.j22);
                double a22 = e.j12 * e.j12 + e.j22 * e.j22 + mu;
                double b1 = -(e.j11 * e.g1 + e.j12 * e.g2);
                double b2 = -(e.j12 * e.g1 + e.j22 * e.g2);
                double det = a11 * a22 - a12 * a12;
                if (det == 0.0) break;
                double du = (b1 * a22 - b2 * a12) / det;
                double dv = (b2 * a11 - b1 * a12) / det;
                ChartEval trial = chart_eval(s, probe, u + du, v + dv);
                double tr2 = trial.g1 * trial.g1 + trial.g2 * trial.g2;
                if (tr2 < r2) {
                    u += du;
                    v += dv;
                    e = trial;
                    r2 = tr2;
                    mu *= 0.33;
                } else {
                    mu *= 4.0;
                    if (mu > 1e12 * (std::abs(e.j11) + std::abs(e.j22) + 1.0)) break;
                }
            }
            if (!ok) continue;  // non-converged seeds are discarded
            u = std::fmod(std::fmod(u, 2.0 * kPi) + 2.0 * kPi, 2.0 * kPi);
            v = std::fmod(std::fmod(v, 2.0 * kPi) + 2.0 * kPi, 2.0 * kPi);
            Vec3 p = s.position(u, v);
            // reject chart artifacts: the 3D gradient must be normal to S
            Vec3 nrm = s.outward_normal(u, v);
            if (tangential_residual(probe, p, nrm) > 1e-7 * gscale) continue;
            found.push_back({u, v, std::sqrt(r2), p});
        }
    }

    // deduplicate by 3D distance, best residual first
    std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
        if (a.res != b.res) return a.res < b.res;
        return position_less(a.p, b.p);
    });
    const double merge = opts.merge_factor * s.length_scale();
    std::vector<Candidate> reps;
    for (const auto& c : found) {
        bool dup = false;
        for (const auto& r : reps) {
            if ((c.p - r.p).norm() < merge) {
                dup = true;
                break;
            }
        }
        if (!dup) reps.push_back(c);
    }

    std::vector<Classified> out;
    out.reserve(reps.size());
    for (const auto& r : reps) out.push_back(classify_parametric(s, probe, r.u, r.v));
    sort_points(out);
    return out;
}

}  // namespace

std::vector<CriticalPoint> critical_points(const ParametricSurface& surface,
                                           const ProbeFunction& probe,
                                           const CriticalOptions& opts) {
    auto classified = locate_parametric(surface, probe, opts);
    std::vector<CriticalPoint> out;
    out.reserve(classified.size());
    for (const auto& c : classified) out.push_back(finalize(c, opts.tol_hess));
    if (probe.kind == ProbeFunction::Kind::Height && !out.empty()) {
        // coverage: a closed surface must attain both +omega and -omega normals
        bool has_max = false, has_min = false;
        for (const auto& p : out) {
            if (p.index_minus == 0) has_max = true;
            if (p.index_minus == 2) has_min = true;
        }
        if (!has_max || !has_min) {
            std::fprintf(stderr,
                         "euchar::morse warning: height probe found no %s; seed grid may be too "
                         "coarse\n",
                         !has_max ? "maximum" : "minimum");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mesh route: lower-link classification + 2-ring quadric refinement
// ---------------------------------------------------------------------------

namespace {

struct MeshAdjacency {
    // per vertex: directed link edges (a -> b) from incident faces (v,a,b)
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> link;
    std::vector<std::vector<std::uint32_t>> faces_of;  // incident face ids
};

MeshAdjacency build_adjacency(const TriangleMesh& mesh) {
    MeshAdjacency adj;
    adj.link.resize(mesh.vertices.size());
    adj.faces_of.resize(mesh.vertices.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        for (int k = 0; k < 3; ++k) {
            adj.link[t[k]].push_back({t[(k + 1) % 3], t[(k + 2) % 3]});
            adj.faces_of[t[k]].push_back(static_cast<std::uint32_t>(f));
        }
    }
    return adj;
}

// Orders the link of a vertex into a cycle; throws if the neighborhood is not
// a disk (validate() should have caught that already).
std::vector<std::uint32_t> link_cycle(const MeshAdjacency& adj, std::uint32_t v) {
    const auto& edges = adj.link[v];
    std::unordered_map<std::uint32_t, std::uint32_t> next;
    next.reserve(edges.size());
    for (const auto& [a, b] : edges) next[a] = b;
    std::vector<std::uint32_t> cycle;
    cycle.reserve(edges.size());
    std::uint32_t start = edges.front().first, cur = start;
    do {
        cycle.push_back(cur);
        auto it = next.find(cur);
        if (it == next.end()) throw TopologyError("vertex link is not a cycle");
        cur = it->second;
    } while (cur != start && cycle.size() <= edges.size());
    if (cycle.size() != edges.size()) throw TopologyError("vertex link is not a single cycle");
    return cycle;
}

enum class VertexType { Regular, Minimum, Maximum, Saddle, MultiSaddle };

// Lower-link run count around the link cycle; ties broken by vertex index.
VertexType classify_lower_link(const std::vector<std::uint32_t>& cycle,
                               const std::vector<double>& psi, std::uint32_t v, int* runs_out) {
    auto lower = [&](std::uint32_t w) {
        return psi[w] < psi[v] || (psi[w] == psi[v] && w < v);
    };
    int lower_count = 0;
    for (auto w : cycle) lower_count += lower(w) ? 1 : 0;
    if (lower_count == 0) {
        *runs_out = 0;
        return VertexType::Minimum;
    }
    if (lower_count == static_cast<int>(cycle.size())) {
        *runs_out = 1;
        return VertexType::Maximum;
    }
    int runs = 0;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        bool cur = lower(cycle[i]);
        bool prev = lower(cycle[(i + cycle.size() - 1) % cycle.size()]);
        if (cur && !prev) ++runs;
    }
    *runs_out = runs;
    if (runs == 1) return VertexType::Regular;
    if (runs == 2) return VertexType::Saddle;
    return VertexType::MultiSaddle;
}

Classified classify_mesh_vertex(const TriangleMesh& mesh, const MeshAdjacency& adj,
                                const ProbeFunction& probe, std::uint32_t v, VertexType type) {
    const Vec3 p0 = mesh.vertices[v];

    // area-weighted vertex normal from incident faces (orientation-consistent)
    Vec3 n{};
    for (auto f : adj.faces_of[v]) {
        const auto& t = mesh.faces[f];
        n += cross(mesh.vertices[t[1]] - mesh.vertices[t[0]],
                   mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    }
    n = normalized(n);
    auto [t1, t2] = tangent_basis(n);

    // 2-ring vertex set
    std::set<std::uint32_t> ring;
    for (const auto& [a, b] : adj.link[v]) {
        ring.insert(a);
        ring.insert(b);
    }
    std::set<std::uint32_t> ring2 = ring;
    for (auto w : ring)
        for (const auto& [a, b] : adj.link[w]) {
            ring2.insert(a);
            ring2.insert(b);
        }
    ring2.erase(v);

    std::vector<std::array<double, 3>> field_samples, surf_samples;
    double rho = 0.0;
    for (auto w : ring2) {
        Vec3 d = mesh.vertices[w] - p0;
        double a = dot(d, t1), b = dot(d, t2), h = dot(d, n);
        rho = std::max(rho, std::hypot(a, b));
        surf_samples.push_back({a, b, h});
        field_samples.push_back({a, b, probe.value(mesh.vertices[w])});
    }
    field_samples.push_back({0.0, 0.0, probe.value(p0)});
    surf_samples.push_back({0.0, 0.0, 0.0});

    QuadricFit qf = fit_quadric(field_samples, rho);   // psi over tangent coords
    QuadricFit qs = fit_quadric(surf_samples, rho);    // surface height over tangent coords

    Hessian2 H{2.0 * qf.A, qf.B, 2.0 * qf.C};

    // refine the critical point inside the fitted patch
    Vec3 refined = p0;
    double detH = H.det();
    if (std::abs(detH) > 1e-14) {
        double da = -(H.h22 * qf.D - H.h12 * qf.E) / detH;
        double db = -(H.h11 * qf.E - H.h12 * qf.D) / detH;
        if (std::hypot(da, db) <= rho) {
            double h = qs.A * da * da + qs.B * da * db + qs.C * db * db + qs.D * da + qs.E * db;
            refined = p0 + t1 * da + t2 * db + n * h;
        }
    }

    Classified out;
    out.position = refined;
    out.value = probe.value(refined);
    out.hess = H;
    auto [lo, hi] = H.eigenvalues();
    out.min_abs_eig = std::min(std::abs(lo), std::abs(hi));

    // indices come from the combinatorial type; the quadric fit supplies the
    // magnitude, and the determinant sign is forced to match the type
    switch (type) {
        case VertexType::Minimum: out.n_minus = 2; break;   // psi-min: Hess(psi) > 0
        case VertexType::Maximum: out.n_minus = 0; break;
        default: out.n_minus = 1; break;
    }
    out.det_signed = (out.n_minus == 1 ? -1.0 : 1.0) * std::abs(H.det());
    out.curvature = probe.kind == ProbeFunction::Kind::Height
                        ? std::optional<double>(4.0 * qs.A * qs.C - qs.B * qs.B)
                        : std::nullopt;
    return out;
}

// Sublevel-set persistence pairs on the vertex graph: a saddle that merges two
// components pairs with the younger component's extremum. Run twice (ascending
// for min-saddle pairs, descending for saddle-max pairs).
struct PersistencePair {
    std::uint32_t extremum, saddle;
    double gap;
};

std::vector<PersistencePair> persistence_pairs_below(const MeshAdjacency& adj,
                                                     const std::vector<double>& psi,
                                                     double floor_gap) {
    const std::uint32_t n = static_cast<std::uint32_t>(psi.size());
    std::vector<PersistencePair> pairs;

    auto run = [&](bool ascending) {
        std::vector<std::uint32_t> order(n);
        for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (psi[a] != psi[b]) return ascending ? psi[a] < psi[b] : psi[a] > psi[b];
            return ascending ? a < b : a > b;
        });
        std::vector<std::uint32_t> rank(n);
        for (std::uint32_t i = 0; i < n; ++i) rank[order[i]] = i;

        std::vector<std::uint32_t> parent(n), birth(n);
        for (std::uint32_t i = 0; i < n; ++i) parent[i] = i;
        std::function<std::uint32_t(std::uint32_t)> find = [&](std::uint32_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };

        for (std::uint32_t v : order) {
            std::vector<std::uint32_t> roots;
            for (const auto& [a, b] : adj.link[v]) {
                (void)b;
                if (rank[a] < rank[v]) {
                    std::uint32_t r = find(a);
                    if (std::find(roots.begin(), roots.end(), r) == roots.end())
                        roots.push_back(r);
                }
            }
            if (roots.empty()) {
                birth[v] = v;  // local extremum in this sweep
                continue;
            }
            std::uint32_t oldest = roots.front();
            for (auto r : roots)
                if (rank[birth[r]] < rank[birth[oldest]]) oldest = r;
            for (auto r : roots) {
                if (r != oldest) {
                    double gap = std::abs(psi[v] - psi[birth[r]]);
                    if (gap <= floor_gap) pairs.push_back({birth[r], v, gap});
                }
                parent[r] = oldest;
            }
            parent[v] = oldest;
        }
    };

    run(true);
    run(false);
    return pairs;
}

std::vector<Classified> locate_mesh(const TriangleMesh& mesh, const ProbeFunction& probe,
                                    const CriticalOptions& opts, bool* multi_saddle_seen) {
    if (probe.kind == ProbeFunction::Kind::Distance) {
        double clear = opts.clearance_factor * mesh.bbox_diagonal();
        double dmin = std::numeric_limits<double>::max();
        for (const auto& v : mesh.vertices) dmin = std::min(dmin, (v - probe.source).norm());
        if (dmin <= clear)
            throw ClearanceError("distance probe point is within the clearance band of S");
    }

    MeshAdjacency adj = build_adjacency(mesh);
    std::vector<double> psi(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) psi[i] = probe.value(mesh.vertices[i]);

    // combinatorial pass
    std::vector<std::pair<std::uint32_t, VertexType>> critical;
    std::vector<int> run_count(mesh.vertices.size(), 0);
    for (std::uint32_t v = 0; v < mesh.vertices.size(); ++v) {
        auto cycle = link_cycle(adj, v);
        int runs = 0;
        VertexType type = classify_lower_link(cycle, psi, v, &runs);
        run_count[v] = runs;
        if (type != VertexType::Regular) critical.push_back({v, type});
    }

    // cancel facet-artifact pairs: a simple saddle against an extremum, value
    // gap at most the floor, greedily from the smallest gap, disjoint members
    std::set<std::uint32_t> cancelled;
    if (opts.persistence_floor > 0.0) {
        std::vector<VertexType> type_of(mesh.vertices.size(), VertexType::Regular);
        for (auto& [v, t] : critical) type_of[v] = t;
        auto pairs = persistence_pairs_below(adj, psi, opts.persistence_floor);
        std::sort(pairs.begin(), pairs.end(), [](const PersistencePair& a,
                                                 const PersistencePair& b) {
            if (a.gap != b.gap) return a.gap < b.gap;
            if (a.saddle != b.saddle) return a.saddle < b.saddle;
            return a.extremum < b.extremum;
        });
        for (const auto& p : pairs) {
            if (cancelled.count(p.extremum) || cancelled.count(p.saddle)) continue;
            if (type_of[p.saddle] != VertexType::Saddle) continue;
            if (type_of[p.extremum] != VertexType::Minimum &&
                type_of[p.extremum] != VertexType::Maximum)
                continue;
            cancelled.insert(p.extremum);
            cancelled.insert(p.saddle);
        }
    }

    std::vector<Classified> out;
    if (multi_saddle_seen) *multi_saddle_seen = false;
    for (auto& [v, type] : critical) {
        if (cancelled.count(v)) continue;
        if (type == VertexType::MultiSaddle) {
            if (multi_saddle_seen) {
                *multi_saddle_seen = true;
                Classified c;
                c.position = mesh.vertices[v];
                c.value = psi[v];
                c.min_abs_eig = 0.0;
                c.n_minus = 1;
                out.push_back(c);
                continue;
            }
            throw NonMorseError("multi-saddle vertex (lower link with " +
                                    std::to_string(run_count[v]) +
                                    " components); probe is not generic at mesh resolution",
                                mesh.vertices[v].to_array());
        }
        out.push_back(classify_mesh_vertex(mesh, adj, probe, v, type));
    }
    sort_points(out);
    return out;
}

}  // namespace

std::vector<CriticalPoint> critical_points(const TriangleMesh& mesh, const ProbeFunction& probe,
                                           const CriticalOptions& opts) {
    auto classified = locate_mesh(mesh, probe, opts, nullptr);
    std::vector<CriticalPoint> out;
    out.reserve(classified.size());
    for (const auto& c : classified) out.push_back(finalize(c, opts.tol_hess));
    return out;
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

GenericityReport excellence_check(const std::vector<CriticalPoint>& points, double tol_gap,
                                  double tol_hess) {
    GenericityReport rep;
    if (points.empty()) {
        rep.offending.push_back("no critical points");
        return rep;
    }
    rep.is_morse = true;
    rep.min_curvature_at_crit = std::numeric_limits<double>::max();
    for (const auto& p : points) {
        double h = std::abs(p.hessian_det);
        rep.min_curvature_at_crit = std::min(rep.min_curvature_at_crit, h);
        if (h <= tol_hess) {
            rep.is_morse = false;
            char buf[160];
            std::snprintf(buf, sizeof buf, "degenerate point at (%.6g, %.6g, %.6g)", p.position.x,
                          p.position.y, p.position.z);
            rep.offending.push_back(buf);
        }
    }
    rep.min_value_gap = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        double gap = points[i + 1].value - points[i].value;
        rep.min_value_gap = std::min(rep.min_value_gap, gap);
        if (gap <= tol_gap) {
            char buf[200];
            std::snprintf(buf, sizeof buf, "value collision: %.12g vs %.12g (gap %.3g)",
                          points[i].value, points[i + 1].value, gap);
            rep.offending.push_back(buf);
        }
    }
    if (points.size() == 1) rep.min_value_gap = 0.0;
    rep.is_excellent = rep.is_morse && rep.offending.empty() && points.size() >= 2;
    return rep;
}

template <typename Surface>
GenericityReport check_probe(const Surface& surface, const ProbeFunction& probe, double tol_gap,
                             double tol_hess, std::vector<CriticalPoint>* points_out,
                             double persistence_floor) {
    GenericityReport rep;
    rep.probe = probe.describe();
    std::vector<CriticalPoint> pts;
    try {
        CriticalOptions opts;
        opts.tol_hess = tol_hess;
        opts.persistence_floor = persistence_floor;
        pts = critical_points(surface, probe, opts);
    } catch (const NonMorseError& e) {
        rep.is_morse = false;
        rep.is_excellent = false;
        char buf[240];
        std::snprintf(buf, sizeof buf, "%s [at (%.6g, %.6g, %.6g)]", e.what(), e.point[0],
                      e.point[1], e.point[2]);
        rep.offending.push_back(buf);
        return rep;
    }
    double range = pts.empty() ? 0.0 : pts.back().value - pts.front().value;
    if (tol_gap < 0.0) tol_gap = 1e-3 * range;
    auto r = excellence_check(pts, tol_gap, tol_hess);
    r.probe = rep.probe;
    if (points_out) *points_out = std::move(pts);
    return r;
}

template GenericityReport check_probe<ParametricSurface>(const ParametricSurface&,
                                                         const ProbeFunction&, double, double,
                                                         std::vector<CriticalPoint>*, double);
template GenericityReport check_probe<TriangleMesh>(const TriangleMesh&, const ProbeFunction&,
                                                    double, double, std::vector<CriticalPoint>*,
                                                    double);

namespace {

template <typename Surface>
bool is_focal_impl(const Surface& surface, const Vec3& x, double tol) {
    // L_x^2 at a critical point has surface Hessian 2 L H(L); compare its
    // smallest eigenvalue magnitude against tol.
    ProbeFunction probe = ProbeFunction::distance(x);
    std::vector<Classified> pts;
    try {
        if constexpr (std::is_same_v<Surface, ParametricSurface>) {
            pts = locate_parametric(surface, probe, CriticalOptions{});
        } else {
            bool multi = false;
            pts = locate_mesh(surface, probe, CriticalOptions{}, &multi);
            if (multi) return true;
        }
    } catch (const ClearanceError&) {
        throw;
    }
    if (pts.empty()) return true;  // no isolated critical structure at all
    for (const auto& c : pts) {
        if (2.0 * c.value * c.min_abs_eig <= tol) return true;
    }
    return false;
}

}  // namespace

bool is_focal(const ParametricSurface& surface, const Vec3& x, double tol) {
    return is_focal_impl(surface, x, tol);
}
bool is_focal(const TriangleMesh& mesh, const Vec3& x, double tol) {
    return is_focal_impl(mesh, x, tol);
}

// ---------------------------------------------------------------------------
// Morse polynomial and direction draws
// ---------------------------------------------------------------------------

MorsePolynomial morse_polynomial(const std::vector<CriticalPoint>& points) {
    if (points.empty()) throw ParameterError("morse_polynomial needs a non-empty Morse list");
    MorsePolynomial mp;
    for (const auto& p : points) {
        if (p.index_minus < 0 || p.index_minus > 2 || p.index_minus + p.index_plus != 2)
            throw ParameterError("malformed critical point indices");
        if (p.hessian_det == 0.0) throw NonMorseError("non-Morse input", p.position.to_array());
        mp.counts[p.index_minus] += 1;
    }
    mp.at_minus_one = mp.counts[0] - mp.counts[1] + mp.counts[2];
    return mp;
}

Vec3 draw_direction(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
        Vec3 v{gauss(rng), gauss(rng), gauss(rng)};
        double n = v.norm();
        if (n > 1e-6) return v / n;
    }
}

template <typename Surface>
GenericDirection random_generic_direction(const Surface& surface, std::uint64_t seed,
                                          double tol_gap, double tol_hess, int max_draws,
                                          double persistence_floor) {
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < max_draws; ++attempt) {
        Vec3 omega = draw_direction(rng);
        std::vector<CriticalPoint> pts;
        GenericityReport rep = check_probe(surface, ProbeFunction::height(omega), tol_gap,
                                           tol_hess, &pts, persistence_floor);
        if (rep.is_excellent) {
            return {omega, std::move(rep), std::move(pts), attempt + 1};
        }
    }
    throw GenericityError("no excellent direction after " + std::to_string(max_draws) +
                          " draws: tolerances too strict or surface too symmetric at this "
                          "resolution");
}

template GenericDirection random_generic_direction<ParametricSurface>(const ParametricSurface&,
                                                                      std::uint64_t, double,
                                                                      double, int, double);
template GenericDirection random_generic_direction<TriangleMesh>(const TriangleMesh&,
                                                                 std::uint64_t, double, double,
                                                                 int, double);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string to_json(const std::vector<CriticalPoint>& points) {
    json arr = json::array();
    for (const auto& p : points) {
        json j;
        j["position"] = {p.position.x, p.position.y, p.position.z};
        j["value"] = p.value;
        j["index_minus"] = p.index_minus;
        j["index_plus"] = p.index_plus;
        j["hessian_det"] = p.hessian_det;
        if (p.curvature) j["curvature"] = *p.curvature;
        j["amplitude"] = {{"re", p.amplitude.real()}, {"im", p.amplitude.imag()}};
        arr.push_back(j);
    }
    json root;
    root["schema_version"] = 1;
    root["critical_points"] = arr;
    return root.dump(2);
}

std::string to_json(const GenericityReport& report) {
    json j;
    j["schema_version"] = 1;
    j["probe"] = report.probe;
    j["is_morse"] = report.is_morse;
    j["is_excellent"] = report.is_excellent;
    j["min_curvature_at_crit"] = report.min_curvature_at_crit;
    j["min_value_gap"] = report.min_value_gap;
    j["offending"] = report.offending;
    return j.dump(2);
}

}  // namespace euchar::morse
