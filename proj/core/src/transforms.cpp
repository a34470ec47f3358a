#include "euchar/transforms.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "euchar/morse.hpp"

namespace euchar::transforms {

// ---------------------------------------------------------------------------
// Hat deposition shared by the radon and wave accumulators.
//
// A flat triangle's area density over a linear functional with sorted vertex
// values p0 <= p1 <= p2 is the hat rising linearly on [p0,p1] and falling on
// [p1,p2], peak 2A/(p2-p0). Each bin receives the exact integral of the hat
// over its extent, so total mass is conserved to rounding.
// ---------------------------------------------------------------------------

namespace {

struct BinAccumulator {
    double lo;       // left edge of bin 0
    double dx;       // bin width
    std::vector<double> mass;

    int clamp(int i) const { return std::clamp(i, 0, static_cast<int>(mass.size()) - 1); }

    void add_point(double x, double m) { mass[clamp(static_cast<int>((x - lo) / dx))] += m; }

    // deposit integral of the linear ramp h(x) = slope * (x - x0) over [a, b]
    void add_ramp(double x0, double slope, double a, double b) {
        if (b <= a) return;
        int ia = clamp(static_cast<int>((a - lo) / dx));
        int ib = clamp(static_cast<int>((b - lo) / dx));
        for (int i = ia; i <= ib; ++i) {
            double ca = std::max(a, lo + i * dx);
            double cb = std::min(b, lo + (i + 1) * dx);
            if (cb <= ca) continue;
            double ya = ca - x0, yb = cb - x0;
            mass[i] += 0.5 * slope * (yb * yb - ya * ya);
        }
    }

    void add_hat(double p0, double p1, double p2, double area, int* degenerate_count) {
        double span = p2 - p0;
        if (span <= 1e-12 * std::max(1.0, std::abs(p0) + std::abs(p2))) {
            add_point((p0 + p1 + p2) / 3.0, area);
            if (degenerate_count) ++*degenerate_count;
            return;
        }
        // each side integrates to area * side/span; a collapsed side carries
        // no mass and the other side carries everything
        double peak = 2.0 * area / span;
        if (p1 > p0) add_ramp(p0, peak / (p1 - p0), p0, p1);
        if (p2 > p1) {
            int ia = clamp(static_cast<int>((p1 - lo) / dx));
            int ib = clamp(static_cast<int>((p2 - lo) / dx));
            double slope = peak / (p2 - p1);
            for (int i = ia; i <= ib; ++i) {
                double ca = std::max(p1, lo + i * dx);
                double cb = std::min(p2, lo + (i + 1) * dx);
                if (cb <= ca) continue;
                double ya = p2 - ca, yb = p2 - cb;  // falling side, mirrored around p2
                mass[i] += 0.5 * slope * (ya * ya - yb * yb);
            }
        }
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// Radon profile
// ---------------------------------------------------------------------------

RadonProfile radon_profile(const TriangleMesh& mesh, const Vec3& omega, std::size_t bins,
                           int pad_bins) {
    if (bins < 8) throw ParameterError("radon_profile needs at least 8 bins");
    Vec3 w = normalized(omega);

    std::vector<double> proj(mesh.vertices.size());
    double lo = std::numeric_limits<double>::max(), hi = -lo;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        proj[i] = dot(w, mesh.vertices[i]);
        lo = std::min(lo, proj[i]);
        hi = std::max(hi, proj[i]);
    }
    double dx = (hi - lo) / static_cast<double>(bins);
    if (dx <= 0.0) throw ParameterError("surface projects to a point along omega");

    BinAccumulator acc;
    acc.lo = lo - pad_bins * dx;
    acc.dx = dx;
    acc.mass.assign(bins + 2 * static_cast<std::size_t>(pad_bins), 0.0);

    RadonProfile out;
    out.omega = w;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        double p0 = proj[t[0]], p1 = proj[t[1]], p2 = proj[t[2]];
        if (p0 > p1) std::swap(p0, p1);
        if (p1 > p2) std::swap(p1, p2);
        if (p0 > p1) std::swap(p0, p1);
        acc.add_hat(p0, p1, p2, mesh.face_area(f), &out.perpendicular_faces);
    }

    out.tau_grid = {acc.lo + 0.5 * dx, dx, acc.mass.size()};
    out.values.resize(acc.mass.size());
    for (std::size_t i = 0; i < acc.mass.size(); ++i) {
        out.values[i] = acc.mass[i] / dx;
        out.total_area += acc.mass[i];
    }
    return out;
}

recovery::TimeProfile radon_to_profile_u(const RadonProfile& radon, double min_gap) {
    const std::size_t n = radon.values.size();
    if (n < 16) throw ResolutionError("radon grid too coarse for differentiation");
    const double dt = radon.tau_grid.step;
    if (min_gap > 0.0 && 8.0 * dt > min_gap)
        throw ResolutionError("fewer than 8 bins across the smallest critical-value gap");

    recovery::TimeProfile prof;
    prof.t_grid = radon.tau_grid;
    prof.values.assign(n, Complex{});
    prof.window = recovery::WindowKind::Rect;
    prof.window_cutoff = kPi / dt;  // bin-limited bandwidth
    prof.source_delta_lambda = 0.0;
    const Complex scale = Complex(0.0, -1.0) / (2.0 * kPi);  // 1/(2 i pi)
    for (std::size_t i = 1; i + 1 < n; ++i) {
        prof.values[i] = scale * ((radon.values[i + 1] - radon.values[i - 1]) / (2.0 * dt));
    }
    return prof;
}

oscillatory::LineSpectrum radon_to_spectrum(const RadonProfile& radon, double delta_lambda,
                                            std::size_t count) {
    const double dtau = radon.tau_grid.step;
    const double lambda_max = delta_lambda * static_cast<double>(count - 1);
    if (lambda_max * dtau / 2.0 > 0.8 * kPi)
        throw ConfigurationError(
            "radon bins too wide for the requested bandwidth (sinc correction unstable)");
    oscillatory::LineSpectrum s;
    s.lambda_grid = {0.0, delta_lambda, count};
    s.values.resize(count);
    parallel_for_index(count, [&](std::size_t j) {
        double l = s.lambda_grid[j];
        Complex acc{};
        for (std::size_t i = 0; i < radon.values.size(); ++i) {
            acc += radon.values[i] * dtau * std::polar(1.0, -l * radon.tau_grid[i]);
        }
        double x = 0.5 * l * dtau;  // bin-window correction
        double sinc = std::abs(x) < 1e-8 ? 1.0 : std::sin(x) / x;
        s.values[j] = acc / sinc;
    });
    s.meta.surface = "mesh";
    s.meta.probe = "radon_projection_slice";
    s.meta.method = "radon_projection_slice";
    return s;
}

void write_radon_csv(const RadonProfile& radon, const std::string& csv_path,
                     const std::string& json_sidecar_path) {
    std::ofstream out(csv_path);
    if (!out) throw IoError("cannot open for writing: " + csv_path);
    out << "tau,value\n";
    char buf[120];
    for (std::size_t i = 0; i < radon.values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", radon.tau_grid[i], radon.values[i]);
        out << buf;
    }
    if (!json_sidecar_path.empty()) {
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        j["omega"] = {radon.omega.x, radon.omega.y, radon.omega.z};
        j["tau_start"] = radon.tau_grid.start;
        j["tau_step"] = radon.tau_grid.step;
        j["bins"] = radon.values.size();
        j["total_area"] = radon.total_area;
        j["perpendicular_faces"] = radon.perpendicular_faces;
        std::ofstream js(json_sidecar_path);
        js << j.dump(2) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Wave trace
// ---------------------------------------------------------------------------

namespace {

void deposit_face_radial(BinAccumulator& acc, const Vec3& x, const Vec3& p0, const Vec3& p1,
                         const Vec3& p2, double max_cell, int depth) {
    double diam = std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
    if (diam > max_cell && depth < 10) {
        Vec3 m01 = (p0 + p1) * 0.5, m12 = (p1 + p2) * 0.5, m20 = (p2 + p0) * 0.5;
        deposit_face_radial(acc, x, p0, m01, m20, max_cell, depth + 1);
        deposit_face_radial(acc, x, m01, p1, m12, max_cell, depth + 1);
        deposit_face_radial(acc, x, m20, m12, p2, max_cell, depth + 1);
        deposit_face_radial(acc, x, m01, m12, m20, max_cell, depth + 1);
        return;
    }
    double r0 = (p0 - x).norm(), r1 = (p1 - x).norm(), r2 = (p2 - x).norm();
    if (r0 > r1) std::swap(r0, r1);
    if (r1 > r2) std::swap(r1, r2);
    if (r0 > r1) std::swap(r0, r1);
    double area = 0.5 * cross(p1 - p0, p2 - p0).norm();
    acc.add_hat(r0, r1, r2, area, nullptr);
}

}  // namespace

WaveTrace wave_trace(const TriangleMesh& mesh, const Vec3& receiver, std::size_t bins,
                     int pad_bins) {
    if (bins < 16) throw ParameterError("wave_trace needs at least 16 bins");
    double clear = 1e-3 * mesh.bbox_diagonal();
    double dmin = std::numeric_limits<double>::max(), dmax = 0.0;
    for (const auto& v : mesh.vertices) {
        double d = (v - receiver).norm();
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    if (dmin <= clear)
        throw ClearanceError("receiver is on or within the clearance band of S; the trace is not "
                             "defined near t = 0 there");

    double dt = dmax * (1.0 + 1e-9) / static_cast<double>(bins);
    BinAccumulator acc;
    acc.lo = 0.0;
    acc.dx = dt;
    acc.mass.assign(bins + static_cast<std::size_t>(pad_bins), 0.0);

    // cells small enough that r is nearly linear per cell: the quadratic
    // remainder over a cell of size h at distance d is ~ h^2/(2 d); keep the
    // induced mass displacement under ~1% of a bin
    double max_cell = std::min(0.2 * std::sqrt(2.0 * 0.01 * dt * dmin), 0.5 * mesh.bbox_diagonal());
    max_cell = std::max(max_cell, 1e-3 * dt);

    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        deposit_face_radial(acc, receiver, mesh.vertices[t[0]], mesh.vertices[t[1]],
                            mesh.vertices[t[2]], max_cell, 0);
    }

    WaveTrace out;
    out.receiver = receiver;
    out.t_grid = {0.5 * dt, dt, acc.mass.size()};
    out.values.resize(acc.mass.size());
    for (std::size_t i = 0; i < acc.mass.size(); ++i) {
        double t = out.t_grid[i];
        out.values[i] = acc.mass[i] / dt / (4.0 * kPi * t);
        out.deposited_area += acc.mass[i];
    }
    return out;
}

recovery::TimeProfile time_domain_operator(const WaveTrace& trace) {
    const std::size_t n = trace.values.size();
    recovery::TimeProfile prof;
    prof.t_grid = trace.t_grid;
    prof.values.assign(n, Complex{});
    prof.window = recovery::WindowKind::Rect;
    prof.window_cutoff = kPi / trace.t_grid.step;
    const double dt = trace.t_grid.step;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double du = (trace.values[i + 1] - trace.values[i - 1]) / (2.0 * dt);
        double t = trace.t_grid[i];
        prof.values[i] = Complex(0.0, -2.0) * (t * du + trace.values[i]);
    }
    return prof;
}

oscillatory::LineSpectrum wave_normalized_spectrum(const TriangleMesh& mesh, const Vec3& receiver,
                                                   double delta_lambda, std::size_t count,
                                                   const oscillatory::PairingOptions& opts,
                                                   double persistence_floor) {
    if (morse::is_focal(mesh, receiver))
        throw GenericityError("receiver is a focal point of S; draw another receiver");
    auto probe = morse::ProbeFunction::distance(receiver);
    auto report = morse::check_probe(mesh, probe, -1.0, 1e-6, nullptr, persistence_floor);
    if (!report.is_excellent) {
        std::string why = report.offending.empty() ? "distance function is not excellent Morse"
                                                   : report.offending.front();
        throw GenericityError("receiver fails the excellence certificate: " + why);
    }
    auto s = oscillatory::spectrum(mesh, probe, delta_lambda, count, opts);
    s.meta.method = "wave_" + s.meta.method;
    return s;
}

void write_wave_csv(const WaveTrace& trace, const std::string& csv_path,
                    const std::string& json_sidecar_path) {
    std::ofstream out(csv_path);
    if (!out) throw IoError("cannot open for writing: " + csv_path);
    out << "t,value\n";
    char buf[120];
    for (std::size_t i = 0; i < trace.values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", trace.t_grid[i], trace.values[i]);
        out << buf;
    }
    if (!json_sidecar_path.empty()) {
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        j["receiver"] = {trace.receiver.x, trace.receiver.y, trace.receiver.z};
        j["t_start"] = trace.t_grid.start;
        j["t_step"] = trace.t_grid.step;
        j["bins"] = trace.values.size();
        j["odd_in_t"] = trace.odd_in_t;
        j["deposited_area"] = trace.deposited_area;
        std::ofstream js(json_sidecar_path);
        js << j.dump(2) << "\n";
    }
}

}  // namespace euchar::transforms
