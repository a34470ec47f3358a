#include "euchar/oscillatory.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "euchar/detail/quadrature.hpp"

namespace euchar::oscillatory {

using morse::ProbeFunction;

// ---------------------------------------------------------------------------
// Exact linear-phase triangle integral.
//
// With phi(s,t) affine on the unit simplex taking vertex values (a,b,c),
//   S = int_simplex e^{-i phi} ds dt
// is (minus) the second divided difference of e^{-iz} at (a,b,c). The first
// divided differences are evaluated in the cancellation-free product form
//   (e^{-ix} - e^{-iy})/(x - y) = -i e^{-i(x+y)/2} sinc((x-y)/2),
// and a centered series over simplex moments takes over when the span of the
// three phases drops below eps_phase.
// ---------------------------------------------------------------------------

namespace {

constexpr double kEpsPhase = 1e-4;

inline double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

inline Complex first_dd(double x, double y) {
    return Complex(0.0, -1.0) * std::polar(1.0, -0.5 * (x + y)) * sinc(0.5 * (x - y));
}

Complex simplex_exp_integral(double a, double b, double c) {
    // sort so the outer pair of the divided difference is the widest
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    const double span = c - a;
    if (span >= kEpsPhase) {
        return (first_dd(a, b) - first_dd(b, c)) / (c - a);
    }
    // centered series: S = e^{-im} sum_n (-i)^n h_n(d)/(n+2)!  with
    // h_n the complete homogeneous symmetric polynomials of the offsets
    const double m = (a + b + c) / 3.0;
    const double d[3] = {a - m, b - m, c - m};
    const double h2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[0] * d[1] + d[0] * d[2] +
                      d[1] * d[2];
    double h3 = 0.0, h4 = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
            for (int k = j; k < 3; ++k) h3 += d[i] * d[j] * d[k];
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
            for (int k = j; k < 3; ++k)
                for (int l = k; l < 3; ++l) h4 += d[i] * d[j] * d[k] * d[l];
    Complex series(0.5 - h2 / 24.0 + h4 / 720.0, h3 / 120.0);
    return std::polar(1.0, -m) * series;
}

}  // namespace

Complex linear_phase_integral(double phi0, double phi1, double phi2, double area) {
    return 2.0 * area * simplex_exp_integral(phi0, phi1, phi2);
}

Complex triangle_plane_wave(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& k) {
    const double area = 0.5 * cross(v1 - v0, v2 - v0).norm();
    if (area <= 0.0) throw ParameterError("degenerate triangle");
    return linear_phase_integral(dot(k, v0), dot(k, v1), dot(k, v2), area);
}

// ---------------------------------------------------------------------------
// Mesh pairing: per-face vertex phases, with midpoint subdivision while the
// residual nonlinearity of lambda*psi over a face exceeds linear_phase_tol.
// Height probes are linear per facet, hence exact with no subdivision.
// ---------------------------------------------------------------------------

namespace {

struct PhaseFace {
    double psi0, psi1, psi2;
    double area;
};

struct PhaseTable {
    std::vector<PhaseFace> faces;
    double total_area = 0.0;
    bool subdivided = false;
    double max_abs_psi = 0.0;
};

void push_face(PhaseTable& table, const ProbeFunction& probe, const Vec3& p0, const Vec3& p1,
               const Vec3& p2, double f0, double f1, double f2, double lambda_max, double tol,
               int depth, int max_depth) {
    if (depth < max_depth) {
        const Vec3 m01 = (p0 + p1) * 0.5, m12 = (p1 + p2) * 0.5, m20 = (p2 + p0) * 0.5;
        const double g01 = probe.value(m01), g12 = probe.value(m12), g20 = probe.value(m20);
        const double dev = std::max({std::abs(g01 - 0.5 * (f0 + f1)),
                                     std::abs(g12 - 0.5 * (f1 + f2)),
                                     std::abs(g20 - 0.5 * (f2 + f0))});
        if (lambda_max * dev > tol) {
            push_face(table, probe, p0, m01, m20, f0, g01, g20, lambda_max, tol, depth + 1,
                      max_depth);
            push_face(table, probe, m01, p1, m12, g01, f1, g12, lambda_max, tol, depth + 1,
                      max_depth);
            push_face(table, probe, m20, m12, p2, g20, g12, f2, lambda_max, tol, depth + 1,
                      max_depth);
            push_face(table, probe, m01, m12, m20, g01, g12, g20, lambda_max, tol, depth + 1,
                      max_depth);
            table.subdivided = true;
            return;
        }
    }
    double area = 0.5 * cross(p1 - p0, p2 - p0).norm();
    table.faces.push_back({f0, f1, f2, area});
    table.total_area += area;
}

PhaseTable build_phase_table(const TriangleMesh& mesh, const ProbeFunction& probe,
                             double lambda_max, const PairingOptions& opts) {
    PhaseTable table;
    table.faces.reserve(mesh.faces.size());
    std::vector<double> psi(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        psi[i] = probe.value(mesh.vertices[i]);
        table.max_abs_psi = std::max(table.max_abs_psi, std::abs(psi[i]));
    }
    const bool linear = probe.kind == ProbeFunction::Kind::Height;
    for (const auto& t : mesh.faces) {
        const Vec3 &p0 = mesh.vertices[t[0]], &p1 = mesh.vertices[t[1]], &p2 = mesh.vertices[t[2]];
        if (linear) {
            double area = 0.5 * cross(p1 - p0, p2 - p0).norm();
            table.faces.push_back({psi[t[0]], psi[t[1]], psi[t[2]], area});
            table.total_area += area;
        } else {
            push_face(table, probe, p0, p1, p2, psi[t[0]], psi[t[1]], psi[t[2]], lambda_max,
                      opts.linear_phase_tol, 0, opts.max_subdivision);
        }
    }
    return table;
}

Complex eval_phase_table(const PhaseTable& table, double lambda) {
    Complex acc{};
    for (const auto& f : table.faces) {
        acc += linear_phase_integral(lambda * f.psi0, lambda * f.psi1, lambda * f.psi2, f.area);
    }
    return acc;
}

void check_clearance(const TriangleMesh& mesh, const ProbeFunction& probe) {
    if (probe.kind != ProbeFunction::Kind::Distance) return;
    double clear = 1e-3 * mesh.bbox_diagonal();
    for (const auto& v : mesh.vertices) {
        if ((v - probe.source).norm() <= clear)
            throw ClearanceError("probe point is within the clearance band of S");
    }
}

}  // namespace

Complex pairing(const TriangleMesh& mesh, const ProbeFunction& probe, double lambda,
                const PairingOptions& opts) {
    check_clearance(mesh, probe);
    PhaseTable table = build_phase_table(mesh, probe, std::abs(lambda), opts);
    Complex v = eval_phase_table(table, lambda);
    return opts.sign == PhaseSign::Negative ? v : std::conj(v);
}

// ---------------------------------------------------------------------------
// Parametric pairing: adaptive tensor Gauss cells sized by per-axis phase
// Lipschitz bounds, with chart breakpoints respected.
// ---------------------------------------------------------------------------

namespace {

struct ChartContext {
    double lip_u = 0.0, lip_v = 0.0;  // max |grad psi . x_u|, |grad psi . x_v|
    double area = 0.0;
    double max_abs_psi = 0.0;
};

ChartContext chart_context(const ParametricSurface& s, const ProbeFunction& probe) {
    ChartContext ctx;
    const int n = 64;
    double area_acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double u = 2.0 * kPi * (i + 0.5) / n, v = 2.0 * kPi * (j + 0.5) / n;
            ChartJet J = s.jet(u, v);
            Vec3 g = probe.gradient(J.p);
            ctx.lip_u = std::max(ctx.lip_u, std::abs(dot(g, J.du)));
            ctx.lip_v = std::max(ctx.lip_v, std::abs(dot(g, J.dv)));
            ctx.max_abs_psi = std::max(ctx.max_abs_psi, std::abs(probe.value(J.p)));
            area_acc += cross(J.du, J.dv).norm();
        }
    }
    ctx.area = area_acc * (4.0 * kPi * kPi) / (n * n) / s.cover_count();
    ctx.lip_u *= 1.1;
    ctx.lip_v *= 1.1;
    return ctx;
}

Complex pairing_parametric(const ParametricSurface& s, const ProbeFunction& probe, double lambda,
                           const PairingOptions& opts, const ChartContext& ctx) {
    const double al = std::abs(lambda);
    const double inv_cover = 1.0 / s.cover_count();
    auto f = [&](double u, double v) -> Complex {
        auto [p, w] = s.position_and_weight(u, v);
        return std::polar(w * inv_cover, -lambda * probe.value(p));
    };
    if (opts.fast_grid) {
        // a-priori sizing: <= 2.8 rad of phase per axis per cell
        int nu = std::max(4, static_cast<int>(std::ceil(2.0 * kPi * (al * ctx.lip_u + 1.0) / 2.8)));
        int nv = std::max(4, static_cast<int>(std::ceil(2.0 * kPi * (al * ctx.lip_v + 1.0) / 2.8)));
        auto cells =
            detail::initial_cells(0.0, 2.0 * kPi, 0.0, 2.0 * kPi, nu, nv, s.degenerate_rows_v());
        Complex out{};
        for (const auto& c : cells) out += detail::integrate_cell<Complex>(f, c);
        return out;
    }
    // initial cells: <= ~3 rad of phase per cell per axis under 8-point Gauss
    int nu = std::max(4, static_cast<int>(std::ceil(2.0 * kPi * (al * ctx.lip_u + 1.0) / 3.0)));
    int nv = std::max(4, static_cast<int>(std::ceil(2.0 * kPi * (al * ctx.lip_v + 1.0) / 3.0)));
    auto cells =
        detail::initial_cells(0.0, 2.0 * kPi, 0.0, 2.0 * kPi, nu, nv, s.degenerate_rows_v());
    Complex out{};
    auto res = detail::adaptive_integrate<Complex>(f, cells, opts.quad_rel_tol * ctx.area,
                                                   opts.max_cells, out);
    if (!res.converged) {
        throw AccuracyError("pairing quadrature budget exhausted (error estimate " +
                                std::to_string(res.error_estimate) + ")",
                            res.error_estimate);
    }
    return out;
}

void check_clearance_parametric(const ParametricSurface& s, const ProbeFunction& probe) {
    if (probe.kind != ProbeFunction::Kind::Distance) return;
    double clear = 1e-3 * s.length_scale();
    for (int i = 0; i < 48; ++i)
        for (int j = 0; j < 48; ++j) {
            Vec3 p = s.position(2.0 * kPi * i / 48, 2.0 * kPi * j / 48);
            if ((p - probe.source).norm() <= clear)
                throw ClearanceError("probe point is within the clearance band of S");
        }
}

}  // namespace

Complex pairing(const ParametricSurface& surface, const ProbeFunction& probe, double lambda,
                const PairingOptions& opts) {
    check_clearance_parametric(surface, probe);
    ChartContext ctx = chart_context(surface, probe);
    Complex v = pairing_parametric(surface, probe, lambda, opts, ctx);
    return opts.sign == PhaseSign::Negative ? v : std::conj(v);
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

namespace {

void check_spectrum_grid(double delta_lambda, std::size_t count, double max_abs_psi,
                         double margin) {
    if (count < 64) throw ConfigurationError("spectrum needs at least 64 samples");
    if (delta_lambda <= 0.0) throw ConfigurationError("delta lambda must be positive");
    double window = kPi / delta_lambda;
    if (window < margin * max_abs_psi) {
        char buf[220];
        std::snprintf(buf, sizeof buf,
                      "aliasing: pi/delta = %.6g does not exceed %.2f * max|psi| = %.6g; need "
                      "delta <= %.6g",
                      window, margin, margin * max_abs_psi, kPi / (margin * max_abs_psi));
        throw ConfigurationError(buf);
    }
}

template <typename EvalFn>
LineSpectrum assemble_spectrum(double delta_lambda, std::size_t count, EvalFn&& eval,
                               SpectrumMetadata meta, PhaseSign sign) {
    LineSpectrum s;
    s.lambda_grid = {0.0, delta_lambda, count};
    s.values.resize(count);
    parallel_for_index(count, [&](std::size_t j) {
        Complex v = eval(s.lambda_grid[j]);
        s.values[j] = sign == PhaseSign::Negative ? v : std::conj(v);
    });
    s.meta = std::move(meta);
    s.meta.sign = sign;
    return s;
}

}  // namespace

LineSpectrum spectrum(const TriangleMesh& mesh, const ProbeFunction& probe, double delta_lambda,
                      std::size_t count, const PairingOptions& opts) {
    check_clearance(mesh, probe);
    const double lambda_max = delta_lambda * static_cast<double>(count - 1);
    PhaseTable table = build_phase_table(mesh, probe, lambda_max, opts);
    check_spectrum_grid(delta_lambda, count, table.max_abs_psi, opts.nyquist_margin);
    SpectrumMetadata meta;
    meta.surface = "mesh";
    meta.probe = probe.describe();
    meta.method = table.subdivided ? "mesh_subdivided" : "mesh_exact";
    return assemble_spectrum(
        delta_lambda, count, [&](double l) { return eval_phase_table(table, l); }, std::move(meta),
        opts.sign);
}

LineSpectrum spectrum(const ParametricSurface& surface, const ProbeFunction& probe,
                      double delta_lambda, std::size_t count, const PairingOptions& opts) {
    check_clearance_parametric(surface, probe);
    ChartContext ctx = chart_context(surface, probe);
    check_spectrum_grid(delta_lambda, count, ctx.max_abs_psi, opts.nyquist_margin);
    SpectrumMetadata meta;
    meta.surface = surface.label();
    meta.probe = probe.describe();
    meta.method = "parametric_adaptive";
    return assemble_spectrum(
        delta_lambda, count,
        [&](double l) { return pairing_parametric(surface, probe, l, opts, ctx); },
        std::move(meta), opts.sign);
}

// ---------------------------------------------------------------------------
// Stationary phase prediction
// ---------------------------------------------------------------------------

StationaryPhasePrediction predict(const std::vector<morse::CriticalPoint>& points,
                                  const UniformGrid& lambda_grid) {
    if (points.empty()) throw ParameterError("predict needs at least one critical point");
    for (const auto& p : points) {
        if (p.hessian_det == 0.0)
            throw NonMorseError("predict requires Morse-certified points", p.position.to_array());
    }
    StationaryPhasePrediction out;
    out.lambda_grid = lambda_grid;
    out.sum.assign(lambda_grid.count, Complex{});
    out.per_point.assign(points.size(), std::vector<Complex>(lambda_grid.count));
    for (std::size_t j = 0; j < lambda_grid.count; ++j) {
        double l = lambda_grid[j];
        if (l <= 0.0) continue;  // leading term undefined at lambda = 0; skipped
        for (std::size_t k = 0; k < points.size(); ++k) {
            Complex term =
                (2.0 * kPi / l) * points[k].amplitude * std::polar(1.0, -l * points[k].value);
            out.per_point[k][j] = term;
            out.sum[j] += term;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void write_spectrum_csv(const LineSpectrum& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "lambda,re,im\n";
    char buf[200];
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.lambda_grid[j], s.values[j].real(),
                      s.values[j].imag());
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

LineSpectrum read_spectrum_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("lambda", 0) != 0)
        throw IoError("missing spectrum CSV header in " + path);
    std::vector<double> lambdas;
    std::vector<Complex> values;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double l, re, im;
        if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &l, &re, &im) != 3)
            throw IoError("malformed spectrum CSV row: " + line);
        lambdas.push_back(l);
        values.push_back({re, im});
    }
    if (lambdas.size() < 2) throw IoError("spectrum CSV has fewer than 2 rows");
    LineSpectrum s;
    s.lambda_grid = {lambdas.front(), lambdas[1] - lambdas[0], lambdas.size()};
    s.values = std::move(values);
    s.meta.method = "file";
    return s;
}

std::string to_json(const LineSpectrum& s) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["surface"] = s.meta.surface;
    j["probe"] = s.meta.probe;
    j["method"] = s.meta.method;
    j["sign"] = s.meta.sign == PhaseSign::Negative ? "e^{-i lambda psi}" : "e^{+i lambda psi}";
    j["delta_lambda"] = s.lambda_grid.step;
    j["count"] = s.lambda_grid.count;
    nlohmann::ordered_json vals = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        vals.push_back(
            {{"lambda", s.lambda_grid[i]}, {"re", s.values[i].real()}, {"im", s.values[i].imag()}});
    }
    j["values"] = vals;
    return j.dump(2);
}

}  // namespace euchar::oscillatory
