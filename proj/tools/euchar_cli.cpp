// euchar: batch front end for the spectral Euler-characteristic pipelines.
//
// Subcommands:
//   generate   write builtin / implicit fixture meshes as OBJ + provenance
//   analyze    line spectrum of a surface along one probe (CSV + JSON)
//   recover    full chi recovery (fourier | radon | wave | phase routes)
//   predict    stationary-phase leading order vs the exact pairing
//   radon      Radon profile and its derivative profile
//   wave       receiver trace and the -2i(t d_t + 1) profile
//   check      genericity / focal certificates
//
// All randomness flows through one seeded generator recorded in the outputs;
// identical config + seed produce byte-identical files.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "euchar/geometry.hpp"
#include "euchar/morse.hpp"
#include "euchar/oscillatory.hpp"
#include "euchar/recovery.hpp"
#include "euchar/transforms.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace euchar;

namespace {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    // surface source (exactly one)
    std::string builtin;           // sphere | ellipsoid | torus
    std::vector<double> params{};  // builtin parameters
    std::string implicit_preset;   // genus2 | sphere | torus
    std::string mesh_path;
    int resolution = 64;

    // route and probe
    std::string route = "fourier";  // fourier | radon | wave | phase
    std::vector<double> direction{};
    std::vector<double> receiver{};
    std::vector<double> phase_linear{0.9, 0.2, -0.4};
    std::vector<double> phase_quad{0.31, -0.12, 0.05};
    std::uint64_t seed = 0;
    bool parametric = false;  // chart quadrature instead of the mesh kernel

    // numerical block
    double dlambda = 0.05;
    std::size_t nsamples = 4000;  // Lambda ~ dlambda * (nsamples - 1)
    std::size_t radon_bins = 800;
    std::size_t wave_bins = 400;
    double tol_hess = 1e-6;
    double tol_gap = -1.0;  // < 0: 1e-3 of the value range
    double rel_threshold = 0.2;
    double delta_phase = 0.15;
    double lambda_lo = 20.0, lambda_hi = 200.0;  // predict fit range
    std::size_t lambda_count = 31;
    // wave route: cancel facet-artifact persistence pairs below this value gap
    double persistence_floor = 0.02;

    std::string out_dir = "out";
};

void add_common_options(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "flat key = value run file; flags override");
    cmd->add_option("--builtin", cfg.builtin, "builtin surface: sphere | ellipsoid | torus");
    cmd->add_option("--radius", cfg.params, "builtin parameters (sphere: R; ellipsoid: a b c; torus: R r)")
        ->expected(1, 3);
    cmd->add_option("--implicit", cfg.implicit_preset, "implicit preset: genus2 | sphere | torus");
    cmd->add_option("--mesh", cfg.mesh_path, "path to a closed triangle OBJ");
    cmd->add_option("--resolution", cfg.resolution, "mesh resolution (per axis / per period)");
    cmd->add_option("--seed", cfg.seed, "seed for generic draws");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--dlambda", cfg.dlambda, "spectrum grid step");
    cmd->add_option("--nsamples", cfg.nsamples, "spectrum sample count");
    cmd->add_option("--tol-hess", cfg.tol_hess, "Morse margin on |hessian det|");
    cmd->add_option("--tol-gap", cfg.tol_gap, "excellence margin on value gaps");
    cmd->add_option("--rel-threshold", cfg.rel_threshold, "peak detection threshold");
    cmd->add_option("--delta-phase", cfg.delta_phase, "phase quantization slack");
    cmd->add_flag("--parametric", cfg.parametric, "use chart quadrature for builtin surfaces");
}

Vec3 to_vec3(const std::vector<double>& v, const char* what) {
    if (v.size() != 3) throw ParameterError(std::string(what) + " needs three components");
    return {v[0], v[1], v[2]};
}

// ---------------------------------------------------------------------------
// Flat key = value run files. '#' starts a comment; values may be scalars or
// whitespace/comma separated lists. Command-line flags win over file entries.
// ---------------------------------------------------------------------------

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    std::string token;
    for (char ch : text + " ") {
        if (ch == ' ' || ch == ',' || ch == '\t') {
            if (!token.empty()) {
                out.push_back(std::stod(token));
                token.clear();
            }
        } else {
            token += ch;
        }
    }
    return out;
}

void apply_config_file(const std::string& path, CLI::App* cmd, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot read config file: " + path);

    auto overridden = [&](const std::string& flag) {
        return cmd->get_option_no_throw(flag) && cmd->count(flag) > 0;
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ParameterError(path + ":" + std::to_string(lineno) +
                                     ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r");
            auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key.empty()) throw ParameterError(path + ":" + std::to_string(lineno) + ": empty key");
        if (overridden("--" + key)) continue;

        if (key == "builtin") cfg.builtin = value;
        else if (key == "radius" || key == "params") cfg.params = parse_numbers(value);
        else if (key == "implicit") cfg.implicit_preset = value;
        else if (key == "mesh") cfg.mesh_path = value;
        else if (key == "resolution") cfg.resolution = std::stoi(value);
        else if (key == "route") cfg.route = value;
        else if (key == "direction") cfg.direction = parse_numbers(value);
        else if (key == "receiver") cfg.receiver = parse_numbers(value);
        else if (key == "phase-linear") cfg.phase_linear = parse_numbers(value);
        else if (key == "phase-quad") cfg.phase_quad = parse_numbers(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "parametric") cfg.parametric = value == "true" || value == "1";
        else if (key == "dlambda") cfg.dlambda = std::stod(value);
        else if (key == "nsamples") cfg.nsamples = std::stoul(value);
        else if (key == "radon-bins") cfg.radon_bins = std::stoul(value);
        else if (key == "wave-bins") cfg.wave_bins = std::stoul(value);
        else if (key == "tol-hess") cfg.tol_hess = std::stod(value);
        else if (key == "tol-gap") cfg.tol_gap = std::stod(value);
        else if (key == "rel-threshold") cfg.rel_threshold = std::stod(value);
        else if (key == "delta-phase") cfg.delta_phase = std::stod(value);
        else if (key == "lambda-lo") cfg.lambda_lo = std::stod(value);
        else if (key == "lambda-hi") cfg.lambda_hi = std::stod(value);
        else if (key == "lambda-count") cfg.lambda_count = std::stoul(value);
        else if (key == "out") cfg.out_dir = value;
        else throw ParameterError(path + ":" + std::to_string(lineno) + ": unknown key " + key);
    }
}

// ---------------------------------------------------------------------------
// Surface assembly
// ---------------------------------------------------------------------------

struct SurfaceBundle {
    TriangleMesh mesh;
    std::optional<ParametricSurface> chart;
    std::string label;
};

SurfaceKind parse_kind(const std::string& name) {
    if (name == "sphere") return SurfaceKind::Sphere;
    if (name == "ellipsoid") return SurfaceKind::Ellipsoid;
    if (name == "torus") return SurfaceKind::Torus;
    throw ParameterError("unknown builtin surface: " + name);
}

std::vector<double> default_params(SurfaceKind kind, const std::vector<double>& given) {
    if (!given.empty()) return given;
    switch (kind) {
        case SurfaceKind::Sphere: return {1.0};
        case SurfaceKind::Ellipsoid: return {1.0, 0.8, 0.6};
        case SurfaceKind::Torus: return {2.0, 1.0};
    }
    return {};
}

SurfaceBundle make_surface(const RunConfig& cfg) {
    int sources = (!cfg.builtin.empty()) + (!cfg.implicit_preset.empty()) + (!cfg.mesh_path.empty());
    if (sources != 1)
        throw ParameterError("exactly one surface source required: --builtin, --implicit or --mesh");

    SurfaceBundle out;
    if (!cfg.builtin.empty()) {
        SurfaceKind kind = parse_kind(cfg.builtin);
        auto params = default_params(kind, cfg.params);
        auto [chart, mesh] = generate_parametric(kind, params, cfg.resolution);
        out.label = chart.label();
        out.chart = std::move(chart);
        out.mesh = std::move(mesh);
    } else if (!cfg.implicit_preset.empty()) {
        ImplicitSurface field;
        if (cfg.implicit_preset == "genus2") field = genus2_field();
        else if (cfg.implicit_preset == "sphere") field = sphere_field(1.0);
        else if (cfg.implicit_preset == "torus") field = torus_field(2.0, 1.0);
        else throw ParameterError("unknown implicit preset: " + cfg.implicit_preset);
        out.mesh = mesh_implicit(field, cfg.resolution);
        out.label = "implicit{" + cfg.implicit_preset + ",res=" + std::to_string(cfg.resolution) + "}";
    } else {
        out.mesh = read_obj(cfg.mesh_path);
        out.label = "obj{" + cfg.mesh_path + "}";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json report_json(const morse::GenericityReport& rep) {
    json j;
    j["probe"] = rep.probe;
    j["is_morse"] = rep.is_morse;
    j["is_excellent"] = rep.is_excellent;
    j["min_curvature_at_crit"] = rep.min_curvature_at_crit;
    j["min_value_gap"] = rep.min_value_gap;
    j["offending"] = rep.offending;
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text << "\n";
}

int fail_with_error_json(const fs::path& out_dir, const std::string& kind,
                         const std::string& what) {
    json j;
    j["schema_version"] = 1;
    j["error"] = kind;
    j["message"] = what;
    std::string text = j.dump(2);
    std::fprintf(stderr, "%s\n", text.c_str());
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!ec) {
        std::ofstream out(out_dir / "error.json");
        out << text << "\n";
    }
    return 3;
}

morse::ProbeFunction phase_probe(const RunConfig& cfg) {
    Vec3 c = to_vec3(cfg.phase_linear, "--phase-linear");
    Vec3 d = to_vec3(cfg.phase_quad, "--phase-quad");
    auto value = [c, d](const Vec3& p) {
        return dot(c, p) + 0.5 * (d.x * p.x * p.x + d.y * p.y * p.y + d.z * p.z * p.z);
    };
    auto gradient = [c, d](const Vec3& p) {
        return Vec3{c.x + d.x * p.x, c.y + d.y * p.y, c.z + d.z * p.z};
    };
    auto hessian = [d](const Vec3&) {
        morse::Mat3 m;
        m.m[0][0] = d.x;
        m.m[1][1] = d.y;
        m.m[2][2] = d.z;
        return m;
    };
    return morse::ProbeFunction::general(value, gradient, hessian);
}

// Receiver draw for the wave route: uniform direction, radius 1.5-3x the
// circumscribed radius around the centroid, resampled until the certificates
// pass.
Vec3 draw_receiver(const TriangleMesh& mesh, std::mt19937_64& rng, int* draws,
                   double persistence_floor) {
    Vec3 centroid{};
    for (const auto& v : mesh.vertices) centroid += v;
    centroid = centroid / static_cast<double>(mesh.vertices.size());
    double rc = 0.0;
    for (const auto& v : mesh.vertices) rc = std::max(rc, (v - centroid).norm());
    std::uniform_real_distribution<double> radius(1.5 * rc, 3.0 * rc);
    for (int attempt = 0; attempt < 64; ++attempt) {
        Vec3 x = centroid + morse::draw_direction(rng) * radius(rng);
        ++*draws;
        if (morse::is_focal(mesh, x)) continue;
        auto rep = morse::check_probe(mesh, morse::ProbeFunction::distance(x), -1.0, 1e-6,
                                      nullptr, persistence_floor);
        if (rep.is_excellent) return x;
    }
    throw GenericityError("no certified receiver after 64 draws");
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& cfg) {
    auto bundle = make_surface(cfg);
    fs::create_directories(cfg.out_dir);
    int chi = euler_characteristic_mesh(bundle.mesh);
    double defect = angle_defect_total(bundle.mesh);

    std::string stem = !cfg.builtin.empty() ? cfg.builtin
                       : !cfg.implicit_preset.empty() ? cfg.implicit_preset
                                                      : "mesh";
    fs::path obj_path = fs::path(cfg.out_dir) / (stem + ".obj");
    char head[160];
    std::snprintf(head, sizeof head, "%s  V=%zu F=%zu chi=%d", bundle.label.c_str(),
                  bundle.mesh.vertex_count(), bundle.mesh.face_count(), chi);
    write_obj(bundle.mesh, obj_path.string(), {head});

    json j;
    j["schema_version"] = 1;
    j["surface"] = bundle.label;
    j["obj"] = obj_path.string();
    j["vertices"] = bundle.mesh.vertex_count();
    j["faces"] = bundle.mesh.face_count();
    j["chi"] = chi;
    j["angle_defect_over_2pi"] = defect / (2.0 * kPi);
    j["area"] = total_area(bundle.mesh);
    write_text(fs::path(cfg.out_dir) / (stem + ".json"), j.dump(2));
    std::printf("%s: chi = %d, area = %.12g\n", obj_path.string().c_str(), chi,
                total_area(bundle.mesh));
    return 0;
}

struct ProbeSetup {
    morse::ProbeFunction probe;
    json descriptor;
    morse::GenericityReport report;
    std::vector<morse::CriticalPoint> points;
    int draws = 0;
};

// Chooses (or draws) a certified probe for height-based routes.
ProbeSetup height_probe_setup(const RunConfig& cfg, const TriangleMesh& mesh) {
    ProbeSetup s{morse::ProbeFunction::height({0, 0, 1}), {}, {}, {}, 0};
    if (!cfg.direction.empty()) {
        Vec3 w = normalized(to_vec3(cfg.direction, "--direction"));
        s.probe = morse::ProbeFunction::height(w);
        s.report = morse::check_probe(mesh, s.probe, cfg.tol_gap, cfg.tol_hess, &s.points);
        s.descriptor["direction"] = vec_json(w);
        s.descriptor["drawn"] = false;
        if (!s.report.is_excellent)
            throw GenericityError("direction fails the excellence certificate: " +
                                  (s.report.offending.empty() ? std::string("no critical points")
                                                              : s.report.offending.front()));
    } else {
        auto d = morse::random_generic_direction(mesh, cfg.seed, cfg.tol_gap, cfg.tol_hess);
        s.probe = morse::ProbeFunction::height(d.omega);
        s.report = std::move(d.report);
        s.points = std::move(d.points);
        s.draws = d.draws;
        s.descriptor["direction"] = vec_json(d.omega);
        s.descriptor["drawn"] = true;
        s.descriptor["draws"] = d.draws;
        s.descriptor["seed"] = cfg.seed;
    }
    return s;
}

// One attempt of the recover pipeline. Returns false (instead of committing
// outputs) when the spectral peak count disagrees with the Morse certificate:
// that marks a direction whose critical pairs collide below the certificate's
// mesh resolution, which the excellence hypothesis excludes.
struct RecoverAttempt {
    bool ok = false;
    std::string reject_reason;
    int expected_peaks = 0;
    oscillatory::LineSpectrum spec;
    recovery::TimeProfile profile;
    std::vector<double> peaks;
    recovery::DiracDecomposition dec;
    recovery::ChiResult chi;
    json probe_descriptor;
    bool certificates = false;
};

RecoverAttempt recover_attempt(const RunConfig& cfg, const SurfaceBundle& bundle,
                               std::uint64_t seed, const fs::path& out) {
    RecoverAttempt at;
    RunConfig local = cfg;
    local.seed = seed;

    if (cfg.route == "fourier" || cfg.route == "phase") {
        ProbeSetup setup;
        if (cfg.route == "phase") {
            setup.probe = phase_probe(cfg);
            setup.report = morse::check_probe(bundle.mesh, setup.probe, cfg.tol_gap, cfg.tol_hess,
                                              &setup.points);
            setup.descriptor["phase_linear"] = cfg.phase_linear;
            setup.descriptor["phase_quad"] = cfg.phase_quad;
            if (!setup.report.is_excellent)
                throw GenericityError("phase fails the excellence certificate");
        } else {
            setup = height_probe_setup(local, bundle.mesh);
        }
        at.certificates = setup.report.is_excellent;
        at.probe_descriptor = setup.descriptor;
        at.expected_peaks = static_cast<int>(setup.points.size());
        write_text(out / "genericity.json", morse::to_json(setup.report));
        write_text(out / "critical_points.json", morse::to_json(setup.points));

        if (cfg.parametric && bundle.chart) {
            at.spec = oscillatory::spectrum(*bundle.chart, setup.probe, cfg.dlambda, cfg.nsamples);
        } else {
            at.spec = oscillatory::spectrum(bundle.mesh, setup.probe, cfg.dlambda, cfg.nsamples);
        }
    } else if (cfg.route == "radon") {
        ProbeSetup setup = height_probe_setup(local, bundle.mesh);
        at.certificates = setup.report.is_excellent;
        at.probe_descriptor = setup.descriptor;
        at.expected_peaks = static_cast<int>(setup.points.size());
        write_text(out / "genericity.json", morse::to_json(setup.report));
        write_text(out / "critical_points.json", morse::to_json(setup.points));

        auto radon = transforms::radon_profile(bundle.mesh, setup.probe.omega, cfg.radon_bins);
        transforms::write_radon_csv(radon, (out / "radon.csv").string(),
                                    (out / "radon.json").string());
        double lambda_hi = cfg.dlambda * static_cast<double>(cfg.nsamples - 1);
        if (lambda_hi * radon.tau_grid.step / 2.0 > 0.8 * kPi)
            throw ConfigurationError("radon bins too coarse for the requested bandwidth");
        at.spec = transforms::radon_to_spectrum(radon, cfg.dlambda, cfg.nsamples);
    } else if (cfg.route == "wave") {
        Vec3 x;
        std::mt19937_64 rng(seed);
        int draws = 0;
        if (!cfg.receiver.empty()) x = to_vec3(cfg.receiver, "--receiver");
        else x = draw_receiver(bundle.mesh, rng, &draws, cfg.persistence_floor);
        at.probe_descriptor["receiver"] = vec_json(x);
        at.probe_descriptor["drawn"] = cfg.receiver.empty();
        if (cfg.receiver.empty()) {
            at.probe_descriptor["draws"] = draws;
            at.probe_descriptor["seed"] = seed;
        }
        std::vector<morse::CriticalPoint> pts;
        auto rep = morse::check_probe(bundle.mesh, morse::ProbeFunction::distance(x), cfg.tol_gap,
                                      cfg.tol_hess, &pts, cfg.persistence_floor);
        write_text(out / "genericity.json", morse::to_json(rep));
        at.certificates = rep.is_excellent;
        at.expected_peaks = static_cast<int>(pts.size());
        at.spec = transforms::wave_normalized_spectrum(bundle.mesh, x, cfg.dlambda, cfg.nsamples,
                                                       {}, cfg.persistence_floor);
        auto trace = transforms::wave_trace(bundle.mesh, x, cfg.wave_bins);
        transforms::write_wave_csv(trace, (out / "trace.csv").string(),
                                   (out / "trace.json").string());
    } else {
        throw ParameterError("unknown route: " + cfg.route);
    }

    const double t_max = 0.95 * kPi / at.spec.delta_lambda();
    at.profile = recovery::synthesize_profile(at.spec, recovery::WindowKind::Hann, t_max,
                                              2 * at.spec.values.size() + 512,
                                              /*two_sided=*/false);
    recovery::PeakOptions popts;
    popts.rel_threshold = cfg.rel_threshold;
    at.peaks = recovery::detect_peaks(at.profile, popts);
    if (static_cast<int>(at.peaks.size()) != at.expected_peaks) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "spectral peak count %zu disagrees with the Morse certificate (%d points): "
                      "critical values collide below the certificate resolution",
                      at.peaks.size(), at.expected_peaks);
        at.reject_reason = buf;
        return at;
    }
    try {
        at.dec = recovery::fit_amplitudes(at.spec, at.peaks);
        at.chi = recovery::euler_characteristic(at.dec, cfg.delta_phase);
    } catch (const ClassificationError& e) {
        at.reject_reason = e.what();
        return at;
    } catch (const ConditioningError& e) {
        at.reject_reason = e.what();
        return at;
    }
    at.ok = true;
    return at;
}

int cmd_recover(const RunConfig& cfg) {
    auto bundle = make_surface(cfg);
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);
    const int chi_oracle = euler_characteristic_mesh(bundle.mesh);

    json summary;
    summary["schema_version"] = 1;
    summary["surface"] = bundle.label;
    summary["route"] = cfg.route;
    summary["chi_mesh_oracle"] = chi_oracle;

    // a drawn probe is redrawn when the spectrum exposes critical-value
    // collisions below what the mesh certificate can resolve, or when the
    // amplitude phases fail to quantize at this bandwidth
    const bool drawn = (cfg.route == "wave") ? cfg.receiver.empty() : cfg.direction.empty();
    const int max_attempts = drawn && cfg.route != "phase" ? 12 : 1;
    RecoverAttempt at;
    int attempt = 0;
    for (;; ++attempt) {
        at = recover_attempt(cfg, bundle, cfg.seed + 1000003ull * attempt, out);
        if (at.ok) break;
        if (attempt + 1 >= max_attempts) throw GenericityError(at.reject_reason);
    }

    at.spec.meta.surface = bundle.label;
    oscillatory::write_spectrum_csv(at.spec, (out / "spectrum.csv").string());
    write_text(out / "spectrum.json", oscillatory::to_json(at.spec));
    recovery::write_profile_csv(at.profile, (out / "profile.csv").string());
    write_text(out / "decomposition.json", recovery::to_json(at.dec, cfg.delta_phase));

    bool match = at.chi.chi == chi_oracle;
    summary["probe"] = at.probe_descriptor;
    summary["probe_attempts"] = attempt + 1;
    summary["peaks"] = at.peaks;
    summary["chi_recovered"] = at.chi.chi;
    summary["contributions"] = at.chi.contributions;
    summary["residual_rms"] = at.dec.residual_rms;
    summary["certificates_passed"] = at.certificates;
    summary["match"] = match;
    write_text(out / "summary.json", summary.dump(2));
    std::printf("chi_recovered = %d, oracle = %d, match = %s\n", at.chi.chi, chi_oracle,
                match ? "true" : "false");
    return match && at.certificates ? 0 : 1;
}

int cmd_analyze(const RunConfig& cfg) {
    auto bundle = make_surface(cfg);
    fs::create_directories(cfg.out_dir);
    ProbeSetup setup = height_probe_setup(cfg, bundle.mesh);
    oscillatory::LineSpectrum spec;
    if (cfg.parametric && bundle.chart) {
        spec = oscillatory::spectrum(*bundle.chart, setup.probe, cfg.dlambda, cfg.nsamples);
    } else {
        spec = oscillatory::spectrum(bundle.mesh, setup.probe, cfg.dlambda, cfg.nsamples);
        spec.meta.surface = bundle.label;
    }
    oscillatory::write_spectrum_csv(spec, (fs::path(cfg.out_dir) / "spectrum.csv").string());
    write_text(fs::path(cfg.out_dir) / "spectrum.json", oscillatory::to_json(spec));
    std::printf("wrote %s\n", (fs::path(cfg.out_dir) / "spectrum.csv").string().c_str());
    return 0;
}

int cmd_predict(const RunConfig& cfg) {
    auto bundle = make_surface(cfg);
    fs::create_directories(cfg.out_dir);
    ProbeSetup setup = height_probe_setup(cfg, bundle.mesh);

    // log-spaced lambda grid over [lambda_lo, lambda_hi]
    std::vector<double> lambdas;
    for (std::size_t i = 0; i < cfg.lambda_count; ++i) {
        double f = static_cast<double>(i) / static_cast<double>(cfg.lambda_count - 1);
        lambdas.push_back(cfg.lambda_lo * std::pow(cfg.lambda_hi / cfg.lambda_lo, f));
    }

    std::vector<morse::CriticalPoint> pts =
        bundle.chart && cfg.parametric
            ? morse::critical_points(*bundle.chart, setup.probe)
            : setup.points;

    std::ofstream csv(fs::path(cfg.out_dir) / "predict.csv");
    csv << "lambda,abs_pairing,abs_prediction,abs_diff\n";
    int skipped = 0;
    std::vector<double> lx, ly;
    char buf[200];
    oscillatory::PairingOptions popts;
    popts.fast_grid = true;  // a-priori tensor rule; plenty for decay fits
    for (double l : lambdas) {
        if (l <= 0.0) {
            ++skipped;
            continue;
        }
        Complex pair = bundle.chart && cfg.parametric
                           ? oscillatory::pairing(*bundle.chart, setup.probe, l, popts)
                           : oscillatory::pairing(bundle.mesh, setup.probe, l);
        UniformGrid g{l, 1.0, 1};
        Complex pred = oscillatory::predict(pts, g).sum[0];
        double diff = std::abs(pair - pred);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", l, std::abs(pair),
                      std::abs(pred), diff);
        csv << buf;
        if (diff > 0.0) {
            lx.push_back(std::log(l));
            ly.push_back(std::log(diff));
        }
    }
    // least-squares slope on the log-log residual
    double slope = 0.0;
    if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= lx.size();
        my /= ly.size();
        double num = 0, den = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            num += (lx[i] - mx) * (ly[i] - my);
            den += (lx[i] - mx) * (lx[i] - mx);
        }
        slope = den > 0 ? num / den : 0.0;
    }
    json j;
    j["schema_version"] = 1;
    j["surface"] = bundle.label;
    j["probe"] = setup.descriptor;
    j["decay_slope"] = slope;
    j["skipped_lambda_rows"] = skipped;
    if (skipped > 0) j["note"] = "lambda = 0 rows skipped: leading term undefined there";
    write_text(fs::path(cfg.out_dir) / "predict.json", j.dump(2));
    std::printf("decay slope = %.4f\n", slope);
    return 0;
}

int cmd_radon(const RunConfig& cfg) {
    auto bundle = make_surface(cfg);
    fs::create_directories(cfg.out_dir);
    ProbeSetup setup = height_probe_setup(cfg, bundle.mesh);
    auto radon = transforms::radon_profile(bundle.mesh, setup.probe.omega, cfg.radon_bins);
    const fs::path out(cfg.out_dir);
    transforms::write_radon_csv(radon, (out / "radon.csv").string(),
                                (out / "radon.json").string());
    auto prof = transforms::radon_to_profile_u(radon);
    recovery::write_profile_csv(prof, (out / "radon_profile_u.csv").string());
    std::printf("total deposited area = %.12g\n", radon.total_area);
    return 0;
}

int cmd_wave(const RunConfig& cfg) {
    auto bundle = make_surface(cfg);
    fs::create_directories(cfg.out_dir);
    Vec3 x;
    std::mt19937_64 rng(cfg.seed);
    int draws = 0;
    if (!cfg.receiver.empty()) x = to_vec3(cfg.receiver, "--receiver");
    else x = draw_receiver(bundle.mesh, rng, &draws, cfg.persistence_floor);

    auto trace = transforms::wave_trace(bundle.mesh, x, cfg.wave_bins);
    const fs::path out(cfg.out_dir);
    transforms::write_wave_csv(trace, (out / "trace.csv").string(), (out / "trace.json").string());
    auto prof = transforms::time_domain_operator(trace);
    recovery::write_profile_csv(prof, (out / "trace_normalized.csv").string());
    std::printf("receiver = (%.6g, %.6g, %.6g), deposited area = %.12g\n", x.x, x.y, x.z,
                trace.deposited_area);
    return 0;
}

int cmd_check(const RunConfig& cfg, int batch) {
    auto bundle = make_surface(cfg);
    fs::create_directories(cfg.out_dir);
    json j;
    j["schema_version"] = 1;
    j["surface"] = bundle.label;
    bool pass = true;

    if (!cfg.direction.empty()) {
        Vec3 w = normalized(to_vec3(cfg.direction, "--direction"));
        auto rep = morse::check_probe(bundle.mesh, morse::ProbeFunction::height(w), cfg.tol_gap,
                                      cfg.tol_hess);
        j["direction"] = vec_json(w);
        j["report"] = report_json(rep);
        pass = rep.is_excellent;
    } else if (!cfg.receiver.empty()) {
        Vec3 x = to_vec3(cfg.receiver, "--receiver");
        bool focal = morse::is_focal(bundle.mesh, x);
        j["receiver"] = vec_json(x);
        j["focal"] = focal;
        if (focal) {
            pass = false;
        } else {
            auto rep = morse::check_probe(bundle.mesh, morse::ProbeFunction::distance(x),
                                          cfg.tol_gap, cfg.tol_hess);
            j["report"] = report_json(rep);
            pass = rep.is_excellent;
        }
    } else {
        // seed-driven batch of direction draws
        json batch_report = json::array();
        for (int b = 0; b < batch; ++b) {
            auto d = morse::random_generic_direction(bundle.mesh, cfg.seed + b, cfg.tol_gap,
                                                     cfg.tol_hess);
            json e;
            e["seed"] = cfg.seed + b;
            e["direction"] = vec_json(d.omega);
            e["draws"] = d.draws;
            e["chi_from_morse"] = morse::morse_polynomial(d.points).at_minus_one;
            batch_report.push_back(e);
        }
        j["batch"] = batch_report;
    }
    j["pass"] = pass;
    write_text(fs::path(cfg.out_dir) / "check.json", j.dump(2));
    std::printf("%s\n", pass ? "pass" : "fail");
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral Euler characteristic toolkit"};
    app.require_subcommand(1);

    RunConfig cfg;
    int batch = 5;
    std::string config_path;

    auto* generate = app.add_subcommand("generate", "write a fixture mesh + provenance");
    auto* analyze = app.add_subcommand("analyze", "compute a line spectrum");
    auto* recover = app.add_subcommand("recover", "run one recovery route end to end");
    auto* predict = app.add_subcommand("predict", "stationary phase leading order vs pairing");
    auto* radon = app.add_subcommand("radon", "radon profile and derivative profile");
    auto* wave = app.add_subcommand("wave", "receiver trace and normalized profile");
    auto* check = app.add_subcommand("check", "genericity and focal certificates");

    for (auto* cmd : {generate, analyze, recover, predict, radon, wave, check}) {
        add_common_options(cmd, cfg, config_path);
    }
    for (auto* cmd : {analyze, recover, predict, radon, check}) {
        cmd->add_option("--direction", cfg.direction, "height probe direction")->expected(3);
    }
    for (auto* cmd : {recover, wave, check}) {
        cmd->add_option("--receiver", cfg.receiver, "wave route receiver point")->expected(3);
    }
    recover->add_option("--route", cfg.route, "fourier | radon | wave | phase");
    recover->add_option("--phase-linear", cfg.phase_linear, "general phase linear part")->expected(3);
    recover->add_option("--phase-quad", cfg.phase_quad, "general phase diagonal quadratic part")
        ->expected(3);
    recover->add_option("--radon-bins", cfg.radon_bins, "radon route bins");
    recover->add_option("--persistence-floor", cfg.persistence_floor,
                        "wave route: cancel certificate pairs below this value gap");
    recover->add_option("--wave-bins", cfg.wave_bins, "wave trace bins");
    radon->add_option("--bins", cfg.radon_bins, "radon bins");
    wave->add_option("--bins", cfg.wave_bins, "trace bins");
    predict->add_option("--lambda-lo", cfg.lambda_lo, "fit range lower end");
    predict->add_option("--lambda-hi", cfg.lambda_hi, "fit range upper end");
    predict->add_option("--lambda-count", cfg.lambda_count, "log grid size");
    check->add_option("--batch", batch, "seed-driven batch size");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) {
            CLI::App* active = app.get_subcommands().front();
            apply_config_file(config_path, active, cfg);
        }
        if (generate->parsed()) return cmd_generate(cfg);
        if (analyze->parsed()) return cmd_analyze(cfg);
        if (recover->parsed()) return cmd_recover(cfg);
        if (predict->parsed()) return cmd_predict(cfg);
        if (radon->parsed()) return cmd_radon(cfg);
        if (wave->parsed()) return cmd_wave(cfg);
        if (check->parsed()) return cmd_check(cfg, batch);
    } catch (const ParameterError& e) {
        return fail_with_error_json(cfg.out_dir, "parameter", e.what());
    } catch (const TopologyError& e) {
        return fail_with_error_json(cfg.out_dir, "topology", e.what());
    } catch (const GenericityError& e) {
        return fail_with_error_json(cfg.out_dir, "genericity", e.what());
    } catch (const NonMorseError& e) {
        return fail_with_error_json(cfg.out_dir, "non_morse", e.what());
    } catch (const ConfigurationError& e) {
        return fail_with_error_json(cfg.out_dir, "configuration", e.what());
    } catch (const ConditioningError& e) {
        return fail_with_error_json(cfg.out_dir, "conditioning", e.what());
    } catch (const ClassificationError& e) {
        return fail_with_error_json(cfg.out_dir, "classification", e.what());
    } catch (const ClearanceError& e) {
        return fail_with_error_json(cfg.out_dir, "clearance", e.what());
    } catch (const ResolutionError& e) {
        return fail_with_error_json(cfg.out_dir, "resolution", e.what());
    } catch (const EmptyDecompositionError& e) {
        return fail_with_error_json(cfg.out_dir, "empty_decomposition", e.what());
    } catch (const AccuracyError& e) {
        return fail_with_error_json(cfg.out_dir, "accuracy", e.what());
    } catch (const Error& e) {
        return fail_with_error_json(cfg.out_dir, "error", e.what());
    }
    return 2;
}
