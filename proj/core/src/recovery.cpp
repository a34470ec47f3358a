#include "euchar/recovery.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace euchar::recovery {

using oscillatory::LineSpectrum;

// ---------------------------------------------------------------------------
// Profile synthesis
// ---------------------------------------------------------------------------

namespace {

double window_weight(WindowKind w, double lambda, double cutoff) {
    switch (w) {
        case WindowKind::Hann: {
            double c = std::cos(0.5 * kPi * lambda / cutoff);
            return c * c;
        }
        case WindowKind::Rect: return 1.0;
    }
    return 1.0;
}

}  // namespace

TimeProfile synthesize_profile(const LineSpectrum& spectrum, WindowKind window, double t_max,
                               std::size_t samples, bool two_sided) {
    const std::size_t n = spectrum.values.size();
    if (n < 2) throw ConfigurationError("spectrum too short to synthesize");
    const double dl = spectrum.delta_lambda();
    const double cutoff = spectrum.lambda_max();
    if (t_max > kPi / dl * (1.0 + 1e-12))
        throw ConfigurationError("profile window exceeds the Nyquist bound pi/delta_lambda");
    if (samples < 2 * n)
        throw ConfigurationError("profile needs at least 2N samples");

    TimeProfile prof;
    prof.t_grid = {-t_max, 2.0 * t_max / static_cast<double>(samples - 1), samples};
    prof.values.assign(samples, Complex{});
    prof.window = window;
    prof.window_cutoff = cutoff;
    prof.source_delta_lambda = dl;

    // weighted positive-half samples g_j = (lambda/2pi) s_j w(lambda); the
    // negative half is the conjugate extension -conj(g_j) at -lambda_j
    std::vector<Complex> g(n);
    for (std::size_t j = 0; j < n; ++j) {
        double l = spectrum.lambda_grid[j];
        double w = window_weight(window, l, cutoff);
        if (window == WindowKind::Rect && j + 1 == n) w *= 0.5;  // trapezoid end
        g[j] = (l / (2.0 * kPi)) * spectrum.values[j] * w;
    }

    const double scale = dl / (2.0 * kPi);
    parallel_for_index(samples, [&](std::size_t m) {
        const double t = prof.t_grid[m];
        const Complex rot = std::polar(1.0, dl * t);
        Complex e = std::polar(1.0, spectrum.lambda_grid[0] * t);
        Complex acc{};
        if (two_sided) {
            for (std::size_t j = 0; j < n; ++j) {
                if ((j & 0xFF) == 0) e = std::polar(1.0, spectrum.lambda_grid[j] * t);
                acc += g[j] * e - std::conj(g[j] * e);
                e *= rot;
            }
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                if ((j & 0xFF) == 0) e = std::polar(1.0, spectrum.lambda_grid[j] * t);
                acc += g[j] * e;
                e *= rot;
            }
        }
        prof.values[m] = scale * acc;
    });
    return prof;
}

// ---------------------------------------------------------------------------
// Peak detection
// ---------------------------------------------------------------------------

std::vector<double> detect_peaks(const TimeProfile& profile, double rel_threshold) {
    PeakOptions opts;
    opts.rel_threshold = rel_threshold;
    return detect_peaks(profile, opts);
}

std::vector<double> detect_peaks(const TimeProfile& profile, const PeakOptions& opts) {
    const auto& v = profile.values;
    if (v.size() < 3) throw EmptyDecompositionError("profile too short");
    std::vector<double> mag(v.size());
    double vmax = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        mag[i] = std::abs(v[i]);
        vmax = std::max(vmax, mag[i]);
        l1 += mag[i];
    }
    // a Dirac peak concentrates: flat numerical dust has max ~ a few x mean
    const double mean = l1 / static_cast<double>(v.size());
    if (vmax <= 0.0 || vmax < 5.0 * mean)
        throw EmptyDecompositionError("profile is flat: no peaks above the numerical floor");

    struct RawPeak {
        double t, height;
    };
    std::vector<RawPeak> raw;
    const double dt = profile.t_grid.step;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (mag[i] < opts.rel_threshold * vmax) continue;
        if (!(mag[i] >= mag[i - 1] && mag[i] > mag[i + 1])) continue;
        double denom = mag[i - 1] - 2.0 * mag[i] + mag[i + 1];
        double off = denom < 0.0 ? 0.5 * (mag[i - 1] - mag[i + 1]) / denom : 0.0;
        off = std::clamp(off, -0.5, 0.5);
        raw.push_back({profile.t_grid[i] + off * dt, mag[i]});
    }
    if (raw.empty()) throw EmptyDecompositionError("no peaks above threshold");

    // merge maxima within one Rayleigh width (odd-kernel twin humps)
    const double min_sep =
        profile.window_cutoff > 0.0 ? opts.merge_rayleigh * 2.0 * kPi / profile.window_cutoff
                                    : 2.0 * dt;
    std::vector<double> peaks;
    std::size_t i = 0;
    while (i < raw.size()) {
        double wsum = 0.0, tsum = 0.0;
        std::size_t j = i;
        double cluster_end = raw[i].t;
        while (j < raw.size() && raw[j].t <= cluster_end + min_sep) {
            double w = raw[j].height * raw[j].height;
            wsum += w;
            tsum += w * raw[j].t;
            cluster_end = raw[j].t;
            ++j;
        }
        peaks.push_back(tsum / wsum);
        i = j;
    }
    return peaks;
}

// ---------------------------------------------------------------------------
// Variable-projection amplitude fit
// ---------------------------------------------------------------------------

namespace {

struct FitData {
    std::vector<double> lambda;
    std::vector<Complex> y;  // (lambda/2pi) s
};

FitData collect_fit_data(const LineSpectrum& s, double lo, double hi, std::size_t cap) {
    FitData d;
    std::size_t count = 0;
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        double l = s.lambda_grid[j];
        if (l <= 0.0 || l < lo || l > hi) continue;
        ++count;
    }
    std::size_t stride = std::max<std::size_t>(1, count / cap);
    std::size_t seen = 0;
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        double l = s.lambda_grid[j];
        if (l <= 0.0 || l < lo || l > hi) continue;
        if (seen++ % stride) continue;
        d.lambda.push_back(l);
        d.y.push_back(l / (2.0 * kPi) * s.values[j]);
    }
    return d;
}

struct LinearSolve {
    Eigen::VectorXcd beta;  // a_0..a_{K-1}, c_0..c_{K-1}
    double residual2 = 0.0;
    double min_diag = 0.0, max_diag = 0.0;  // |R| diagonal of the QR factor
};

LinearSolve solve_linear(const FitData& d, const std::vector<double>& t) {
    const std::size_t J = d.lambda.size(), K = t.size();
    Eigen::MatrixXcd Phi(J, 2 * K);
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t k = 0; k < K; ++k) {
            Complex e = std::polar(1.0, -d.lambda[j] * t[k]);
            Phi(j, k) = e;
            Phi(j, K + k) = e / d.lambda[j];
        }
    }
    Eigen::VectorXcd y(J);
    for (std::size_t j = 0; j < J; ++j) y(j) = d.y[j];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(Phi);
    LinearSolve out;
    out.beta = qr.solve(y);
    out.residual2 = (Phi * out.beta - y).squaredNorm();
    auto diag = qr.matrixR().diagonal().cwiseAbs();
    out.min_diag = diag.minCoeff();
    out.max_diag = diag.maxCoeff();
    return out;
}

}  // namespace

DiracDecomposition fit_amplitudes(const LineSpectrum& spectrum, const std::vector<double>& t_init,
                                  const FitOptions& opts) {
    if (t_init.empty()) throw ParameterError("fit_amplitudes needs at least one location");
    const double cutoff = spectrum.lambda_max();
    const double rayleigh = 2.0 * kPi / cutoff;

    std::vector<double> t = t_init;
    std::sort(t.begin(), t.end());
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        if (t[k + 1] - t[k] <= 2.0 * rayleigh) {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "peak collision: t = %.6g and %.6g are closer than twice the Rayleigh "
                          "width %.3g",
                          t[k], t[k + 1], rayleigh);
            throw ConditioningError(buf);
        }
    }

    double lo = opts.lambda_lo > 0.0 ? opts.lambda_lo : cutoff / 4.0;
    double hi = opts.lambda_hi > 0.0 ? opts.lambda_hi : cutoff;
    FitData data = collect_fit_data(spectrum, lo, hi, opts.max_fit_samples);
    if (data.lambda.size() < 2 * t.size() + 2)
        throw ConfigurationError("not enough spectrum samples in the fit window");

    auto residual_at = [&](const std::vector<double>& tt) {
        return solve_linear(data, tt).residual2;
    };

    // bounded coordinate descent: golden-section on each t_k in turn
    const double width = opts.search_width_rayleigh * rayleigh;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int sweep = 0; sweep < opts.sweeps; ++sweep) {
        for (std::size_t k = 0; k < t.size(); ++k) {
            double a = t[k] - width, b = t[k] + width;
            double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
            std::vector<double> tt = t;
            tt[k] = x1;
            double f1 = residual_at(tt);
            tt[k] = x2;
            double f2 = residual_at(tt);
            for (int it = 0; it < opts.golden_iterations; ++it) {
                if (f1 < f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - gr * (b - a);
                    tt[k] = x1;
                    f1 = residual_at(tt);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + gr * (b - a);
                    tt[k] = x2;
                    f2 = residual_at(tt);
                }
            }
            t[k] = 0.5 * (a + b);
        }
        std::sort(t.begin(), t.end());
    }

    LinearSolve fin = solve_linear(data, t);
    if (fin.min_diag < 1e-10 * fin.max_diag) {
        double best_gap = std::numeric_limits<double>::max();
        std::size_t at = 0;
        for (std::size_t k = 0; k + 1 < t.size(); ++k) {
            if (t[k + 1] - t[k] < best_gap) {
                best_gap = t[k + 1] - t[k];
                at = k;
            }
        }
        char buf[160];
        std::snprintf(buf, sizeof buf, "ill-conditioned design matrix; closest pair t = %.6g, %.6g",
                      t[at], t[at + 1]);
        throw ConditioningError(buf);
    }

    DiracDecomposition dec;
    dec.fit_lambda_lo = lo;
    dec.fit_lambda_hi = hi;
    const std::size_t K = t.size();
    for (std::size_t k = 0; k < K; ++k) {
        DiracEntry e;
        e.t = t[k];
        e.a = fin.beta(static_cast<Eigen::Index>(k));
        e.c = fin.beta(static_cast<Eigen::Index>(K + k));
        double n = std::norm(e.a);
        e.parity = n > 0.0 ? -(e.a * e.a).real() / n : 0.0;
        dec.entries.push_back(e);
    }
    dec.residual_rms = std::sqrt(fin.residual2 / static_cast<double>(data.lambda.size()));
    double y_rms = 0.0;
    for (const auto& y : data.y) y_rms += std::norm(y);
    y_rms = std::sqrt(y_rms / static_cast<double>(data.y.size()));
    dec.poor_fit = y_rms > 0.0 && dec.residual_rms > opts.poor_fit_ratio * y_rms;
    return dec;
}

// ---------------------------------------------------------------------------
// Scaling estimator
// ---------------------------------------------------------------------------

ScalingAmplitude scaling_amplitude(const LineSpectrum& spectrum, double t0) {
    const double dl = spectrum.delta_lambda();
    if (std::abs(t0) > kPi / dl)
        throw ConfigurationError("t0 outside the Nyquist range of the spectrum");
    auto average_to = [&](std::size_t jmax) {
        Complex acc{};
        for (std::size_t j = 0; j <= jmax; ++j) {
            double l = spectrum.lambda_grid[j];
            double w = (j == 0 || j == jmax) ? 0.5 : 1.0;  // trapezoid
            acc += w * (l / (2.0 * kPi)) * spectrum.values[j] * std::polar(1.0, l * t0);
        }
        return acc / static_cast<double>(jmax);  // (1/L) int_0^L, L = jmax * dl
    };
    std::size_t n = spectrum.values.size();
    ScalingAmplitude out;
    out.value = average_to(n - 1);
    out.half_window = average_to((n - 1) / 2);
    out.uncertainty = std::abs(out.value - out.half_window);
    return out;
}

// ---------------------------------------------------------------------------
// Euler characteristic
// ---------------------------------------------------------------------------

ChiResult euler_characteristic(const DiracDecomposition& decomposition, double delta_phase) {
    if (decomposition.entries.empty())
        throw EmptyDecompositionError("no entries to classify");
    ChiResult out;
    for (const auto& e : decomposition.entries) {
        if (std::abs(e.a) <= 0.0)
            throw ClassificationError("vanishing amplitude at t = " + std::to_string(e.t));
        if (std::abs(e.parity) < 1.0 - delta_phase) {
            char buf[200];
            std::snprintf(buf, sizeof buf,
                          "amplitude phase not quantized at t = %.6g (parity %.3f); increase the "
                          "bandwidth or redraw the probe",
                          e.t, e.parity);
            throw ClassificationError(buf);
        }
        out.contributions.push_back(e.parity >= 0.0 ? 1 : -1);
        out.chi += out.contributions.back();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void write_profile_csv(const TimeProfile& profile, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "t,re,im,abs\n";
    char buf[240];
    for (std::size_t i = 0; i < profile.values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", profile.t_grid[i],
                      profile.values[i].real(), profile.values[i].imag(),
                      std::abs(profile.values[i]));
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

std::string to_json(const DiracDecomposition& dec, double delta_phase) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : dec.entries) {
        entries.push_back({{"t", e.t},
                           {"a", {{"re", e.a.real()}, {"im", e.a.imag()}}},
                           {"c", {{"re", e.c.real()}, {"im", e.c.imag()}}},
                           {"parity", e.parity},
                           {"classification", e.parity >= 0.0 ? "even" : "odd"}});
    }
    j["entries"] = entries;
    j["residual_rms"] = dec.residual_rms;
    j["fit_window"] = {dec.fit_lambda_lo, dec.fit_lambda_hi};
    j["poor_fit"] = dec.poor_fit;
    try {
        ChiResult chi = euler_characteristic(dec, delta_phase);
        j["contributions"] = chi.contributions;
        j["chi"] = chi.chi;
    } catch (const Error& e) {
        j["chi"] = nullptr;
        j["classification_error"] = e.what();
    }
    return j.dump(2);
}

}  // namespace euchar::recovery
