#pragma once

// Oscillatory pairings mu(e^{-i lambda psi}) of the surface measure with plane
// waves and general phases: exact per-triangle integration on meshes,
// oscillation-aware adaptive Gauss quadrature on charts, uniform lambda-grid
// spectra, and the leading-order stationary phase prediction.

#include <string>
#include <vector>

#include "euchar/core.hpp"
#include "euchar/geometry.hpp"
#include "euchar/morse.hpp"

namespace euchar::oscillatory {

// The artifact standardizes on e^{-i lambda psi}; Positive flips to
// e^{+i lambda psi} by conjugation.
enum class PhaseSign { Negative, Positive };

struct SpectrumMetadata {
    std::string surface;
    std::string probe;
    std::string method;       // mesh_exact | mesh_subdivided | parametric_adaptive
    PhaseSign sign = PhaseSign::Negative;
};

struct LineSpectrum {
    UniformGrid lambda_grid;        // lambda_j = j * delta, j = 0..N-1
    std::vector<Complex> values;    // s_j = mu(e^{-i lambda_j psi})
    SpectrumMetadata meta;

    double lambda_max() const { return lambda_grid.back(); }
    double delta_lambda() const { return lambda_grid.step; }
};

struct PairingOptions {
    PhaseSign sign = PhaseSign::Negative;
    double quad_rel_tol = 1e-9;        // parametric: absolute tol = rel_tol * area
    std::size_t max_cells = 6'000'000;  // parametric refinement budget
    double linear_phase_tol = 0.05;    // mesh, non-height probes: residual phase per sub-face (rad)
    int max_subdivision = 8;
    double nyquist_margin = 1.2;       // spectra: pi/dl must exceed margin * max|psi|
    // single-pass tensor rule on cells sized so the phase moves <= 2.8 rad per
    // axis (8-point Gauss keeps that at ~1e-11); skips the adaptive estimator.
    // Cross-checked against the adaptive route in the test suite.
    bool fast_grid = false;
};

// Exact integral of e^{-i k.x} dA over a flat triangle via the stabilized
// divided-difference closed form (series fallback when the three vertex
// phases nearly coincide).
Complex triangle_plane_wave(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& k);

// Building block shared with the transforms module: exact integral over a
// triangle whose phase is the linear interpolant of the vertex values
// (phi_m), times e^{-i .}; `area` is the triangle area.
Complex linear_phase_integral(double phi0, double phi1, double phi2, double area);

Complex pairing(const TriangleMesh& mesh, const morse::ProbeFunction& probe, double lambda,
                const PairingOptions& opts = {});
Complex pairing(const ParametricSurface& surface, const morse::ProbeFunction& probe,
                double lambda, const PairingOptions& opts = {});

LineSpectrum spectrum(const TriangleMesh& mesh, const morse::ProbeFunction& probe,
                      double delta_lambda, std::size_t count, const PairingOptions& opts = {});
LineSpectrum spectrum(const ParametricSurface& surface, const morse::ProbeFunction& probe,
                      double delta_lambda, std::size_t count, const PairingOptions& opts = {});

// ---------------------------------------------------------------------------
// Stationary-phase leading order: sum of (2 pi / lambda) a(x) e^{-i lambda t}
// ---------------------------------------------------------------------------

struct StationaryPhasePrediction {
    UniformGrid lambda_grid;
    std::vector<Complex> sum;                      // zero where lambda <= 0 (skipped)
    std::vector<std::vector<Complex>> per_point;   // [point][lambda]
};

StationaryPhasePrediction predict(const std::vector<morse::CriticalPoint>& points,
                                  const UniformGrid& lambda_grid);

// ---------------------------------------------------------------------------
// Serialization: CSV (lambda, Re s, Im s) with %.17g round-trip precision,
// JSON with the metadata block.
// ---------------------------------------------------------------------------

void write_spectrum_csv(const LineSpectrum& s, const std::string& path);
LineSpectrum read_spectrum_csv(const std::string& path);
std::string to_json(const LineSpectrum& s);

}  // namespace euchar::oscillatory
