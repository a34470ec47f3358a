#pragma once

// Inversion of a line spectrum to the singular time profile, Dirac peak
// detection, complex amplitude estimation (variable projection over the
// positive-lambda half), and the Euler characteristic from the quantized
// amplitude phases: chi = sum of -Re(a_k^2)/|a_k|^2 rounded to +-1 per entry.

#include <string>
#include <vector>

#include "euchar/core.hpp"
#include "euchar/oscillatory.hpp"

namespace euchar::recovery {

enum class WindowKind { Hann, Rect };

struct TimeProfile {
    UniformGrid t_grid;
    std::vector<Complex> values;
    WindowKind window = WindowKind::Hann;
    double window_cutoff = 0.0;   // Lambda of the synthesis window / bandwidth
    double source_delta_lambda = 0.0;
};

// u(t) = (1/2pi) int e^{i lambda t} (lambda/2pi) s(lambda) w(lambda) dlambda,
// with the negative half supplied by the conjugate extension of the real
// measure's transform. Discrete summation over the stored grid.
//
// two_sided = false keeps only the positive-lambda half (the analytic
// representation): same singular support, but every entry synthesizes as a
// symmetric |kernel| bump, which is what peak detection wants — with both
// halves, real-amplitude (saddle) entries appear as odd kernels that vanish
// at their own center.
TimeProfile synthesize_profile(const oscillatory::LineSpectrum& spectrum, WindowKind window,
                               double t_max, std::size_t samples, bool two_sided = true);

struct PeakOptions {
    double rel_threshold = 0.2;
    // maxima closer than this (in units of the Rayleigh width 2pi/Lambda) are
    // one physical peak; two-sided profiles synthesize real-amplitude entries
    // as odd kernels whose |u| has twin humps around the true location
    double merge_rayleigh = 0.75;
};

// Local maxima of |u| above rel_threshold * max, quadratically refined and
// cluster-merged; ascending. Throws EmptyDecompositionError when nothing
// rises above the numerical floor.
std::vector<double> detect_peaks(const TimeProfile& profile, double rel_threshold = 0.2);
std::vector<double> detect_peaks(const TimeProfile& profile, const PeakOptions& opts);

// ---------------------------------------------------------------------------
// Amplitude estimation
// ---------------------------------------------------------------------------

struct DiracEntry {
    double t = 0.0;
    Complex a;       // leading coefficient
    Complex c;       // fitted lambda^{-1} nuisance coefficient
    double parity = 0.0;  // -Re(a^2)/|a|^2 before rounding
};

struct DiracDecomposition {
    std::vector<DiracEntry> entries;  // sorted by t
    double residual_rms = 0.0;
    double fit_lambda_lo = 0.0, fit_lambda_hi = 0.0;
    bool poor_fit = false;
};

struct FitOptions {
    double lambda_lo = -1.0;   // default Lambda/4
    double lambda_hi = -1.0;   // default Lambda
    int sweeps = 6;            // coordinate refinement passes over the t_k
    int golden_iterations = 48;
    double search_width_rayleigh = 0.75;  // +- width around t_init, x 2pi/Lambda
    std::size_t max_fit_samples = 512;    // lambda subsampling cap for the solves
    double poor_fit_ratio = 0.05;         // residual_rms / rms(y) above this flags poor_fit
};

// Nonlinear least squares of (lambda/2pi) s = sum_k (a_k + c_k/lambda)
// e^{-i lambda t_k}: linear solve for (a_k, c_k), bounded local search on t_k.
DiracDecomposition fit_amplitudes(const oscillatory::LineSpectrum& spectrum,
                                  const std::vector<double>& t_init, const FitOptions& opts = {});

// Scaling estimator around one location: a = lim (1/L) int_0^L (lambda/2pi)
// s(lambda) e^{i lambda t0} dlambda, reported at the full and half windows.
struct ScalingAmplitude {
    Complex value;        // full-window average
    Complex half_window;  // average over [0, Lambda/2]
    double uncertainty;   // |value - half_window|
};

ScalingAmplitude scaling_amplitude(const oscillatory::LineSpectrum& spectrum, double t0);

// ---------------------------------------------------------------------------
// Euler characteristic
// ---------------------------------------------------------------------------

struct ChiResult {
    int chi = 0;
    std::vector<int> contributions;  // +-1 per entry, rounded individually
};

// Throws ClassificationError if any entry's parity is farther than
// delta_phase from +-1.
ChiResult euler_characteristic(const DiracDecomposition& decomposition,
                               double delta_phase = 0.15);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void write_profile_csv(const TimeProfile& profile, const std::string& path);
std::string to_json(const DiracDecomposition& decomposition, double delta_phase = 0.15);

}  // namespace euchar::recovery
