#pragma once

// The Radon and wave-equation routes to the same Dirac decomposition: exact
// per-triangle deposition of Rmu(omega, tau), its tau-derivative profile, the
// projection-slice spectrum, spherical-mean receiver traces of the wave
// solution with Cauchy data (0, mu), and the -2i(t d_t + 1) normalization.

#include <string>
#include <vector>

#include "euchar/core.hpp"
#include "euchar/geometry.hpp"
#include "euchar/oscillatory.hpp"
#include "euchar/recovery.hpp"

namespace euchar::transforms {

// ---------------------------------------------------------------------------
// Radon transform of the surface measure
// ---------------------------------------------------------------------------

struct RadonProfile {
    Vec3 omega;
    UniformGrid tau_grid;         // bin centers, uniform
    std::vector<double> values;   // bin-averaged density, area per unit length
    double total_area = 0.0;      // deposited mass: sum values * dtau, exact
    int perpendicular_faces = 0;  // faces with all three projections equal
};

// A flat triangle's area distribution over a linear functional is a hat
// function between its sorted vertex projections; hats are integrated exactly
// onto the bins. pad_bins empty bins are kept on each side.
RadonProfile radon_profile(const TriangleMesh& mesh, const Vec3& omega, std::size_t bins,
                           int pad_bins = 2);

// (1/2 i pi) d_tau Rmu by centered differences; peaks sit at the height
// critical values. min_gap > 0 enables the coarse-grid guard (at least 8 bins
// across the smallest expected gap).
recovery::TimeProfile radon_to_profile_u(const RadonProfile& radon, double min_gap = 0.0);

// Projection-slice: the Fourier transform of Rmu(omega, .) is mu(lambda omega).
// Evaluated from the binned profile with the bin-window sinc correction, so the
// radon route feeds the standard recovery pipeline using radon data alone.
oscillatory::LineSpectrum radon_to_spectrum(const RadonProfile& radon, double delta_lambda,
                                            std::size_t count);

void write_radon_csv(const RadonProfile& radon, const std::string& csv_path,
                     const std::string& json_sidecar_path = {});

// ---------------------------------------------------------------------------
// Wave route: u(t,x) = (1/4 pi t) int delta(|t| - |x-y|) mu(y) dy
// ---------------------------------------------------------------------------

struct WaveTrace {
    Vec3 receiver;
    UniformGrid t_grid;          // bin centers over (0, t_max]
    std::vector<double> values;  // u(t, x), bin-averaged density / (4 pi t)
    bool odd_in_t = true;        // u(-t, x) = -u(t, x)
    double deposited_area = 0.0;  // mass before the 1/(4 pi t) weight; equals area(S)
};

// Exact-hat deposition of per-face area over r = |x - y|, on faces subdivided
// until r is nearly linear per cell (<= 1% cell mass error).
WaveTrace wave_trace(const TriangleMesh& mesh, const Vec3& receiver, std::size_t bins,
                     int pad_bins = 2);

// -2i (t d_t + 1) u by centered differences; cross-validates peak locations
// against the frequency route at bin resolution.
recovery::TimeProfile time_domain_operator(const WaveTrace& trace);

// The frequency-domain realization of -2i(t d_t + 1) u: s(lambda) =
// mu(e^{-i lambda L_x}). Requires a non-focal receiver whose distance
// function is excellent Morse; throws GenericityError otherwise.
// persistence_floor feeds the mesh-route certificate (facet-artifact pair
// cancellation; see morse::CriticalOptions).
oscillatory::LineSpectrum wave_normalized_spectrum(const TriangleMesh& mesh, const Vec3& receiver,
                                                   double delta_lambda, std::size_t count,
                                                   const oscillatory::PairingOptions& opts = {},
                                                   double persistence_floor = 0.0);

void write_wave_csv(const WaveTrace& trace, const std::string& csv_path,
                    const std::string& json_sidecar_path = {});

}  // namespace euchar::transforms
