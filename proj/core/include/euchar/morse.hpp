#pragma once

// Critical points of probe functions restricted to a closed surface: height
// functions omega . x, distance functions |x - y|, and general smooth phases.
// Classification follows the -psi convention: index_minus counts negative
// eigenvalues of the Hessian of -psi, so maxima of psi carry n_- = 0 and
// amplitude phase +pi/2, minima n_- = 2 and phase -pi/2, saddles phase 0.

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "euchar/core.hpp"
#include "euchar/geometry.hpp"

namespace euchar::morse {

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};
    Vec3 apply(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
};

struct ProbeFunction {
    enum class Kind { Height, Distance, General };

    Kind kind = Kind::Height;
    Vec3 omega;   // Height: unit direction
    Vec3 source;  // Distance: exterior point

    std::function<double(const Vec3&)> general_value;
    std::function<Vec3(const Vec3&)> general_gradient;
    std::function<Mat3(const Vec3&)> general_hessian;

    static ProbeFunction height(const Vec3& direction);
    static ProbeFunction distance(const Vec3& exterior_point);
    static ProbeFunction general(std::function<double(const Vec3&)> value,
                                 std::function<Vec3(const Vec3&)> gradient,
                                 std::function<Mat3(const Vec3&)> hessian);

    double value(const Vec3& p) const;
    Vec3 gradient(const Vec3& p) const;
    Mat3 hessian(const Vec3& p) const;

    std::string describe() const;
};

// ---------------------------------------------------------------------------
// Critical points
// ---------------------------------------------------------------------------

struct CriticalPoint {
    Vec3 position;
    double value = 0.0;
    int index_minus = 0;  // n_- of Hess(-psi): 0 at psi-maxima, 2 at minima, 1 at saddles
    int index_plus = 0;
    double hessian_det = 0.0;  // det of the surface Hessian in orthonormal coordinates
    std::optional<double> curvature;  // Gauss curvature K (height probes)
    Complex amplitude;  // e^{i pi/4 (n_+ - n_-)} / sqrt|hessian_det|
};

struct CriticalOptions {
    int seed_grid = 64;               // parametric: Newton seeds per chart axis
    double merge_factor = 1e-6;       // dedup radius as a fraction of the length scale
    double tol_hess = 1e-6;           // |hessian_det| below this is non-Morse
    double clearance_factor = 1e-3;   // distance probes: min distance to S, x scale
    // mesh route: cancel persistence pairs (min-saddle / saddle-max) whose
    // value gap is at most this, in value units. Faceting splits smooth
    // critical points into shallow pairs of persistence O(h^2); cancellation
    // removes them in chi-preserving pairs. 0 disables.
    double persistence_floor = 0.0;
};

// All stationary points of psi|_S, sorted by (value, position). Throws
// NonMorseError when a degenerate critical point is found, ClearanceError
// when a distance probe sits on the surface.
std::vector<CriticalPoint> critical_points(const ParametricSurface& surface,
                                           const ProbeFunction& probe,
                                           const CriticalOptions& opts = {});
std::vector<CriticalPoint> critical_points(const TriangleMesh& mesh,
                                           const ProbeFunction& probe,
                                           const CriticalOptions& opts = {});

// ---------------------------------------------------------------------------
// Genericity certificates
// ---------------------------------------------------------------------------

struct GenericityReport {
    bool is_morse = false;
    bool is_excellent = false;
    double min_curvature_at_crit = 0.0;  // min |hessian_det| over critical points
    double min_value_gap = 0.0;
    std::vector<std::string> offending;
    std::string probe;
};

GenericityReport excellence_check(const std::vector<CriticalPoint>& points, double tol_gap,
                                  double tol_hess);

// Runs critical_points and folds NonMorse failures into the report instead of
// throwing. tol_gap < 0 means "1e-3 of the critical value range".
template <typename Surface>
GenericityReport check_probe(const Surface& surface, const ProbeFunction& probe,
                             double tol_gap = -1.0, double tol_hess = 1e-6,
                             std::vector<CriticalPoint>* points_out = nullptr,
                             double persistence_floor = 0.0);

// True iff the squared-distance function to x fails the Morse margin: some
// critical point of L_x^2 has a surface-Hessian eigenvalue of magnitude <= tol.
bool is_focal(const ParametricSurface& surface, const Vec3& x, double tol = 1e-4);
bool is_focal(const TriangleMesh& mesh, const Vec3& x, double tol = 1e-4);

// ---------------------------------------------------------------------------
// Morse counting polynomial M(T) = sum T^{n_-}
// ---------------------------------------------------------------------------

struct MorsePolynomial {
    std::array<int, 3> counts{};  // c_j = #points with n_- == j
    int at_minus_one = 0;         // c_0 - c_1 + c_2 = chi
};

MorsePolynomial morse_polynomial(const std::vector<CriticalPoint>& points);

// ---------------------------------------------------------------------------
// Seeded generic direction draw
// ---------------------------------------------------------------------------

struct GenericDirection {
    Vec3 omega;
    GenericityReport report;
    std::vector<CriticalPoint> points;
    int draws = 0;
};

template <typename Surface>
GenericDirection random_generic_direction(const Surface& surface, std::uint64_t seed,
                                          double tol_gap = -1.0, double tol_hess = 1e-6,
                                          int max_draws = 64, double persistence_floor = 0.0);

// Uniform direction from a seeded generator (one draw, no certificate).
Vec3 draw_direction(std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string to_json(const std::vector<CriticalPoint>& points);
std::string to_json(const GenericityReport& report);

}  // namespace euchar::morse
