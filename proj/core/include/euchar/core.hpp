#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace euchar {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Errors. One exception type per failure class so callers (and the CLI) can
// map them to machine-readable categories.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ParameterError : Error { using Error::Error; };     // bad construction parameters
struct TopologyError : Error { using Error::Error; };      // open / inconsistent mesh
struct DegenerateChartError : Error { using Error::Error; };
struct NonMorseError : Error {                             // degenerate critical point
    NonMorseError(const std::string& what, std::array<double, 3> where)
        : Error(what), point(where) {}
    std::array<double, 3> point{};
};
struct GenericityError : Error { using Error::Error; };    // certificate failure / retry budget
struct ConfigurationError : Error { using Error::Error; }; // aliasing / Nyquist / grid setup
struct AccuracyError : Error {                             // refinement budget exhausted
    AccuracyError(const std::string& what, double achieved_tol)
        : Error(what), achieved(achieved_tol) {}
    double achieved = 0.0;
};
struct ClearanceError : Error { using Error::Error; };     // probe point too close to S
struct ResolutionError : Error { using Error::Error; };    // grid too coarse for the feature
struct ConditioningError : Error { using Error::Error; };  // colliding peaks in the fit
struct ClassificationError : Error { using Error::Error; };// amplitude phase not quantized
struct EmptyDecompositionError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Vec3
// ---------------------------------------------------------------------------

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double xx, double yy, double zz) : x(xx), y(yy), z(zz) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    double squared_norm() const { return x * x + y * y + z * z; }
    std::array<double, 3> to_array() const { return {x, y, z}; }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline Vec3 normalized(const Vec3& v) {
    double n = v.norm();
    if (n == 0.0) throw ParameterError("cannot normalize the zero vector");
    return v / n;
}
inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Some orthonormal completion of a unit vector to a right-handed frame.
inline std::pair<Vec3, Vec3> tangent_basis(const Vec3& n) {
    Vec3 seed = std::abs(n.x) < 0.7 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 t1 = normalized(cross(n, seed));
    Vec3 t2 = cross(n, t1);
    return {t1, t2};
}

// ---------------------------------------------------------------------------
// Uniform grids (lambda grids, tau grids, time grids)
// ---------------------------------------------------------------------------

struct UniformGrid {
    double start = 0.0;
    double step = 0.0;
    std::size_t count = 0;

    double operator[](std::size_t i) const { return start + step * static_cast<double>(i); }
    double back() const { return (*this)[count - 1]; }
    std::vector<double> materialize() const {
        std::vector<double> v(count);
        for (std::size_t i = 0; i < count; ++i) v[i] = (*this)[i];
        return v;
    }
};

// ---------------------------------------------------------------------------
// Deterministic parallel map: out[i] = f(i). Results are stored by index, so
// the output does not depend on scheduling.
// ---------------------------------------------------------------------------

template <typename F>
void parallel_for_index(std::size_t n, F&& f, unsigned max_threads = 0) {
    unsigned hw = std::thread::hardware_concurrency();
    unsigned nthreads = max_threads ? std::min(max_threads, hw) : hw;
    if (nthreads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    nthreads = std::min<std::size_t>(nthreads, n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += nthreads) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace euchar
