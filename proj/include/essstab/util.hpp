#ifndef ESSSTAB_UTIL_HPP
#define ESSSTAB_UTIL_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace essstab {

using Vec2 = std::array<double, 2>;

inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 operator*(double s, const Vec2& a) { return {s * a[0], s * a[1]}; }
inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double cross(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }
inline double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }

// 2x2 real matrix, row-major.
struct Mat2 {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

    double det() const { return a11 * a22 - a12 * a21; }
    double trace() const { return a11 + a22; }
    double frobenius() const { return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22); }

    // Eigenvalues as (re1, im1, re2, im2); complex pair shares re, +/- im.
    std::array<double, 4> eigenvalues() const {
        const double t = trace(), d = det();
        const double disc = t * t / 4.0 - d;
        if (disc >= 0.0) {
            const double s = std::sqrt(disc);
            return {t / 2.0 + s, 0.0, t / 2.0 - s, 0.0};
        }
        const double s = std::sqrt(-disc);
        return {t / 2.0, s, t / 2.0, -s};
    }
};

// SplitMix64: tiny deterministic PRNG used for reproducible sampling.
// Substreams derived by index keep parallel sweeps order-independent.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [a,b)
    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    // standard normal via Box-Muller
    double normal() {
        double u1 = next_double(), u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
        SplitMix64 mix(seed ^ (0xD1B54A32D192ED03ull * (index + 1)));
        mix.next_u64();
        return mix;
    }
};

// Neumaier compensated sum; keeps accumulated round-off out of long reductions.
struct CompensatedSum {
    double sum = 0.0, comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

}  // namespace essstab

#endif
