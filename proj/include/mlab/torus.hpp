// torus.hpp
// Fixed-point circle arithmetic, circle rotations, and the Heisenberg
// nilsystem H(R)/H(Z).
//
// A point of R/Z is stored as raw / 2^64. Addition and integer scaling are
// wrapping u64 operations and therefore exact mod 1. Irrational angles are
// replaced by their nearest grid point (error <= 2^-65).
//
// Heisenberg coordinates: (x, y, z) with group law
//   (x,y,z) * (x',y',z') = (x+x', y+y', z+z'+x*y').
// Gamma = integer points. The canonical coset representative has all three
// coordinates in [0,1). Products of two grid values land on the 2^-128 grid,
// so powers a^m are computed exactly in 128-bit fixed point and only the
// final z is rounded to double.
//
// G acts on G/Gamma from the left only: g * (h Gamma) is well defined, while
// replacing the left factor of a product by another coset representative
// changes the result. heis_mul therefore treats both arguments as group
// elements given by their coordinates.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "mlab/error.hpp"
#include "mlab/polynomial.hpp"

namespace mlab {

struct Frac64 {
    std::uint64_t raw = 0;

    constexpr double to_double() const noexcept { return static_cast<double>(raw) * 0x1p-64; }

    friend constexpr Frac64 operator+(Frac64 a, Frac64 b) noexcept { return {a.raw + b.raw}; }
    friend constexpr Frac64 operator-(Frac64 a, Frac64 b) noexcept { return {a.raw - b.raw}; }
    friend constexpr Frac64 operator-(Frac64 a) noexcept { return {std::uint64_t{0} - a.raw}; }
    // m * x mod 1; only m mod 2^64 matters.
    friend constexpr Frac64 operator*(std::uint64_t m, Frac64 x) noexcept { return {m * x.raw}; }
    friend constexpr bool operator==(Frac64, Frac64) = default;
};

// Nearest grid point to t. 1 - tiny rounds to raw 0, the same point of R/Z.
inline Frac64 frac_from_real(double t) {
    if (!(t >= 0.0 && t < 1.0)) throw DomainError("frac_from_real: " + std::to_string(t) + " not in [0,1)");
    const long double scaled = static_cast<long double>(t) * 0x1p64L;  // exact
    const long double rounded = std::nearbyintl(scaled);
    if (rounded >= 0x1p64L) return {0};
    return {static_cast<std::uint64_t>(rounded)};
}

// Nearest-grid rounds of common badly approximable fractional parts.
namespace angles {
inline constexpr Frac64 golden{0x9e3779b97f4a7c16ULL};  // frac((1+sqrt5)/2)
inline constexpr Frac64 sqrt2{0x6a09e667f3bcc909ULL};   // frac(sqrt 2)
inline constexpr Frac64 sqrt3{0xbb67ae8584caa73bULL};   // frac(sqrt 3)
inline constexpr Frac64 pi{0x243f6a8885a308d3ULL};      // frac(pi)
inline constexpr Frac64 e{0xb7e151628aed2a6bULL};       // frac(e)
}  // namespace angles

// e(k x) = exp(2 pi i k x). The product k x is reduced exactly on the grid,
// then split into a quarter turn and a remainder in [-1/8, 1/8).
inline std::complex<double> character(std::int64_t k, Frac64 x) noexcept {
    const std::uint64_t t = static_cast<std::uint64_t>(k) * x.raw;
    const std::uint64_t quarter = std::uint64_t{1} << 62;
    const std::uint64_t q = ((t + (quarter >> 1)) >> 62) & 3U;
    const auto rem = static_cast<std::int64_t>(t - q * quarter);
    const double angle = static_cast<double>(rem) * (2.0 * std::numbers::pi * 0x1p-64);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    switch (q) {
        case 0: return {c, s};
        case 1: return {-s, c};
        case 2: return {-c, -s};
        default: return {s, -c};
    }
}

// Unit-modulus exponential of a real phase, e(t).
inline std::complex<double> expi2pi(double t) noexcept {
    const double a = 2.0 * std::numbers::pi * (t - std::floor(t));
    return {std::cos(a), std::sin(a)};
}

struct RotationSystem {
    Frac64 alpha;
    std::string description;

    // Stand-in for irrationality: an odd raw angle has order 2^64 on the grid.
    bool minimal_proxy() const noexcept { return (alpha.raw & 1U) == 1U; }

    Frac64 step(Frac64 x) const noexcept { return x + alpha; }
};

// Nearest odd grid point, used when a user-supplied angle should act as an
// irrational rotation.
inline constexpr Frac64 odd_snap(Frac64 a) noexcept { return {a.raw | 1U}; }

// T^{p(n)} x0 = x0 + p(n) alpha, exact on the grid.
inline Frac64 rotation_orbit_point(const RotationSystem& sys, Frac64 x0, const IntPolynomial& p,
                                   std::uint64_t n) noexcept {
    return x0 + eval_wrapped(p, n) * sys.alpha;
}

// ---------------------------------------------------------------------------
// Heisenberg nilmanifold

struct HeisenbergPoint {
    Frac64 x;
    Frac64 y;
    double z = 0.0;
};

// Real coordinates of a group element, not necessarily near the fundamental
// domain. Input type for the general lattice reduction.
struct HeisenbergCoords {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

namespace detail {

inline u128 mul_hi_lo(std::uint64_t a, std::uint64_t b) noexcept { return static_cast<u128>(a) * b; }

// z in [0,1) as a 2^-128 fixed-point value. Exact for z >= 2^-75.
inline u128 z_to_fixed(double z) noexcept {
    const double scaled = std::ldexp(z - std::floor(z), 128);
    return scaled >= 0x1p128 ? u128{0} : static_cast<u128>(scaled);
}

inline double fixed_to_z(u128 v) noexcept {
    const double z = std::ldexp(static_cast<double>(v), -128);
    return z >= 1.0 ? 0.0 : z;
}

inline double reduce_unit(double z) noexcept {
    double r = z - std::floor(z);
    return r >= 1.0 ? 0.0 : r;
}

// C(m, 2) mod 2^128 for |m| < 2^127.
inline u128 binom2_wrapped(i128 m) noexcept {
    if ((m & 1) == 0) return static_cast<u128>(m / 2) * static_cast<u128>(m - 1);
    return static_cast<u128>(m) * static_cast<u128>((m - 1) / 2);
}

}  // namespace detail

inline constexpr HeisenbergPoint heis_identity() noexcept { return {}; }

// Group product. x and y are wrapped into [0,1) by right-multiplying with a
// lattice element, whose cross-term correction is folded into z. The
// returned z is a real in [0, 3) and needs heis_reduce for the canonical form.
inline HeisenbergPoint heis_mul(const HeisenbergPoint& g, const HeisenbergPoint& h) noexcept {
    const std::uint64_t xs = g.x.raw + h.x.raw;
    const std::uint64_t ys = g.y.raw + h.y.raw;
    const bool carry_y = ys < g.y.raw;
    // cross = x*y' - carry_y * frac(x + x'), mod 1, in 2^-128 units.
    u128 cross = detail::mul_hi_lo(g.x.raw, h.y.raw);
    if (carry_y) cross -= static_cast<u128>(xs) << 64;
    const double z = g.z + h.z + std::ldexp(static_cast<double>(cross), -128);
    return {{xs}, {ys}, z};
}

inline HeisenbergPoint heis_reduce(const HeisenbergPoint& g) noexcept {
    return {g.x, g.y, detail::reduce_unit(g.z)};
}

// General reduction of real coordinates: right-multiply by
// (-floor x, -floor y, -l), which shifts z by -x*floor(y) before the final
// integer shift. If y rounds up to a whole turn on the grid, that extra
// lattice step costs z another -x.
inline HeisenbergPoint heis_reduce(const HeisenbergCoords& g) {
    const double ky = std::floor(g.y);
    double z = g.z - g.x * ky;
    const double xr = detail::reduce_unit(g.x - std::floor(g.x));
    const double yr = detail::reduce_unit(g.y - ky);
    const long double y_scaled = std::nearbyintl(static_cast<long double>(yr) * 0x1p64L);
    std::uint64_t y_raw = 0;
    if (y_scaled >= 0x1p64L) {
        z -= g.x;
    } else {
        y_raw = static_cast<std::uint64_t>(y_scaled);
    }
    return {frac_from_real(xr), {y_raw}, detail::reduce_unit(z)};
}

// Right action of a lattice element (j, k, l) on real coordinates.
inline HeisenbergCoords heis_lattice_shift(const HeisenbergCoords& g, std::int64_t j, std::int64_t k,
                                           std::int64_t l) noexcept {
    return {g.x + static_cast<double>(j), g.y + static_cast<double>(k),
            g.z + static_cast<double>(l) + g.x * static_cast<double>(k)};
}

// Exact group element of H(R) on the 2^-64 grid, modulo the normal subgroup
// generated by integer z shifts and 2^64-multiples of x and y. x and y are
// 64.64 fixed point (integer part kept mod 2^64), z is 0.128 fixed point.
// For grid values of x and y every product below is exact, so this quotient
// is a group and the action on H(R)/H(Z) factors through it.
struct HeisenbergElement {
    u128 x = 0;
    u128 y = 0;
    u128 z = 0;

    friend bool operator==(const HeisenbergElement&, const HeisenbergElement&) = default;
};

inline HeisenbergElement element_of(const HeisenbergPoint& g) noexcept {
    return {g.x.raw, g.y.raw, detail::z_to_fixed(g.z)};
}

inline HeisenbergElement operator*(const HeisenbergElement& g, const HeisenbergElement& h) noexcept {
    return {g.x + h.x, g.y + h.y, g.z + h.z + g.x * h.y};
}

// a^m = (m x, m y, m z + C(m,2) x y), valid for every integer m with |m| < 2^127.
inline HeisenbergElement heis_pow_element(const HeisenbergElement& a, i128 m) noexcept {
    const auto mu = static_cast<u128>(m);
    return {mu * a.x, mu * a.y, mu * a.z + detail::binom2_wrapped(m) * (a.x * a.y)};
}

// Canonical representative of g Gamma. Dropping the integer part k of y means
// right-multiplying by (0, -k, 0), which moves z by -x k.
inline HeisenbergPoint canonical(const HeisenbergElement& g) noexcept {
    const auto k = static_cast<std::uint64_t>(g.y >> 64);
    const auto x_lo = static_cast<std::uint64_t>(g.x);
    const u128 z = g.z - (static_cast<u128>(x_lo * k) << 64);
    return {{x_lo}, {static_cast<std::uint64_t>(g.y)}, detail::fixed_to_z(z)};
}

// Left action g . (h Gamma), in canonical form.
inline HeisenbergPoint heis_act(const HeisenbergElement& g, const HeisenbergPoint& h) noexcept {
    return canonical(g * element_of(h));
}

// a^m Gamma in canonical form, for any |m| < 2^127.
inline HeisenbergPoint heis_pow(const HeisenbergPoint& a, i128 m) noexcept {
    return canonical(heis_pow_element(element_of(a), m));
}

inline HeisenbergPoint heis_pow(const HeisenbergPoint& a, std::uint64_t m) noexcept {
    return heis_pow(a, static_cast<i128>(m));
}

// g(n) Gamma = a^{p(n)} g0 Gamma. The exponent is evaluated exactly because
// the z coordinate of a^m is not a function of m mod 2^64. The power stays an
// exact element until g0 is applied: the right factor of a product cannot be
// replaced by another coset representative.
inline HeisenbergPoint heis_orbit_point(const HeisenbergPoint& a, const HeisenbergPoint& g0,
                                        const IntPolynomial& p, std::uint64_t n) {
    return heis_act(heis_pow_element(element_of(a), eval_exact(p, n)), g0);
}

enum class HeisObservableKind { char_x, char_y, smooth_z };

struct HeisObservable {
    HeisObservableKind kind = HeisObservableKind::char_x;
    std::int64_t k = 1;
};

inline double sin2pi_bump(Frac64 t) noexcept {
    const double s = std::sin(std::numbers::pi * t.to_double());
    return s * s;
}

// char_x / char_y factor through the abelianization. smooth_z is
// e(z) sin^2(pi x) sin^2(pi y); the bump vanishes where the fundamental
// domain is glued, so the function is continuous on the quotient.
inline std::complex<double> observable(const HeisObservable& obs, const HeisenbergPoint& g) noexcept {
    switch (obs.kind) {
        case HeisObservableKind::char_x: return character(obs.k, g.x);
        case HeisObservableKind::char_y: return character(obs.k, g.y);
        case HeisObservableKind::smooth_z:
        default: return expi2pi(g.z) * (sin2pi_bump(g.x) * sin2pi_bump(g.y));
    }
}

}  // namespace mlab
