// systems.hpp
// Text specs for systems and observables, and the value sources they build.
//
//   SYSTEM  := "rotation:alpha=" ANGLE
//            | "heis:a=" ANGLE "," ANGLE "," ANGLE
//            | "subshift:counterexample"
//   ANGLE   := "golden" | "sqrt2" | "sqrt3" | "pi" | "e" | DECIMAL in [0,1)
//   OBS     := "char:" K            (rotation)
//            | "char_x:" K | "char_y:" K | "smooth_z"   (heis)
//            | "x0"                 (subshift, the coordinate at 0)
//            | "const"              (any system, the constant 1)
//
// All keywords are case-sensitive. Named angles are the fractional parts of
// the named constants, rounded to the 2^-64 grid. Rotation angles are then
// moved to the nearest odd grid point so that they have full order.

#pragma once

#include <charconv>
#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mlab/averages.hpp"
#include "mlab/error.hpp"
#include "mlab/symbolic.hpp"
#include "mlab/torus.hpp"

namespace mlab {

enum class SystemKind { rotation, heis, subshift };

struct SystemSpec {
    SystemKind kind = SystemKind::rotation;
    Frac64 alpha{};                 // rotation
    HeisenbergPoint heis_a{};       // heis
    std::string text;
};

enum class ObservableKind { constant, character, heis, coordinate0 };

struct ObservableSpec {
    ObservableKind kind = ObservableKind::constant;
    std::int64_t k = 1;
    HeisObservable heis{};
    std::string text;
};

namespace detail {

inline Frac64 parse_angle(std::string_view s, std::string_view context) {
    if (s == "golden") return angles::golden;
    if (s == "sqrt2") return angles::sqrt2;
    if (s == "sqrt3") return angles::sqrt3;
    if (s == "pi") return angles::pi;
    if (s == "e") return angles::e;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !(v >= 0.0 && v < 1.0)) {
        throw ConfigError(std::string(context) + ": angle '" + std::string(s) +
                          "' is neither a named constant nor a decimal in [0,1)");
    }
    return frac_from_real(v);
}

inline std::int64_t parse_frequency(std::string_view s, std::string_view context) {
    std::int64_t k = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
    if (ec != std::errc() || ptr != s.data() + s.size() || k == 0 || k > (std::int64_t{1} << 31) ||
        k < -(std::int64_t{1} << 31)) {
        throw ConfigError(std::string(context) + ": frequency '" + std::string(s) +
                          "' must be a nonzero integer with |k| <= 2^31");
    }
    return k;
}

}  // namespace detail

inline SystemSpec parse_system(std::string_view text) {
    SystemSpec spec;
    spec.text = std::string(text);
    const std::string ctx = "system '" + spec.text + "'";
    if (text.starts_with("rotation:alpha=")) {
        spec.kind = SystemKind::rotation;
        spec.alpha = odd_snap(detail::parse_angle(text.substr(15), ctx));
        return spec;
    }
    if (text.starts_with("heis:a=")) {
        spec.kind = SystemKind::heis;
        const auto list = text.substr(7);
        const auto c1 = list.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : list.find(',', c1 + 1);
        if (c2 == std::string_view::npos || list.find(',', c2 + 1) != std::string_view::npos) {
            throw ConfigError(ctx + ": heis needs exactly three coordinates a=X,Y,Z");
        }
        spec.heis_a.x = detail::parse_angle(list.substr(0, c1), ctx);
        spec.heis_a.y = detail::parse_angle(list.substr(c1 + 1, c2 - c1 - 1), ctx);
        spec.heis_a.z = detail::parse_angle(list.substr(c2 + 1), ctx).to_double();
        if (spec.heis_a.z >= 1.0) spec.heis_a.z = 0.0;
        return spec;
    }
    if (text == "subshift:counterexample") {
        spec.kind = SystemKind::subshift;
        return spec;
    }
    throw ConfigError(ctx + ": expected rotation:alpha=..., heis:a=..., or subshift:counterexample");
}

inline ObservableSpec parse_observable(std::string_view text, SystemKind system) {
    ObservableSpec obs;
    obs.text = std::string(text);
    const std::string ctx = "observable '" + obs.text + "'";
    if (text == "const") {
        obs.kind = ObservableKind::constant;
        return obs;
    }
    switch (system) {
        case SystemKind::rotation:
            if (text.starts_with("char:")) {
                obs.kind = ObservableKind::character;
                obs.k = detail::parse_frequency(text.substr(5), ctx);
                return obs;
            }
            break;
        case SystemKind::heis:
            obs.kind = ObservableKind::heis;
            if (text.starts_with("char_x:")) {
                obs.heis = {HeisObservableKind::char_x, detail::parse_frequency(text.substr(7), ctx)};
                return obs;
            }
            if (text.starts_with("char_y:")) {
                obs.heis = {HeisObservableKind::char_y, detail::parse_frequency(text.substr(7), ctx)};
                return obs;
            }
            if (text == "smooth_z") {
                obs.heis = {HeisObservableKind::smooth_z, 0};
                return obs;
            }
            break;
        case SystemKind::subshift:
            if (text == "x0") {
                obs.kind = ObservableKind::coordinate0;
                return obs;
            }
            break;
    }
    throw ConfigError(ctx + " does not apply to this system");
}

inline std::string default_observable(SystemKind system) {
    switch (system) {
        case SystemKind::rotation: return "char:1";
        case SystemKind::heis: return "smooth_z";
        case SystemKind::subshift:
        default: return "x0";
    }
}

struct ConstantSource {
    std::uint64_t max_index() const noexcept { return std::numeric_limits<std::uint64_t>::max(); }
    void fill(std::uint64_t, std::span<cplx> out) const {
        for (auto& v : out) v = 1.0;
    }
};

using OrbitSource =
    std::variant<ConstantSource, RotationCharacterSource, HeisenbergSource, ShiftSource<CounterexamplePoint>>;

// v(n) = f(T^{p(n)} x) for the configured system, started at x = 0
// (rotation), the identity coset (heis), or the counterexample point.
// The counterexample source keeps a pointer to `point`.
inline OrbitSource make_orbit_source(const SystemSpec& sys, const ObservableSpec& obs, const IntPolynomial& p,
                                     const CounterexamplePoint* point) {
    if (obs.kind == ObservableKind::constant) return ConstantSource{};
    switch (sys.kind) {
        case SystemKind::rotation: return RotationCharacterSource{{sys.alpha, sys.text}, {0}, p, obs.k};
        case SystemKind::heis: return HeisenbergSource{sys.heis_a, heis_identity(), p, obs.heis};
        case SystemKind::subshift:
        default:
            if (point == nullptr) throw Error("subshift source needs a Möbius table");
            return ShiftSource<CounterexamplePoint>{point, p};
    }
}

inline cplx value_at(const OrbitSource& src, std::uint64_t n) {
    cplx v;
    std::visit([&](const auto& s) { s.fill(n, std::span<cplx>(&v, 1)); }, src);
    return v;
}

}  // namespace mlab
