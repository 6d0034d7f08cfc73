// polynomial.hpp
// Integer polynomials p(n) = c_0 + c_1 n + ... + c_d n^d used as orbit times.
//
// Three evaluation modes:
//   eval_exact     signed 128-bit, checked (throws OverflowError)
//   eval_wrapped   p(n) mod 2^64, the currency of the torus systems
//   PolyStream     successive eval_wrapped values by forward differences

#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlab/error.hpp"

namespace mlab {

using i128 = __int128;
using u128 = unsigned __int128;

class IntPolynomial {
public:
    IntPolynomial() : coeffs_{0} {}
    explicit IntPolynomial(std::vector<std::int64_t> coeffs) : coeffs_(std::move(coeffs)) { normalize(); }
    IntPolynomial(std::initializer_list<std::int64_t> coeffs) : coeffs_(coeffs) { normalize(); }

    static IntPolynomial monomial(unsigned degree, std::int64_t c = 1) {
        std::vector<std::int64_t> v(degree + 1, 0);
        v[degree] = c;
        return IntPolynomial(std::move(v));
    }

    // Index of the last nonzero coefficient; 0 for constants (including zero).
    unsigned degree() const noexcept { return static_cast<unsigned>(coeffs_.size() - 1); }
    bool is_zero() const noexcept { return coeffs_.size() == 1 && coeffs_[0] == 0; }
    std::span<const std::int64_t> coeffs() const noexcept { return coeffs_; }
    std::int64_t leading() const noexcept { return coeffs_.back(); }

    // Comma-separated, low to high: "0,0,1" is n^2.
    std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < coeffs_.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(coeffs_[i]);
        }
        return s;
    }

    friend bool operator==(const IntPolynomial&, const IntPolynomial&) = default;

private:
    void normalize() {
        if (coeffs_.empty()) coeffs_.push_back(0);
        while (coeffs_.size() > 1 && coeffs_.back() == 0) coeffs_.pop_back();
    }

    std::vector<std::int64_t> coeffs_;
};

// Parses the CLI syntax "c0,c1,...,cd" (decimal, optional sign, no spaces).
inline IntPolynomial parse_polynomial(std::string_view text) {
    if (text.empty()) throw ConfigError("empty polynomial");
    std::vector<std::int64_t> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = text.find(',', pos);
        const auto tok = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        if (tok.empty() || tok.find_first_of(" \t") != std::string_view::npos) throw ConfigError("polynomial '" + std::string(text) + "': empty coefficient");
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(std::string(tok), &used, 10);
        } catch (const std::exception&) {
            throw ConfigError("polynomial '" + std::string(text) + "': bad coefficient '" + std::string(tok) + "'");
        }
        if (used != tok.size()) {
            throw ConfigError("polynomial '" + std::string(text) + "': bad coefficient '" + std::string(tok) + "'");
        }
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return IntPolynomial(std::move(out));
}

inline std::string to_string(i128 v) {
    if (v == 0) return "0";
    const bool neg = v < 0;
    u128 u = neg ? u128(0) - static_cast<u128>(v) : static_cast<u128>(v);
    std::string s;
    while (u) {
        s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
        u /= 10;
    }
    return neg ? "-" + s : s;
}

// Horner with overflow checks on every multiply and add.
inline i128 eval_exact(const IntPolynomial& p, std::uint64_t n) {
    const auto c = p.coeffs();
    const i128 x = static_cast<i128>(n);
    i128 acc = c.back();
    for (std::size_t i = c.size() - 1; i-- > 0;) {
        if (__builtin_mul_overflow(acc, x, &acc) || __builtin_add_overflow(acc, static_cast<i128>(c[i]), &acc)) {
            throw OverflowError("p(" + std::to_string(n) + ") with p = " + p.to_string() +
                                " overflows 128-bit arithmetic");
        }
    }
    return acc;
}

// p(n) mod 2^64.
inline std::uint64_t eval_wrapped(const IntPolynomial& p, std::uint64_t n) noexcept {
    const auto c = p.coeffs();
    std::uint64_t acc = static_cast<std::uint64_t>(c.back());
    for (std::size_t i = c.size() - 1; i-- > 0;) acc = acc * n + static_cast<std::uint64_t>(c[i]);
    return acc;
}

// Emits eval_wrapped(p, start), eval_wrapped(p, start + 1), ... using a
// forward-difference table of depth deg(p): deg(p) wrapping additions per step.
class PolyStream {
public:
    PolyStream(const IntPolynomial& p, std::uint64_t start) : diffs_(p.degree() + 1) {
        const std::size_t d = p.degree();
        for (std::size_t k = 0; k <= d; ++k) diffs_[k] = eval_wrapped(p, start + k);
        // In-place forward differences: diffs_[k] becomes Delta^k p(start).
        for (std::size_t level = 1; level <= d; ++level) {
            for (std::size_t k = d; k >= level; --k) diffs_[k] -= diffs_[k - 1];
        }
    }

    std::uint64_t value() const noexcept { return diffs_[0]; }

    std::uint64_t next() noexcept {
        const std::uint64_t out = diffs_[0];
        for (std::size_t k = 0; k + 1 < diffs_.size(); ++k) diffs_[k] += diffs_[k + 1];
        return out;
    }

    std::size_t depth() const noexcept { return diffs_.size() - 1; }

private:
    std::vector<std::uint64_t> diffs_;
};

inline PolyStream stream_evaluator(const IntPolynomial& p, std::uint64_t n_start) { return PolyStream(p, n_start); }

// True iff p(n) >= 0 for every 1 <= n <= N.
//
// Beyond the Cauchy root bound R = 1 + max|c_i / c_d| the sign of p equals the
// sign of c_d, so only [1, min(N, R)] is scanned directly.
inline bool nonneg_on_range(const IntPolynomial& p, std::uint64_t n_max) {
    if (n_max == 0) throw DomainError("nonneg_on_range: N must be positive");
    const auto c = p.coeffs();
    if (p.degree() == 0) return c[0] >= 0;
    std::uint64_t scan_to = n_max;
    {
        const double lead = static_cast<double>(c.back() < 0 ? -c.back() : c.back());
        double ratio = 0.0;
        for (std::size_t i = 0; i + 1 < c.size(); ++i) {
            ratio = std::max(ratio, static_cast<double>(c[i] < 0 ? -c[i] : c[i]) / lead);
        }
        const double bound = 2.0 + ratio;
        if (bound < static_cast<double>(n_max)) {
            scan_to = static_cast<std::uint64_t>(bound);
            if (c.back() < 0) return false;
        }
    }
    for (std::uint64_t n = 1; n <= scan_to; ++n) {
        if (eval_exact(p, n) < 0) return false;
    }
    // Make sure the whole range is evaluable, as callers rely on that.
    (void)eval_exact(p, n_max);
    return true;
}

}  // namespace mlab
