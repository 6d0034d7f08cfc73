// symbolic.hpp
// Symbol sequences over {-1, 0, +1}: the counterexample point
//   a_n = mu(k) if n = k^2 with k >= 1, else 0,
// coordinate observables along polynomial shift orbits, and factor counting.
//
// Metric on {-1,0,1}^N0: d(x, y) = 2^-min{i : x_i != y_i}. Under it, two
// orbit segments of length n are (n, 2^-k)-distinguishable exactly when the
// length-(n+k) words starting at them differ, so the maximal number of
// distinguishable segments equals the number of distinct length-(n+k)
// factors of the sequence.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <tuple>
#include <utility>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlab/error.hpp"
#include "mlab/moebius.hpp"
#include "mlab/parallel.hpp"
#include "mlab/polynomial.hpp"

namespace mlab {

class SymbolSequence {
public:
    SymbolSequence() = default;
    SymbolSequence(std::vector<std::int8_t> data, std::vector<std::int8_t> alphabet = {-1, 0, 1})
        : alphabet_(std::move(alphabet)), data_(std::move(data)) {
        for (auto s : data_) {
            if (!in_alphabet(s)) throw DomainError("symbol " + std::to_string(s) + " not in alphabet");
        }
    }

    std::uint64_t length() const noexcept { return data_.size(); }
    int operator[](std::uint64_t i) const noexcept { return data_[i]; }
    const std::int8_t* data() const noexcept { return data_.data(); }
    const std::vector<std::int8_t>& alphabet() const noexcept { return alphabet_; }

    int at(i128 index) const {
        if (index < 0 || index >= static_cast<i128>(data_.size())) {
            throw RangeError("symbol index " + to_string(index) + " outside the materialized prefix of length " +
                             std::to_string(data_.size()));
        }
        return data_[static_cast<std::size_t>(index)];
    }

    bool in_alphabet(std::int8_t s) const noexcept {
        for (auto a : alphabet_) {
            if (a == s) return true;
        }
        return false;
    }

private:
    std::vector<std::int8_t> alphabet_{-1, 0, 1};
    std::vector<std::int8_t> data_;
};

inline std::uint64_t isqrt(std::uint64_t n) noexcept {
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

inline u128 isqrt(u128 n) noexcept {
    if (n < (u128{1} << 64)) return isqrt(static_cast<std::uint64_t>(n));
    auto r = static_cast<u128>(std::sqrt(static_cast<long double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

// Materialized prefix a_0 .. a_{M-1}. a_0 = 0 because 0 is not k^2 for k >= 1.
inline SymbolSequence counterexample_sequence(std::uint64_t length, const MoebiusTable& table) {
    if (length == 0) throw DomainError("counterexample_sequence: length must be positive");
    const std::uint64_t k_max = isqrt(length - 1);
    if (k_max > table.limit()) {
        throw RangeError("counterexample_sequence: table limit " + std::to_string(table.limit()) +
                         " below sqrt(M-1) = " + std::to_string(k_max));
    }
    std::vector<std::int8_t> data(length, 0);
    for (std::uint64_t k = 1; k <= k_max; ++k) data[k * k] = table.values()[k];
    return SymbolSequence(std::move(data));
}

// The same point, evaluated on demand: a_i is read from the Möbius table at
// sqrt(i) when i is a perfect square. Covers every index below (limit+1)^2
// without materializing them.
class CounterexamplePoint {
public:
    explicit CounterexamplePoint(const MoebiusTable& table) : table_(&table) {}

    i128 length() const noexcept {
        const auto n = static_cast<i128>(table_->limit()) + 1;
        return n * n;
    }

    int at(i128 index) const {
        if (index < 0 || index >= length()) {
            throw RangeError("counterexample index " + to_string(index) + " needs a Möbius table beyond " +
                             std::to_string(table_->limit()));
        }
        const u128 u = static_cast<u128>(index);
        const u128 k = isqrt(u);
        if (k == 0 || k * k != u) return 0;
        return (*table_)[static_cast<std::uint64_t>(k)];
    }

private:
    const MoebiusTable* table_;
};

// f(T^{p(n)} a) with f(x) = x_0, i.e. a_{p(n)}.
template <class Sequence>
int shift_orbit_value(const Sequence& a, const IntPolynomial& p, std::uint64_t n) {
    return a.at(eval_exact(p, n));
}

namespace detail {

inline constexpr std::uint64_t kHashMod = (std::uint64_t{1} << 61) - 1;
inline constexpr std::uint64_t kHashBase = 0x1b873593ULL;

inline std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) noexcept {
    const u128 prod = static_cast<u128>(a) * b;
    std::uint64_t r = static_cast<std::uint64_t>(prod & kHashMod) + static_cast<std::uint64_t>(prod >> 61);
    if (r >= kHashMod) r -= kHashMod;
    return r;
}

inline std::uint64_t addmod61(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t r = a + b;
    if (r >= kHashMod) r -= kHashMod;
    return r;
}

inline std::uint64_t symbol_code(std::int8_t s) noexcept { return static_cast<std::uint64_t>(s + 2); }

}  // namespace detail

// Number of distinct words a_i .. a_{i+L-1}, 0 <= i <= M - L.
//
// Candidates are bucketed by a rolling hash mod 2^61-1 and every bucket hit
// is confirmed with a full comparison, so hash collisions never merge words.
// Fast path: if window i-1 equals the earlier window r, then window i equals
// window r+1 iff their last symbols agree.
inline std::uint64_t distinct_factors(const SymbolSequence& a, std::uint64_t word_len) {
    const std::uint64_t m = a.length();
    if (word_len == 0 || word_len > m) {
        throw RangeError("distinct_factors: L = " + std::to_string(word_len) + " outside [1, " +
                         std::to_string(m) + "]");
    }
    using namespace detail;
    const std::int8_t* d = a.data();

    std::uint64_t top = 1;  // base^(L-1)
    for (std::uint64_t i = 1; i < word_len; ++i) top = mulmod61(top, kHashBase);

    std::uint64_t h = 0;
    for (std::uint64_t i = 0; i < word_len; ++i) h = addmod61(mulmod61(h, kHashBase), symbol_code(d[i]));

    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> buckets;
    std::uint64_t count = 0;
    std::optional<std::uint64_t> prev_match;

    const std::uint64_t windows = m - word_len + 1;
    for (std::uint64_t i = 0; i < windows; ++i) {
        if (i > 0) {
            const std::uint64_t out = mulmod61(symbol_code(d[i - 1]), top);
            h = addmod61(h, kHashMod - out);
            h = addmod61(mulmod61(h, kHashBase), symbol_code(d[i + word_len - 1]));
        }
        if (prev_match && d[i + word_len - 1] == d[*prev_match + word_len]) {
            prev_match = *prev_match + 1;
            continue;
        }
        auto& reps = buckets[h];
        prev_match.reset();
        for (auto r : reps) {
            if (std::memcmp(d + r, d + i, word_len) == 0) {
                prev_match = r;
                break;
            }
        }
        if (!prev_match) {
            reps.push_back(i);
            ++count;
        }
    }
    return count;
}

// Smallest i with a_i = ... = a_{i+runlen-1} = 0, if the prefix has one.
inline std::optional<std::uint64_t> first_zero_run(const SymbolSequence& a, std::uint64_t runlen) {
    if (runlen == 0 || runlen > a.length()) {
        throw RangeError("first_zero_run: run length " + std::to_string(runlen) + " outside [1, " +
                         std::to_string(a.length()) + "]");
    }
    std::uint64_t run = 0;
    for (std::uint64_t i = 0; i < a.length(); ++i) {
        run = a[i] == 0 ? run + 1 : 0;
        if (run == runlen) return i + 1 - runlen;
    }
    return std::nullopt;
}

struct EntropyRow {
    std::uint64_t length = 0;
    std::uint64_t count = 0;
};

struct EntropyReport {
    std::vector<EntropyRow> rows;
    double slope = 0.0;      // least-squares d log(count) / d log(L)
    double intercept = 0.0;  // log-count at L = 1 of the fitted line
};

// Ordinary least squares y = intercept + slope * x.
inline std::pair<double, double> least_squares_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw DegenerateFitError("least squares: all abscissae equal");
    const double slope = sxy / sxx;
    return {my - slope * mx, slope};
}

inline EntropyReport entropy_growth_report(const SymbolSequence& a, const std::vector<std::uint64_t>& lengths,
                                           unsigned threads = 1) {
    if (lengths.size() < 3) throw DegenerateFitError("entropy_growth_report needs at least 3 word lengths");
    for (auto len : lengths) {
        if (len == 0 || len > a.length() / 2) {
            throw RangeError("entropy_growth_report: L = " + std::to_string(len) + " outside [1, M/2 = " +
                             std::to_string(a.length() / 2) + "]");
        }
    }
    EntropyReport report;
    report.rows.resize(lengths.size());
    parallel_for(lengths.size(), threads, [&](std::size_t i) {
        report.rows[i] = {lengths[i], distinct_factors(a, lengths[i])};
    });
    std::vector<double> xs, ys;
    for (const auto& r : report.rows) {
        xs.push_back(std::log(static_cast<double>(r.length)));
        ys.push_back(std::log(static_cast<double>(r.count)));
    }
    std::tie(report.intercept, report.slope) = least_squares_line(xs, ys);
    return report;
}

// One byte per symbol: '-' for -1, '0', '+' for +1. No separators.
inline void dump_sequence(const SymbolSequence& a, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open sequence dump: " + path);
    std::string buf(a.length(), '0');
    for (std::uint64_t i = 0; i < a.length(); ++i) buf[i] = a[i] < 0 ? '-' : (a[i] > 0 ? '+' : '0');
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw Error("failed writing sequence dump: " + path);
}

}  // namespace mlab
