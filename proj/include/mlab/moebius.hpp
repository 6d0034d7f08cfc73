// moebius.hpp
// Sieved Möbius function with Mertens prefix sums.
//
// Storage: values are int8 and prefix sums int64, so a finished table costs
// 9 bytes per entry. Construction additionally needs one bit per entry for
// the composite marks plus 4 bytes per prime found (about N/ln N primes).
//
// Sieve: linear (Euler) sieve, O(N_max) time. Every composite is crossed off
// exactly once, by its smallest prime factor.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mlab/error.hpp"

namespace mlab {

inline constexpr std::uint64_t kMaxSieveLimit = std::uint64_t{1} << 31;
inline constexpr std::uint64_t kDefaultMemoryBudget = std::uint64_t{4} << 30;  // 4 GiB
inline constexpr std::size_t kTableBytesPerEntry = sizeof(std::int8_t) + sizeof(std::int64_t);

// Immutable after construction; share it by const reference (or shared_ptr)
// across readers.
class MoebiusTable {
public:
    MoebiusTable() = default;

    std::uint64_t limit() const noexcept { return limit_; }

    // mu(n) for 1 <= n <= limit. Unchecked.
    int operator[](std::uint64_t n) const noexcept { return values_[n]; }

    int at(std::uint64_t n) const {
        if (n == 0 || n > limit_) {
            throw RangeError("moebius index " + std::to_string(n) + " outside [1, " +
                             std::to_string(limit_) + "]");
        }
        return values_[n];
    }

    // Index 0 is a zero sentinel so that values()[n] == mu(n).
    std::span<const std::int8_t> values() const noexcept { return values_; }
    std::span<const std::int64_t> mertens_prefix() const noexcept { return mertens_; }

    friend MoebiusTable build_moebius_table(std::uint64_t, std::uint64_t);
    friend MoebiusTable load_moebius_table(const std::string&, std::uint64_t);

private:
    void fill_prefix() {
        mertens_.assign(limit_ + 1, 0);
        std::int64_t acc = 0;
        for (std::uint64_t n = 1; n <= limit_; ++n) {
            acc += values_[n];
            mertens_[n] = acc;
        }
    }

    std::uint64_t limit_ = 0;
    std::vector<std::int8_t> values_;
    std::vector<std::int64_t> mertens_;
};

inline std::uint64_t sieve_memory_estimate(std::uint64_t n_max) {
    return (n_max + 1) * kTableBytesPerEntry + n_max / 8 + 4 * (n_max / 10 + 16);
}

inline MoebiusTable build_moebius_table(std::uint64_t n_max,
                                        std::uint64_t memory_budget = kDefaultMemoryBudget) {
    if (n_max == 0) throw DomainError("sieve limit must be positive");
    if (n_max > kMaxSieveLimit) {
        throw LimitExceededError("sieve limit " + std::to_string(n_max) + " exceeds 2^31");
    }
    if (sieve_memory_estimate(n_max) > memory_budget) {
        throw LimitExceededError("sieve limit " + std::to_string(n_max) + " needs about " +
                                 std::to_string(sieve_memory_estimate(n_max) >> 20) +
                                 " MiB, over the configured budget of " +
                                 std::to_string(memory_budget >> 20) + " MiB");
    }

    MoebiusTable t;
    t.limit_ = n_max;
    t.values_.assign(n_max + 1, 0);
    t.values_[1] = 1;

    std::vector<bool> composite(n_max + 1, false);
    std::vector<std::uint32_t> primes;
    for (std::uint64_t i = 2; i <= n_max; ++i) {
        if (!composite[i]) {
            primes.push_back(static_cast<std::uint32_t>(i));
            t.values_[i] = -1;
        }
        for (std::uint32_t p : primes) {
            const std::uint64_t m = i * p;
            if (m > n_max) break;
            composite[m] = true;
            if (i % p == 0) {
                t.values_[m] = 0;
                break;
            }
            t.values_[m] = static_cast<std::int8_t>(-t.values_[i]);
        }
    }
    t.fill_prefix();
    return t;
}

// M(N) = sum_{n <= N} mu(n).
inline std::int64_t mertens(const MoebiusTable& table, std::uint64_t n) {
    if (n == 0 || n > table.limit()) {
        throw RangeError("mertens: N = " + std::to_string(n) + " outside [1, " +
                         std::to_string(table.limit()) + "]");
    }
    return table.mertens_prefix()[n];
}

// (1/N) * #{n <= N : n squarefree}.
inline double squarefree_density(const MoebiusTable& table, std::uint64_t n) {
    if (n == 0 || n > table.limit()) {
        throw RangeError("squarefree_density: N = " + std::to_string(n) + " outside [1, " +
                         std::to_string(table.limit()) + "]");
    }
    const auto v = table.values();
    const auto count = std::count_if(v.begin() + 1, v.begin() + static_cast<std::ptrdiff_t>(n) + 1,
                                     [](std::int8_t x) { return x != 0; });
    return static_cast<double>(count) / static_cast<double>(n);
}

// Full factorization by trial division. Test oracle, independent of the sieve.
inline int mobius_oracle(std::uint64_t n) {
    if (n == 0) throw DomainError("mobius_oracle: n must be positive");
    int sign = 1;
    for (std::uint64_t d = 2; d * d <= n; ++d) {
        if (n % d != 0) continue;
        n /= d;
        if (n % d == 0) return 0;
        sign = -sign;
    }
    if (n > 1) sign = -sign;
    return sign;
}

// sum_{d | n} mu(d), via the oracle. Equals [n == 1].
inline int divisor_mu_sum(std::uint64_t n) {
    if (n == 0) throw DomainError("divisor_mu_sum: n must be positive");
    int sum = 0;
    for (std::uint64_t d = 1; d * d <= n; ++d) {
        if (n % d != 0) continue;
        sum += mobius_oracle(d);
        if (d != n / d) sum += mobius_oracle(n / d);
    }
    return sum;
}

// Cache file layout (little-endian):
//   bytes 0..3   magic "MOBT"
//   bytes 4..7   version (u32) = 1
//   bytes 8..15  N_max (u64)
//   then N_max int8 values, mu(1) .. mu(N_max)
inline constexpr std::array<char, 4> kCacheMagic{'M', 'O', 'B', 'T'};
inline constexpr std::uint32_t kCacheVersion = 1;

namespace detail {

template <class UInt>
void put_le(std::ostream& os, UInt v) {
    std::array<char, sizeof(UInt)> buf{};
    for (std::size_t i = 0; i < sizeof(UInt); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(buf.data(), buf.size());
}

template <class UInt>
UInt get_le(std::istream& is) {
    std::array<unsigned char, sizeof(UInt)> buf{};
    is.read(reinterpret_cast<char*>(buf.data()), buf.size());
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(buf[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline void save_moebius_table(const MoebiusTable& table, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open sieve cache for writing: " + path);
    os.write(kCacheMagic.data(), kCacheMagic.size());
    detail::put_le<std::uint32_t>(os, kCacheVersion);
    detail::put_le<std::uint64_t>(os, table.limit());
    const auto v = table.values();
    os.write(reinterpret_cast<const char*>(v.data() + 1), static_cast<std::streamsize>(table.limit()));
    if (!os) throw Error("failed writing sieve cache: " + path);
}

inline MoebiusTable load_moebius_table(const std::string& path,
                                       std::uint64_t memory_budget = kDefaultMemoryBudget) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open sieve cache: " + path);
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kCacheMagic) throw Error("not a sieve cache (bad magic): " + path);
    const auto version = detail::get_le<std::uint32_t>(is);
    if (version != kCacheVersion) {
        throw Error("unsupported sieve cache version " + std::to_string(version));
    }
    const auto n_max = detail::get_le<std::uint64_t>(is);
    if (!is || n_max == 0 || n_max > kMaxSieveLimit) throw Error("corrupt sieve cache header: " + path);
    if (sieve_memory_estimate(n_max) > memory_budget) {
        throw LimitExceededError("cached table of size " + std::to_string(n_max) +
                                 " exceeds the memory budget");
    }

    MoebiusTable t;
    t.limit_ = n_max;
    t.values_.assign(n_max + 1, 0);
    is.read(reinterpret_cast<char*>(t.values_.data() + 1), static_cast<std::streamsize>(n_max));
    if (!is) throw Error("truncated sieve cache: " + path);
    for (std::uint64_t n = 1; n <= n_max; ++n) {
        if (t.values_[n] < -1 || t.values_[n] > 1) throw Error("corrupt sieve cache entry");
    }
    t.fill_prefix();
    return t;
}

}  // namespace mlab
