#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "mlab/symbolic.hpp"

namespace {

using namespace mlab;

const MoebiusTable& table() {
    static const MoebiusTable t = build_moebius_table(1'000'000);
    return t;
}

// Independent oracle: collect every window into a std::set.
std::uint64_t brute_factors(const SymbolSequence& a, std::uint64_t len) {
    std::set<std::string> words;
    for (std::uint64_t i = 0; i + len <= a.length(); ++i) {
        words.emplace(reinterpret_cast<const char*>(a.data() + i), len);
    }
    return words.size();
}

std::optional<std::uint64_t> brute_zero_run(const SymbolSequence& a, std::uint64_t len) {
    for (std::uint64_t i = 0; i + len <= a.length(); ++i) {
        bool ok = true;
        for (std::uint64_t j = 0; j < len && ok; ++j) ok = a[i + j] == 0;
        if (ok) return i;
    }
    return std::nullopt;
}

TEST(Counterexample, Prefixes) {
    const auto a2 = counterexample_sequence(2, table());
    ASSERT_EQ(a2.length(), 2U);
    EXPECT_EQ(a2[0], 0);
    EXPECT_EQ(a2[1], 1);

    const auto a10 = counterexample_sequence(10, table());
    const int expect[10] = {0, 1, 0, 0, -1, 0, 0, 0, 0, -1};
    for (int i = 0; i < 10; ++i) EXPECT_EQ(a10[i], expect[i]) << i;

    EXPECT_EQ(counterexample_sequence(26, table())[25], -1);
    EXPECT_THROW(counterexample_sequence(1'000'002ULL * 1'000'002ULL, table()), RangeError);
}

TEST(Counterexample, Invariant) {
    const std::uint64_t m = 10'000'000;
    const auto a = counterexample_sequence(m, table());
    std::uint64_t k = 0;
    for (std::uint64_t n = 0; n < m; ++n) {
        while ((k + 1) * (k + 1) <= n) ++k;
        if (k >= 1 && k * k == n) {
            ASSERT_EQ(a[n], table()[k]) << n;
        } else {
            ASSERT_EQ(a[n], 0) << n;
        }
    }
}

TEST(Counterexample, LazyPointAgreesWithPrefix) {
    const auto a = counterexample_sequence(100'000, table());
    const CounterexamplePoint lazy(table());
    for (std::uint64_t i = 0; i < a.length(); ++i) ASSERT_EQ(lazy.at(i), a[i]);
    EXPECT_EQ(lazy.at(static_cast<i128>(999'999) * 999'999), table()[999'999]);
    EXPECT_EQ(lazy.at(static_cast<i128>(1'000'000) * 1'000'000 + 1), 0);
    EXPECT_THROW(lazy.at(static_cast<i128>(1'000'001) * 1'000'001), RangeError);
    EXPECT_THROW(lazy.at(-1), RangeError);
}

TEST(ShiftOrbit, Values) {
    const auto a = counterexample_sequence(10'000, table());
    const IntPolynomial sq({0, 0, 1});
    EXPECT_EQ(shift_orbit_value(a, sq, 3), -1);
    EXPECT_EQ(shift_orbit_value(a, IntPolynomial(), 7), 0);
    for (std::uint64_t k = 1; k < 100; ++k) ASSERT_EQ(shift_orbit_value(a, sq, k), table()[k]);
    EXPECT_THROW(shift_orbit_value(a, sq, 100), RangeError);
    EXPECT_THROW(shift_orbit_value(a, IntPolynomial({-5, 1}), 1), RangeError);
}

TEST(Factors, Examples) {
    const SymbolSequence zeros(std::vector<std::int8_t>(1000, 0));
    for (std::uint64_t len : {1U, 7U, 1000U}) EXPECT_EQ(distinct_factors(zeros, len), 1U);

    const SymbolSequence alt({0, 1, 0, 1});
    EXPECT_EQ(distinct_factors(alt, 2), 2U);
    EXPECT_EQ(distinct_factors(alt, 4), 1U);
    EXPECT_THROW(distinct_factors(alt, 5), RangeError);
    EXPECT_THROW(distinct_factors(alt, 0), RangeError);
}

TEST(Factors, MatchesBruteForce) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> sym(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::int8_t> d(2000);
        // Low-entropy sequences exercise the repeat fast path.
        const int period = 1 + trial;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<std::int8_t>(i % period == 0 ? sym(rng) : 0);
        if (trial % 3 == 0) {
            for (auto& s : d) s = static_cast<std::int8_t>(sym(rng));
        }
        const SymbolSequence a(d);
        for (std::uint64_t len : {1U, 2U, 3U, 5U, 8U, 13U, 40U}) {
            ASSERT_EQ(distinct_factors(a, len), brute_factors(a, len)) << trial << " L=" << len;
        }
    }
    const auto cx = counterexample_sequence(20'000, table());
    for (std::uint64_t len : {1U, 4U, 16U, 64U, 128U}) ASSERT_EQ(distinct_factors(cx, len), brute_factors(cx, len));
}

TEST(Factors, MonotoneBoundedSubmultiplicative) {
    const auto a = counterexample_sequence(200'000, table());
    std::vector<std::uint64_t> c(65);
    for (std::uint64_t len = 1; len <= 64; ++len) {
        c[len] = distinct_factors(a, len);
        ASSERT_LE(c[len], a.length() - len + 1);
        if (len <= 30) {
            ASSERT_LE(static_cast<double>(c[len]), std::pow(3.0, static_cast<double>(len)));
        }
        if (len > 1) {
            ASSERT_GE(c[len], c[len - 1]);
        }
    }
    for (std::uint64_t l1 = 1; l1 <= 32; ++l1) {
        for (std::uint64_t l2 = 1; l1 + l2 <= 64; ++l2) ASSERT_LE(c[l1 + l2], c[l1] * c[l2]);
    }
}

TEST(ZeroRun, Examples) {
    const auto a = counterexample_sequence(10'000, table());
    EXPECT_EQ(first_zero_run(a, 1), 0U);
    EXPECT_EQ(first_zero_run(a, 2), 2U);
    EXPECT_EQ(first_zero_run(a, 50), brute_zero_run(a, 50));
    EXPECT_EQ(first_zero_run(a, 50), 50U);  // 64 = 8^2 and 81 = 9^2 carry mu = 0
    for (std::uint64_t len = 1; len < 300; len += 7) ASSERT_EQ(first_zero_run(a, len), brute_zero_run(a, len));
    const SymbolSequence ones(std::vector<std::int8_t>(10, 1));
    EXPECT_FALSE(first_zero_run(ones, 1).has_value());
}

TEST(ZeroRun, QuadraticGrowth) {
    // The gap after k^2 is 2k, so a run of length L starts before about (L/2 + 1)^2.
    const auto a = counterexample_sequence(4'000'000, table());
    for (std::uint64_t len : {16U, 64U, 256U, 1024U}) {
        const auto pos = first_zero_run(a, len);
        ASSERT_TRUE(pos.has_value());
        EXPECT_LE(*pos, (len / 2 + 1) * (len / 2 + 1));
    }
}

TEST(Entropy, Reports) {
    const SymbolSequence zeros(std::vector<std::int8_t>(4096, 0));
    const auto r0 = entropy_growth_report(zeros, {16, 32, 64, 128});
    for (const auto& row : r0.rows) EXPECT_EQ(row.count, 1U);
    EXPECT_EQ(r0.slope, 0.0);

    std::vector<std::int8_t> per(4096);
    const std::int8_t pattern[5] = {-1, 0, 1, 1, 0};
    for (std::size_t i = 0; i < per.size(); ++i) per[i] = pattern[i % 5];
    const auto rp = entropy_growth_report(SymbolSequence(per), {16, 32, 64, 128});
    for (const auto& row : rp.rows) EXPECT_LE(row.count, 5U);
    EXPECT_NEAR(rp.slope, 0.0, 1e-12);

    EXPECT_THROW(entropy_growth_report(zeros, {16, 32}), DegenerateFitError);
    EXPECT_THROW(entropy_growth_report(zeros, {16, 32, 4000}), RangeError);

    const auto cx = counterexample_sequence(1'000'000, table());
    const auto rc = entropy_growth_report(cx, {16, 32, 64, 128, 256}, 2);
    for (std::size_t i = 1; i < rc.rows.size(); ++i) EXPECT_GE(rc.rows[i].count, rc.rows[i - 1].count);
    EXPECT_GT(rc.slope, 0.5);
    EXPECT_LT(rc.slope, 2.2);
}

TEST(Dump, OneBytePerSymbol) {
    const auto path = std::filesystem::temp_directory_path() / "mlab_seq_dump.txt";
    dump_sequence(counterexample_sequence(10, table()), path.string());
    std::ifstream is(path, std::ios::binary);
    const std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    EXPECT_EQ(s, "0+00-0000-");
    std::filesystem::remove(path);
}

}  // namespace
