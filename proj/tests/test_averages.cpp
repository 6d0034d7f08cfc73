#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mlab/averages.hpp"

namespace {

using namespace mlab;

const MoebiusTable& table() {
    static const MoebiusTable t = build_moebius_table(10'000'000);
    return t;
}

constexpr double kSixOverPiSq = 6.0 / (std::numbers::pi * std::numbers::pi);

// Independent evaluation of |(1/N) sum mu(n) e(p(n) theta)| in long double
// from the exact integer p(n).
long double dense_value(const IntPolynomial& p, std::uint64_t n_max, long double theta) {
    long double re = 0, im = 0;
    for (std::uint64_t n = 1; n <= n_max; ++n) {
        const int mu = mobius_oracle(n);
        if (mu == 0) continue;
        const long double phase = static_cast<long double>(eval_exact(p, n)) * theta;
        const long double a = 2 * std::numbers::pi_v<long double> * (phase - std::floor(phase));
        re += mu * std::cos(a);
        im += mu * std::sin(a);
    }
    return std::sqrt(re * re + im * im) / static_cast<long double>(n_max);
}

long double dense_scan(const IntPolynomial& p, std::uint64_t n_max, std::uint64_t points) {
    long double best = 0;
    for (std::uint64_t i = 0; i < points; ++i) {
        best = std::max(best, dense_value(p, n_max, static_cast<long double>(i) / points));
    }
    return best;
}

TEST(Summation, CompensatedAndPairwise) {
    CompensatedSum s;
    s.add({1e16, 0});
    for (int i = 0; i < 1000; ++i) s.add({1.0, -1.0});
    s.add({-1e16, 0});
    EXPECT_EQ(s.value(), cplx(1000.0, -1000.0));
    const std::vector<cplx> xs{{1, 1}, {2, 0}, {3, -1}};
    EXPECT_EQ(pairwise_sum(xs), cplx(6, 0));
    EXPECT_EQ(pairwise_sum({}), cplx(0, 0));
}

TEST(WeightedAverage, ConstantValues) {
    const auto ones = make_source([](std::uint64_t) { return 1.0; });
    const std::vector<std::uint64_t> cps{1, 10, 1000, 100'000, 200'000};
    const auto unit = weighted_average(Weight::unit(), ones, cps, 1);
    for (const auto& s : unit.partials) EXPECT_EQ(s, cplx(1.0, 0.0));

    const auto mob = weighted_average(Weight::moebius(table()), ones, cps, 1);
    for (std::size_t i = 0; i < cps.size(); ++i) {
        EXPECT_EQ(mob.partials[i].real(), static_cast<double>(mertens(table(), cps[i])) / static_cast<double>(cps[i]));
        EXPECT_EQ(mob.partials[i].imag(), 0.0);
    }
}

TEST(WeightedAverage, CounterexampleOrbitTendsToSquarefreeDensity) {
    const CounterexamplePoint a(table());
    const ShiftSource<CounterexamplePoint> src{&a, IntPolynomial({0, 0, 1})};
    const auto s = weighted_average(Weight::moebius(table()), src, {1000, 10'000, 100'000}, 2);
    EXPECT_EQ(s.partials.back().real(), squarefree_density(table(), 100'000));
    EXPECT_NEAR(s.partials.back().real(), kSixOverPiSq, 1e-3);
}

TEST(WeightedAverage, CheckpointConsistencyAndBounds) {
    const RotationCharacterSource src{{odd_snap(angles::golden), "golden"}, {0}, IntPolynomial({0, 0, 1}), 1};
    const std::vector<std::uint64_t> cps{500, 70'000, 131'072, 131'073, 300'000};
    const auto s = weighted_average(Weight::moebius(table()), src, cps, 3);
    std::uint64_t prev = 0;
    cplx prev_total = 0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        // Direct left-to-right sum over (prev, N].
        long double re = 0, im = 0;
        for (std::uint64_t n = prev + 1; n <= cps[i]; ++n) {
            const auto v = character(1, eval_wrapped(src.poly, n) * src.system.alpha);
            re += table()[n] * v.real();
            im += table()[n] * v.imag();
        }
        EXPECT_NEAR(s.segment_sums[i].real(), static_cast<double>(re), 1e-9);
        EXPECT_NEAR(s.segment_sums[i].imag(), static_cast<double>(im), 1e-9);
        const cplx total = s.partials[i] * static_cast<double>(cps[i]);
        EXPECT_NEAR(std::abs(total - prev_total - s.segment_sums[i]), 0.0, 1e-9);
        EXPECT_LE(std::abs(s.partials[i]), 1.0);
        prev = cps[i];
        prev_total = total;
    }
}

TEST(WeightedAverage, Linearity) {
    const IntPolynomial p({3, 1, 2});
    const RotationCharacterSource v1{{odd_snap(angles::sqrt2), ""}, {0}, p, 1};
    const HeisenbergSource v2{{angles::sqrt2, angles::sqrt3, 0.0}, {}, p, {HeisObservableKind::smooth_z, 0}};
    const cplx c1(0.5, -2.0), c2(-1.25, 0.75);
    const auto mix = make_source([&](std::uint64_t n) {
        cplx a, b;
        v1.fill(n, std::span<cplx>(&a, 1));
        v2.fill(n, std::span<cplx>(&b, 1));
        return c1 * a + c2 * b;
    });
    const std::vector<std::uint64_t> cps{100, 10'000, 100'000};
    const auto s1 = weighted_average(Weight::moebius(table()), v1, cps);
    const auto s2 = weighted_average(Weight::moebius(table()), v2, cps);
    const auto sm = weighted_average(Weight::moebius(table()), mix, cps);
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const cplx expect = c1 * s1.partials[i] + c2 * s2.partials[i];
        EXPECT_LE(std::abs(sm.partials[i] - expect), 1e-12 * std::max(1.0, std::abs(expect)));
    }
}

TEST(WeightedAverage, DeterministicAcrossWorkerCounts) {
    const HeisenbergSource src{{angles::sqrt2, angles::sqrt3, 0.0}, {}, IntPolynomial({0, 0, 1}),
                               {HeisObservableKind::smooth_z, 0}};
    const std::vector<std::uint64_t> cps{1000, 100'000, 400'000};
    const auto a = weighted_average(Weight::moebius(table()), src, cps, 1);
    for (unsigned threads : {2U, 5U, 8U}) {
        const auto b = weighted_average(Weight::moebius(table()), src, cps, threads);
        for (std::size_t i = 0; i < cps.size(); ++i) {
            EXPECT_EQ(std::bit_cast<std::uint64_t>(a.partials[i].real()), std::bit_cast<std::uint64_t>(b.partials[i].real()));
            EXPECT_EQ(std::bit_cast<std::uint64_t>(a.partials[i].imag()), std::bit_cast<std::uint64_t>(b.partials[i].imag()));
        }
    }
}

TEST(WeightedAverage, Errors) {
    const auto ones = make_source([](std::uint64_t) { return 1.0; }, 100);
    EXPECT_THROW(weighted_average(Weight::unit(), ones, {10, 101}), RangeError);
    EXPECT_THROW(weighted_average(Weight::unit(), ones, {10, 10}), DomainError);
    EXPECT_THROW(weighted_average(Weight::unit(), ones, {}), DomainError);
    const auto small = build_moebius_table(50);
    EXPECT_THROW(weighted_average(Weight::moebius(small), ones, {60}), RangeError);
}

TEST(Checkpoints, Geometric) {
    const auto g = geometric_checkpoints(1000, 1e7, std::sqrt(10.0));
    const std::vector<std::uint64_t> expect{1000, 3162, 10'000, 31'623, 100'000, 316'228, 1'000'000, 3'162'278, 10'000'000};
    EXPECT_EQ(g, expect);
    EXPECT_THROW(geometric_checkpoints(10, 5, 2), ConfigError);
}

AverageSeries synthetic(const std::vector<std::uint64_t>& ns, auto fn) {
    AverageSeries s;
    s.checkpoints = ns;
    for (auto n : ns) s.partials.push_back(fn(static_cast<double>(n)));
    return s;
}

TEST(DecayFit, Synthetic) {
    const std::vector<std::uint64_t> ns{1000, 10'000, 100'000, 1'000'000, 10'000'000};
    const auto r = decay_fit(synthetic(ns, [](double n) { return cplx(std::pow(std::log(n), -2.0), 0); }));
    EXPECT_NEAR(r.exponent_a, 2.0, 1e-12);
    EXPECT_NEAR(r.log_c, 0.0, 1e-12);
    EXPECT_NEAR(r.residual_rms, 0.0, 1e-12);
    EXPECT_EQ(r.points_used, 5U);

    const auto c = decay_fit(synthetic(ns, [](double) { return cplx(0.3, 0.4); }));
    EXPECT_NEAR(c.exponent_a, 0.0, 1e-12);
    EXPECT_NEAR(c.log_c, std::log(0.5), 1e-12);

    auto with_zero = synthetic(ns, [](double n) { return cplx(1.0 / n, 0); });
    with_zero.partials[2] = 0;
    const auto z = decay_fit(with_zero);
    EXPECT_EQ(z.points_dropped, 1U);
    EXPECT_EQ(z.points_used, 4U);
    with_zero.partials[3] = 0;
    EXPECT_THROW(decay_fit(with_zero), DegenerateFitError);
}

TEST(DecayFit, MoebiusWeightedRotationDecays) {
    const RotationCharacterSource src{{odd_snap(angles::golden), "golden"}, {0}, IntPolynomial({0, 1}), 1};
    const auto s = weighted_average(Weight::moebius(table()), src, geometric_checkpoints(1000, 1e7, std::sqrt(10.0)));
    const auto fit = decay_fit(s);
    EXPECT_GT(fit.exponent_a, 0.0);
}

TEST(Davenport, ZeroCellIsMertens) {
    const IntPolynomial p({0, 1});
    const auto r = davenport_sup(table(), p, 10'000, 1 << 12, 10, 1);
    EXPECT_EQ(r.value_at_zero, 23.0 / 10'000);
    EXPECT_GE(r.value, r.value_at_zero);
    EXPECT_EQ(davenport_value(table(), p, 10'000, {0}), 23.0 / 10'000);
    EXPECT_THROW(davenport_sup(table(), p, 20'000'000), RangeError);
    EXPECT_THROW(davenport_sup(table(), p, 10, 1), DomainError);
}

TEST(Davenport, TinyCaseMatchesDenseScan) {
    // N = 4, p = n: (1/4)|e(t) - e(2t) - e(3t)|.
    const IntPolynomial p({0, 1});
    const auto r = davenport_sup(table(), p, 4, 1 << 16, 30, 1);
    const double dense = static_cast<double>(dense_scan(p, 4, 1'000'000));
    EXPECT_NEAR(r.value, dense, 1e-6);
    EXPECT_NEAR(static_cast<double>(dense_value(p, 4, r.theta.to_double())), r.value, 1e-12);
}

TEST(Davenport, NonPowerOfTwoGrid) {
    const IntPolynomial p({1, 2, 1});
    const auto r = davenport_sup(table(), p, 30, 1000, 30, 1);
    const double dense = static_cast<double>(dense_scan(p, 30, 200'000));
    EXPECT_GE(r.value, dense - 1e-6);
    EXPECT_NEAR(static_cast<double>(dense_value(p, 30, r.theta.to_double())), r.value, 1e-12);
}

TEST(Davenport, SquareDecays) {
    const IntPolynomial p({0, 0, 1});
    const auto small = davenport_sup(table(), p, 1000, 1 << 16, 30);
    const auto large = davenport_sup(table(), p, 100'000, 1 << 16, 30);
    EXPECT_LT(large.value, small.value);
}

TEST(Kbsz, ConstantIsExactlyOne) {
    const auto one = [](std::uint64_t) { return cplx(1.0, 0.0); };
    for (std::uint64_t n : {1U, 7U, 1000U, 12345U}) EXPECT_EQ(kbsz_correlation(one, 2, 3, n), cplx(1.0, 0.0));
    EXPECT_THROW(kbsz_correlation(one, 3, 3, 10), DomainError);
    EXPECT_THROW(kbsz_correlation(one, 4, 3, 10), DomainError);
    EXPECT_THROW(kbsz_correlation(one, 2, 3, 10, 20), RangeError);
}

TEST(Kbsz, RotationDirichletKernel) {
    const RotationSystem rot{odd_snap(angles::golden), "golden"};
    const IntPolynomial p({0, 1});
    const auto v = [&](std::uint64_t m) { return character(1, rotation_orbit_point(rot, {0}, p, m)); };
    const std::uint64_t n = 10'000;
    for (std::uint64_t q1 : {2U, 3U, 5U, 7U, 11U}) {
        for (std::uint64_t q2 : {3U, 5U, 7U, 11U, 13U}) {
            if (q2 <= q1) continue;
            const double beta = (static_cast<double>(q1) - static_cast<double>(q2)) * rot.alpha.to_double();
            const double kernel = std::abs(std::sin(std::numbers::pi * n * beta) / std::sin(std::numbers::pi * beta)) / n;
            const double b = std::abs(kbsz_correlation(v, q1, q2, n));
            EXPECT_NEAR(b, kernel, 1e-9);
            EXPECT_LE(b, 1.0 / (n * std::abs(std::sin(std::numbers::pi * beta))) + 1e-12);
        }
    }
}

TEST(Kbsz, HeisenbergCharY) {
    const HeisenbergPoint a{angles::sqrt2, angles::sqrt3, 0.0};
    const IntPolynomial p({0, 1});
    const HeisObservable obs{HeisObservableKind::char_y, 1};
    const auto v = [&](std::uint64_t m) { return observable(obs, heis_orbit_point(a, {}, p, m)); };
    const double b = std::abs(kbsz_correlation(v, 2, 3, 100'000));
    RecordProperty("abs_B", std::to_string(b));
    EXPECT_LT(b, 0.05);
}

TEST(StarDiscrepancy, Examples) {
    const std::vector<Frac64> zero{{0}};
    EXPECT_EQ(star_discrepancy(zero), 1.0);
    EXPECT_THROW(star_discrepancy(std::vector<Frac64>{}), DomainError);
    for (std::uint64_t n : {1U, 2U, 10U, 1000U, 4096U}) {
        std::vector<Frac64> pts;
        for (std::uint64_t i = 0; i < n; ++i) {
            const long double t = (2.0L * i + 1) / (2.0L * n);
            pts.push_back({static_cast<std::uint64_t>(std::nearbyintl(t * 0x1p64L))});
        }
        std::shuffle(pts.begin(), pts.end(), std::mt19937_64(n));
        EXPECT_EQ(star_discrepancy(pts), 1.0 / (2.0 * static_cast<double>(n))) << n;
    }
    const std::vector<Frac64> left{{0}, {0}};
    EXPECT_EQ(star_discrepancy(left), 1.0);
}

TEST(StarDiscrepancy, WeylSquares) {
    std::vector<Frac64> pts;
    const Frac64 g = odd_snap(angles::golden);
    for (std::uint64_t n = 1; n <= 100'000; ++n) pts.push_back((n * n) * g);
    EXPECT_LT(star_discrepancy(pts), 0.01);
}

TEST(Csv, Format) {
    AverageSeries s;
    s.checkpoints = {10, 100};
    s.partials = {cplx(0.1, -0.2), cplx(1.0 / 3.0, 0)};
    std::ostringstream os;
    write_series_csv(os, s, {"weight: moebius", "poly: 0,0,1"}, DecayReport{1.5, -0.25, 0.125});
    EXPECT_EQ(os.str(),
              "# weight: moebius\n# poly: 0,0,1\nN,re,im,abs\n"
              "10,0.10000000000000001,-0.20000000000000001,0.22360679774997899\n"
              "100,0.33333333333333331,0,0.33333333333333331\n"
              "# fit: A=1.5, logC=-0.25, rms=0.125\n");
}

}  // namespace
