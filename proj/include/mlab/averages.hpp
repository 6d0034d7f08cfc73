// averages.hpp
// Weighted ergodic averages S_N = (1/N) sum_{n<=N} w(n) v(n) at checkpoints,
// the Davenport sup estimator, decay fits, two-prime correlations and star
// discrepancy.
//
// Summation order is fixed: [1, N_max] is cut at every checkpoint and into
// blocks of 2^16 indices; each block is summed sequentially with Neumaier
// compensation, the blocks of one segment are combined by a pairwise tree,
// and segments are accumulated in order with compensation. Blocks are the
// unit of parallel work, so results are bit-identical for any worker count.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mlab/error.hpp"
#include "mlab/moebius.hpp"
#include "mlab/parallel.hpp"
#include "mlab/polynomial.hpp"
#include "mlab/symbolic.hpp"
#include "mlab/torus.hpp"

namespace mlab {

using cplx = std::complex<double>;

inline constexpr std::uint64_t kBlockSize = std::uint64_t{1} << 16;
inline constexpr double kDecayFitFloor = 1e-15;

// Neumaier-compensated accumulator for complex values.
class CompensatedSum {
public:
    void add(cplx v) noexcept {
        add_part(re_, re_c_, v.real());
        add_part(im_, im_c_, v.imag());
    }
    cplx value() const noexcept { return {re_ + re_c_, im_ + im_c_}; }

private:
    static void add_part(double& sum, double& comp, double x) noexcept {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }

    double re_ = 0.0, re_c_ = 0.0, im_ = 0.0, im_c_ = 0.0;
};

inline cplx pairwise_sum(std::span<const cplx> xs) noexcept {
    if (xs.empty()) return {};
    if (xs.size() == 1) return xs[0];
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

// ---------------------------------------------------------------------------
// Weights and value sources

enum class WeightKind { moebius, unit };

struct Weight {
    WeightKind kind = WeightKind::unit;
    const MoebiusTable* table = nullptr;

    static Weight unit() { return {}; }
    static Weight moebius(const MoebiusTable& t) { return {WeightKind::moebius, &t}; }

    std::string tag() const { return kind == WeightKind::moebius ? "moebius" : "unit"; }
    std::uint64_t max_index() const noexcept {
        return kind == WeightKind::moebius ? table->limit() : std::numeric_limits<std::uint64_t>::max();
    }
    double operator()(std::uint64_t n) const noexcept {
        return kind == WeightKind::moebius ? static_cast<double>((*table)[n]) : 1.0;
    }
};

// A value source v(n), n >= 1. Sources are pure: evaluating a range never
// depends on what was evaluated before. fill() writes v(first), v(first+1), ...
template <class S>
concept ValueSource = requires(const S& s, std::uint64_t n, std::span<cplx> out) {
    { s.max_index() } -> std::convertible_to<std::uint64_t>;
    s.fill(n, out);
};

// Wraps a pure callable n -> value.
template <class Fn>
struct FunctionSource {
    Fn fn;
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max();

    std::uint64_t max_index() const noexcept { return limit; }
    void fill(std::uint64_t first, std::span<cplx> out) const {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = cplx(fn(first + i));
    }
};

template <class Fn>
FunctionSource<Fn> make_source(Fn fn, std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()) {
    return {std::move(fn), limit};
}

// v(n) = e(k (x0 + p(n) alpha)), driven by the finite-difference stream.
struct RotationCharacterSource {
    RotationSystem system;
    Frac64 x0;
    IntPolynomial poly;
    std::int64_t k = 1;

    std::uint64_t max_index() const noexcept { return std::numeric_limits<std::uint64_t>::max(); }
    void fill(std::uint64_t first, std::span<cplx> out) const {
        PolyStream s(poly, first);
        for (auto& v : out) v = character(k, x0 + s.next() * system.alpha);
    }
};

// v(n) = F(a^{p(n)} g0 Gamma) on the Heisenberg nilmanifold.
struct HeisenbergSource {
    HeisenbergPoint a;
    HeisenbergPoint g0;
    IntPolynomial poly;
    HeisObservable obs;

    std::uint64_t max_index() const noexcept { return std::numeric_limits<std::uint64_t>::max(); }
    void fill(std::uint64_t first, std::span<cplx> out) const {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = observable(obs, heis_orbit_point(a, g0, poly, first + i));
    }
};

// v(n) = a_{p(n)} for a symbol sequence (materialized or on-demand).
template <class Sequence>
struct ShiftSource {
    const Sequence* seq;
    IntPolynomial poly;

    std::uint64_t max_index() const noexcept { return std::numeric_limits<std::uint64_t>::max(); }
    void fill(std::uint64_t first, std::span<cplx> out) const {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = cplx(shift_orbit_value(*seq, poly, first + i));
    }
};

// ---------------------------------------------------------------------------
// Checkpointed averages

struct AverageSeries {
    std::vector<std::uint64_t> checkpoints;
    std::vector<cplx> partials;      // S_N at each checkpoint
    std::vector<cplx> segment_sums;  // sum over (previous checkpoint, N]
    WeightKind weight = WeightKind::unit;
    std::string descriptor;
};

template <ValueSource Source>
AverageSeries weighted_average(const Weight& weight, const Source& values, const std::vector<std::uint64_t>& checkpoints,
                               unsigned threads = 0, std::string descriptor = {}) {
    if (checkpoints.empty()) throw DomainError("weighted_average: no checkpoints");
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        if (checkpoints[i] == 0 || (i > 0 && checkpoints[i] <= checkpoints[i - 1])) {
            throw DomainError("weighted_average: checkpoints must be positive and strictly increasing");
        }
    }
    const std::uint64_t n_max = checkpoints.back();
    if (n_max > values.max_index()) {
        throw RangeError("value stream exhausted: needs " + std::to_string(n_max) + " values, has " +
                         std::to_string(values.max_index()));
    }
    if (n_max > weight.max_index()) {
        throw RangeError("Möbius table limit " + std::to_string(weight.max_index()) + " below N = " +
                         std::to_string(n_max));
    }

    struct Block {
        std::uint64_t first, last;  // inclusive
        std::size_t segment;
    };
    std::vector<Block> blocks;
    std::uint64_t start = 1;
    for (std::size_t s = 0; s < checkpoints.size(); ++s) {
        for (std::uint64_t b = start; b <= checkpoints[s]; b += kBlockSize) {
            blocks.push_back({b, std::min(checkpoints[s], b + kBlockSize - 1), s});
        }
        start = checkpoints[s] + 1;
    }

    std::vector<cplx> block_sums(blocks.size());
    parallel_for(blocks.size(), threads, [&](std::size_t i) {
        const auto& b = blocks[i];
        std::vector<cplx> buf(b.last - b.first + 1);
        values.fill(b.first, buf);
        CompensatedSum acc;
        for (std::size_t j = 0; j < buf.size(); ++j) {
            const double w = weight(b.first + j);
            if (w != 0.0) acc.add(w * buf[j]);
        }
        block_sums[i] = acc.value();
    });

    AverageSeries out;
    out.checkpoints = checkpoints;
    out.weight = weight.kind;
    out.descriptor = std::move(descriptor);
    CompensatedSum total;
    std::size_t bi = 0;
    for (std::size_t s = 0; s < checkpoints.size(); ++s) {
        const std::size_t begin = bi;
        while (bi < blocks.size() && blocks[bi].segment == s) ++bi;
        const cplx seg = pairwise_sum(std::span<const cplx>(block_sums).subspan(begin, bi - begin));
        out.segment_sums.push_back(seg);
        total.add(seg);
        out.partials.push_back(total.value() / static_cast<double>(checkpoints[s]));
    }
    return out;
}

// Geometric schedule start, start*factor, ... up to stop (rounded to
// integers, duplicates dropped, stop always included).
inline std::vector<std::uint64_t> geometric_checkpoints(double start, double stop, double factor) {
    if (!(start >= 1.0) || !(stop >= start) || !(factor > 1.0)) {
        throw ConfigError("geometric checkpoints need 1 <= start <= stop and factor > 1");
    }
    std::vector<std::uint64_t> out;
    for (int i = 0;; ++i) {
        const double v = start * std::pow(factor, i);
        if (v > stop * (1 + 1e-12)) break;
        const auto n = static_cast<std::uint64_t>(std::llround(v));
        if (out.empty() || n > out.back()) out.push_back(n);
    }
    const auto last = static_cast<std::uint64_t>(std::llround(stop));
    if (out.back() < last) out.push_back(last);
    return out;
}

// ---------------------------------------------------------------------------
// Decay fit: log|S_N| = log C - A log log N

struct DecayReport {
    double exponent_a = 0.0;
    double log_c = 0.0;
    double residual_rms = 0.0;
    std::uint64_t n_first = 0;
    std::uint64_t n_last = 0;
    std::size_t points_used = 0;
    std::size_t points_dropped = 0;  // |S_N| below kDecayFitFloor
};

inline DecayReport decay_fit(const AverageSeries& series) {
    std::vector<double> xs, ys;
    DecayReport r;
    for (std::size_t i = 0; i < series.checkpoints.size(); ++i) {
        const double mag = std::abs(series.partials[i]);
        const std::uint64_t n = series.checkpoints[i];
        if (n < 2) throw DegenerateFitError("decay_fit: checkpoint N = 1 has log log N undefined");
        if (mag < kDecayFitFloor) {
            ++r.points_dropped;
            continue;
        }
        if (xs.empty()) r.n_first = n;
        r.n_last = n;
        xs.push_back(std::log(std::log(static_cast<double>(n))));
        ys.push_back(std::log(mag));
    }
    if (xs.size() < 4) {
        throw DegenerateFitError("decay_fit needs at least 4 checkpoints with nonzero average, got " +
                                 std::to_string(xs.size()));
    }
    const auto [intercept, slope] = least_squares_line(xs, ys);
    r.exponent_a = -slope;
    r.log_c = intercept;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (intercept + slope * xs[i]);
        ss += e * e;
    }
    r.residual_rms = std::sqrt(ss / static_cast<double>(xs.size()));
    r.points_used = xs.size();
    return r;
}

// ---------------------------------------------------------------------------
// Davenport sup estimator
//
// E(theta) = |(1/N) sum_{n<=N} mu(n) e(p(n) theta)|.
// Grid stage: with c_r = sum of mu(n) over p(n) = r (mod G), E(j/G) is
// |(1/N) sum_r c_r e(r j / G)|, costing (#nonzero residues) * G operations.
// Refinement: golden-section search for a maximum of E on
// [theta_j - 1/G, theta_j + 1/G] around each of the best local maxima of the
// grid. The reported value is the largest E actually evaluated, hence a lower
// bound for the true sup.

struct DavenportResult {
    Frac64 theta;
    double value = 0.0;
    double value_at_zero = 0.0;  // |M(N)| / N
    std::uint64_t n = 0;
    std::uint64_t grid = 0;
    unsigned refine = 0;
    unsigned candidates = 0;
};

inline constexpr std::uint64_t kDefaultDavenportGrid = std::uint64_t{1} << 16;
inline constexpr unsigned kDefaultDavenportRefine = 30;
inline constexpr unsigned kDavenportCandidates = 4;

// Exact E at a grid angle theta, evaluated term by term.
inline double davenport_value(const MoebiusTable& table, const IntPolynomial& p, std::uint64_t n_max, Frac64 theta) {
    PolyStream s(p, 1);
    CompensatedSum acc;
    for (std::uint64_t n = 1; n <= n_max; ++n) {
        const std::uint64_t pn = s.next();
        const int mu = table[n];
        if (mu == 0) continue;
        const cplx z = character(1, pn * theta);
        acc.add(mu > 0 ? z : -z);
    }
    return std::abs(acc.value()) / static_cast<double>(n_max);
}

inline std::uint64_t eval_mod(const IntPolynomial& p, std::uint64_t n, std::uint64_t modulus) noexcept {
    const auto c = p.coeffs();
    const u128 m = modulus;
    const u128 x = n % modulus;
    auto reduce = [&](std::int64_t v) -> u128 {
        const auto r = static_cast<std::int64_t>(v % static_cast<std::int64_t>(modulus));
        return r < 0 ? static_cast<u128>(r + static_cast<std::int64_t>(modulus)) : static_cast<u128>(r);
    };
    u128 acc = reduce(c.back());
    for (std::size_t i = c.size() - 1; i-- > 0;) acc = (acc * x + reduce(c[i])) % m;
    return static_cast<std::uint64_t>(acc);
}

inline DavenportResult davenport_sup(const MoebiusTable& table, const IntPolynomial& p, std::uint64_t n_max,
                                     std::uint64_t grid = kDefaultDavenportGrid,
                                     unsigned refine = kDefaultDavenportRefine, unsigned threads = 0) {
    if (n_max == 0 || n_max > table.limit()) {
        throw RangeError("davenport_sup: N = " + std::to_string(n_max) + " outside [1, " +
                         std::to_string(table.limit()) + "]");
    }
    if (grid < 2 || grid > (std::uint64_t{1} << 32)) throw DomainError("davenport_sup: grid size must be in [2, 2^32]");

    const bool pow2 = (grid & (grid - 1)) == 0;
    std::vector<double> residue_weight(grid, 0.0);
    if (pow2) {
        PolyStream s(p, 1);
        for (std::uint64_t n = 1; n <= n_max; ++n) residue_weight[s.next() & (grid - 1)] += table[n];
    } else {
        for (std::uint64_t n = 1; n <= n_max; ++n) {
            if (table[n] != 0) residue_weight[eval_mod(p, n, grid)] += table[n];
        }
    }
    std::vector<std::uint64_t> residues;
    std::vector<double> weights;
    for (std::uint64_t r = 0; r < grid; ++r) {
        if (residue_weight[r] != 0.0) {
            residues.push_back(r);
            weights.push_back(residue_weight[r]);
        }
    }

    std::vector<double> tw_re(grid), tw_im(grid);
    for (std::uint64_t k = 0; k < grid; ++k) {
        cplx z;
        if (pow2) {
            z = character(1, Frac64{k << (64 - std::countr_zero(grid))});
        } else {
            z = expi2pi(static_cast<double>(k) / static_cast<double>(grid));
        }
        tw_re[k] = z.real();
        tw_im[k] = z.imag();
    }

    const double inv_n = 1.0 / static_cast<double>(n_max);
    std::vector<double> grid_value(grid);
    constexpr std::uint64_t kChunk = 256;
    const std::uint64_t chunks = (grid + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::uint64_t j_end = std::min(grid, (c + 1) * kChunk);
        for (std::uint64_t j = c * kChunk; j < j_end; ++j) {
            double re = 0.0, im = 0.0;
            if (pow2) {
                const std::uint64_t mask = grid - 1;
                for (std::size_t i = 0; i < residues.size(); ++i) {
                    const std::uint64_t k = (residues[i] * j) & mask;
                    re += weights[i] * tw_re[k];
                    im += weights[i] * tw_im[k];
                }
            } else {
                for (std::size_t i = 0; i < residues.size(); ++i) {
                    const std::uint64_t k = (residues[i] * j) % grid;
                    re += weights[i] * tw_re[k];
                    im += weights[i] * tw_im[k];
                }
            }
            grid_value[j] = std::hypot(re, im) * inv_n;
        }
    });

    DavenportResult res;
    res.n = n_max;
    res.grid = grid;
    res.refine = refine;
    res.value_at_zero = std::abs(static_cast<double>(mertens(table, n_max))) * inv_n;

    const long double spacing_raw = 0x1p64L / static_cast<long double>(grid);
    auto grid_theta = [&](std::uint64_t j) {
        return Frac64{static_cast<std::uint64_t>(std::nearbyintl(static_cast<long double>(j) * spacing_raw))};
    };

    // Best local maxima on the cyclic grid, by value then index.
    std::vector<std::uint64_t> peaks;
    for (std::uint64_t j = 0; j < grid; ++j) {
        const double v = grid_value[j];
        if (v >= grid_value[(j + grid - 1) % grid] && v >= grid_value[(j + 1) % grid]) peaks.push_back(j);
    }
    std::sort(peaks.begin(), peaks.end(), [&](std::uint64_t a, std::uint64_t b) {
        return grid_value[a] != grid_value[b] ? grid_value[a] > grid_value[b] : a < b;
    });
    if (peaks.size() > kDavenportCandidates) peaks.resize(kDavenportCandidates);
    res.candidates = static_cast<unsigned>(peaks.size());

    res.theta = grid_theta(peaks.front());
    res.value = grid_value[peaks.front()];

    struct Found {
        Frac64 theta;
        double value;
    };
    std::vector<Found> refined(peaks.size());
    parallel_for(peaks.size(), threads, [&](std::size_t ci) {
        const Frac64 center = grid_theta(peaks[ci]);
        auto at = [&](double s) {
            const auto offset = static_cast<std::int64_t>(std::llroundl(static_cast<long double>(s) * spacing_raw));
            return Frac64{center.raw + static_cast<std::uint64_t>(offset)};
        };
        Found best{center, davenport_value(table, p, n_max, center)};
        auto probe = [&](double s) {
            const Frac64 t = at(s);
            const double v = davenport_value(table, p, n_max, t);
            if (v > best.value) best = {t, v};
            return v;
        };
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double lo = -1.0, hi = 1.0;
        double a = hi - inv_phi * (hi - lo), b = lo + inv_phi * (hi - lo);
        double fa = refine > 0 ? probe(a) : 0.0, fb = refine > 0 ? probe(b) : 0.0;
        for (unsigned it = 0; it < refine; ++it) {
            if (fa >= fb) {
                hi = b;
                b = a;
                fb = fa;
                a = hi - inv_phi * (hi - lo);
                fa = probe(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + inv_phi * (hi - lo);
                fb = probe(b);
            }
        }
        refined[ci] = best;
    });
    for (const auto& f : refined) {
        if (f.value > res.value) {
            res.value = f.value;
            res.theta = f.theta;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Two-prime correlation B_N(q1, q2) = (1/N) sum_{n<=N} v(n q1) conj(v(n q2)).

inline bool is_prime(std::uint64_t q) noexcept {
    if (q < 2) return false;
    for (std::uint64_t d = 2; d * d <= q; ++d) {
        if (q % d == 0) return false;
    }
    return true;
}

template <class Fn>
cplx kbsz_correlation(const Fn& v, std::uint64_t q1, std::uint64_t q2, std::uint64_t n_max,
                      std::uint64_t max_index = std::numeric_limits<std::uint64_t>::max()) {
    if (q1 == q2) throw DomainError("kbsz_correlation: primes must be distinct");
    if (!is_prime(q1) || !is_prime(q2)) throw DomainError("kbsz_correlation: q1 and q2 must be prime");
    if (n_max == 0) throw DomainError("kbsz_correlation: N must be positive");
    if (n_max > max_index / std::max(q1, q2)) {
        throw RangeError("kbsz_correlation: evaluator defined only up to index " + std::to_string(max_index));
    }
    CompensatedSum acc;
    for (std::uint64_t n = 1; n <= n_max; ++n) acc.add(cplx(v(n * q1)) * std::conj(cplx(v(n * q2))));
    return acc.value() / static_cast<double>(n_max);
}

// ---------------------------------------------------------------------------
// Star discrepancy D*_N = max_i max(i/N - x_(i), x_(i) - (i-1)/N), evaluated
// exactly in integer units of 1/(N 2^64) and rounded once at the end.

inline double star_discrepancy(std::span<const Frac64> samples) {
    if (samples.empty()) throw DomainError("star_discrepancy: empty sample");
    std::vector<std::uint64_t> xs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) xs[i] = samples[i].raw;
    std::sort(xs.begin(), xs.end());
    const u128 n = xs.size();
    u128 worst = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const u128 scaled = n * xs[i];
        const u128 upper = static_cast<u128>(i + 1) << 64;
        const u128 lower = static_cast<u128>(i) << 64;
        if (upper > scaled) worst = std::max(worst, upper - scaled);
        if (scaled > lower) worst = std::max(worst, scaled - lower);
    }
    const u128 q = worst / n;
    const u128 rem = worst % n;
    const long double v = (static_cast<long double>(q) + static_cast<long double>(rem) / static_cast<long double>(n)) * 0x1p-64L;
    return static_cast<double>(v);
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_series_csv(std::ostream& os, const AverageSeries& series, const std::vector<std::string>& header,
                             const std::optional<DecayReport>& fit = std::nullopt) {
    for (const auto& h : header) os << "# " << h << '\n';
    os << "N,re,im,abs\n";
    for (std::size_t i = 0; i < series.checkpoints.size(); ++i) {
        const cplx s = series.partials[i];
        os << series.checkpoints[i] << ',' << format_real(s.real()) << ',' << format_real(s.imag()) << ','
           << format_real(std::abs(s)) << '\n';
    }
    if (fit) {
        os << "# fit: A=" << format_real(fit->exponent_a) << ", logC=" << format_real(fit->log_c)
           << ", rms=" << format_real(fit->residual_rms) << '\n';
    }
}

}  // namespace mlab
