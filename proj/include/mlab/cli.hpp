// cli.hpp
// Batch front end: subcommands sieve, average, davenport, kbsz,
// counterexample, entropy, equidist. Each writes one CSV whose '#' header
// lines record the full configuration.
//
// Exit status: 0 ok, 2 configuration error, 3 runtime error.

#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mlab/averages.hpp"
#include "mlab/error.hpp"
#include "mlab/moebius.hpp"
#include "mlab/polynomial.hpp"
#include "mlab/symbolic.hpp"
#include "mlab/systems.hpp"
#include "mlab/torus.hpp"

namespace mlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// ---------------------------------------------------------------------------
// Value parsing

// Accepts plain integers, "B^E" and "XeY" (e.g. 10000000, 10^7, 1e7).
inline std::uint64_t parse_count(const std::string& text, const std::string& field) {
    auto fail = [&]() -> std::uint64_t {
        throw ConfigError(field + ": '" + text + "' is not a positive integer (forms: 1000000, 10^6, 1e6)");
    };
    if (text.empty()) return fail();
    const auto caret = text.find('^');
    if (caret != std::string::npos) {
        const auto base = parse_count(text.substr(0, caret), field);
        const auto exp = parse_count(text.substr(caret + 1), field);
        u128 v = 1;
        for (std::uint64_t i = 0; i < exp; ++i) {
            v *= base;
            if (v > std::numeric_limits<std::uint64_t>::max()) return fail();
        }
        return static_cast<std::uint64_t>(v);
    }
    if (text.find_first_of("eE.") != std::string::npos) {
        double v = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || ptr != text.data() + text.size() || !(v >= 1.0) || v > 1.8e19 || v != std::floor(v)) {
            return fail();
        }
        return static_cast<std::uint64_t>(v);
    }
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || v == 0) return fail();
    return v;
}

inline double parse_real(const std::string& text, const std::string& field) {
    const auto caret = text.find('^');
    if (caret != std::string::npos) {
        return std::pow(parse_real(text.substr(0, caret), field), parse_real(text.substr(caret + 1), field));
    }
    double v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError(field + ": '" + text + "' is not a number");
    }
    return v;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = text.find(sep, pos);
        out.push_back(text.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

inline std::vector<std::uint64_t> parse_count_list(const std::string& text, const std::string& field) {
    std::vector<std::uint64_t> out;
    for (const auto& tok : split(text, ',')) out.push_back(parse_count(tok, field));
    return out;
}

// "n1,n2,..." (strictly increasing) or "geom:start:stop:factor".
inline std::vector<std::uint64_t> parse_checkpoints(const std::string& text) {
    std::vector<std::uint64_t> cps;
    if (text.starts_with("geom:")) {
        const auto parts = split(text.substr(5), ':');
        if (parts.size() != 3) throw ConfigError("checkpoints: expected geom:start:stop:factor, got '" + text + "'");
        cps = geometric_checkpoints(parse_real(parts[0], "checkpoints start"), parse_real(parts[1], "checkpoints stop"),
                                    parse_real(parts[2], "checkpoints factor"));
    } else {
        cps = parse_count_list(text, "checkpoints");
    }
    for (std::size_t i = 1; i < cps.size(); ++i) {
        if (cps[i] <= cps[i - 1]) throw ConfigError("checkpoints: values must be strictly increasing");
    }
    return cps;
}

inline std::string join(const std::vector<std::uint64_t>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
    return s;
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    std::string command;
    std::string limit;
    std::string poly;
    std::string system = "rotation:alpha=golden";
    std::string observable;
    std::string checkpoints;
    std::string n;
    std::string m;
    std::string lengths;
    std::string primes = "2,3";
    std::string weight = "moebius";
    std::string grid = "65536";
    std::string refine = "30";
    std::string out;
    std::string sieve_cache;
    std::string dump_seq;
    std::string config;
    unsigned threads = 0;
};

struct Output {
    std::ofstream file;
    std::ostream* os;

    Output(const std::string& path, std::ostream& fallback) : os(&fallback) {
        if (!path.empty()) {
            file.open(path, std::ios::trunc);
            if (!file) throw Error("cannot open output file: " + path);
            os = &file;
        }
    }
    std::ostream& operator*() { return *os; }
};

inline MoebiusTable obtain_table(std::uint64_t limit, const std::string& cache, std::ostream& err) {
    if (!cache.empty() && std::filesystem::exists(cache)) {
        auto t = load_moebius_table(cache);
        if (t.limit() >= limit) return t;
        err << "sieve cache " << cache << " covers only " << t.limit() << ", rebuilding\n";
    }
    auto t = build_moebius_table(limit);
    if (!cache.empty()) save_moebius_table(t, cache);
    return t;
}

inline std::vector<std::string> base_header(const ExperimentConfig& c) {
    return {"command: " + c.command};
}

inline void print_fit(std::ostream& os, const AverageSeries& s) {
    try {
        const auto fit = decay_fit(s);
        os << "# fit: A=" << format_real(fit.exponent_a) << ", logC=" << format_real(fit.log_c)
           << ", rms=" << format_real(fit.residual_rms) << '\n';
        if (fit.points_dropped > 0) os << "# fit_dropped_zero_checkpoints: " << fit.points_dropped << '\n';
    } catch (const DegenerateFitError& e) {
        os << "# fit: unavailable (" << e.what() << ")\n";
    }
}

// Smallest Möbius table that lets the counterexample point answer a_{p(n)}
// for the largest requested n.
inline std::uint64_t subshift_table_limit(const IntPolynomial& p, std::uint64_t n_max) {
    const i128 top = eval_exact(p, n_max);
    return static_cast<std::uint64_t>(isqrt(static_cast<u128>(top < 0 ? 0 : top))) + 1;
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_sieve(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
    if (c.limit.empty()) throw ConfigError("sieve: --limit is required");
    const auto limit = parse_count(c.limit, "limit");
    std::vector<std::uint64_t> cps;
    if (!c.checkpoints.empty()) {
        cps = parse_checkpoints(c.checkpoints);
        if (cps.back() > limit) throw ConfigError("checkpoints: values must not exceed --limit");
    } else {
        for (std::uint64_t v = 1; v < limit; v *= 10) cps.push_back(v);
        cps.push_back(limit);
    }
    const auto table = obtain_table(limit, c.sieve_cache, err);

    std::uint64_t hist[3] = {0, 0, 0};
    std::vector<std::uint64_t> sqfree_at;
    std::uint64_t sqfree = 0;
    std::size_t ci = 0;
    for (std::uint64_t n = 1; n <= limit && ci < cps.size(); ++n) {
        const int mu = table[n];
        ++hist[mu + 1];
        sqfree += mu != 0;
        if (n == cps[ci]) {
            sqfree_at.push_back(sqfree);
            ++ci;
        }
    }
    for (std::uint64_t n = cps.back() + 1; n <= limit; ++n) ++hist[table[n] + 1];

    Output o(c.out, out);
    auto& os = *o;
    for (const auto& h : base_header(c)) os << "# " << h << '\n';
    os << "# limit: " << limit << '\n';
    os << "# checkpoints: " << join(cps) << '\n';
    os << "# mu_histogram: -1=" << hist[0] << ", 0=" << hist[1] << ", +1=" << hist[2] << '\n';
    os << "# six_over_pi_squared: " << format_real(6.0 / (std::numbers::pi * std::numbers::pi)) << '\n';
    os << "N,mu_N,mertens,mertens_over_N,squarefree_density\n";
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const auto n = cps[i];
        const auto mt = mertens(table, n);
        os << n << ',' << table[n] << ',' << mt << ',' << format_real(static_cast<double>(mt) / static_cast<double>(n))
           << ',' << format_real(static_cast<double>(sqfree_at[i]) / static_cast<double>(n)) << '\n';
    }
    return kExitOk;
}

inline int cmd_average(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
    const auto sys = parse_system(c.system);
    const auto obs = parse_observable(c.observable.empty() ? default_observable(sys.kind) : c.observable, sys.kind);
    const auto poly = parse_polynomial(c.poly.empty() ? "0,1" : c.poly);
    const auto cps = parse_checkpoints(c.checkpoints.empty() ? "geom:1000:1e7:3.1622776601683795" : c.checkpoints);
    if (c.weight != "moebius" && c.weight != "unit") throw ConfigError("weight: expected moebius or unit");
    const bool moebius = c.weight == "moebius";
    const auto n_max = cps.back();
    if (!nonneg_on_range(poly, n_max)) {
        throw ConfigError("poly: " + poly.to_string() + " takes negative values on [1, " + std::to_string(n_max) + "]");
    }

    std::uint64_t need = moebius ? n_max : 1;
    if (sys.kind == SystemKind::subshift && obs.kind != ObservableKind::constant) {
        need = std::max(need, subshift_table_limit(poly, n_max));
    }
    if (!c.limit.empty()) {
        const auto lim = parse_count(c.limit, "limit");
        if (lim < need) throw ConfigError("limit: " + std::to_string(lim) + " is below the required " + std::to_string(need));
        need = lim;
    }
    const auto table = obtain_table(need, c.sieve_cache, err);
    const CounterexamplePoint point(table);
    const auto src = make_orbit_source(sys, obs, poly, &point);
    const Weight w = moebius ? Weight::moebius(table) : Weight::unit();
    const std::string desc = sys.text + " | " + obs.text + " | p=" + poly.to_string();
    const auto series = std::visit(
        [&](const auto& s) { return weighted_average(w, s, cps, c.threads, desc); }, src);

    Output o(c.out, out);
    auto& os = *o;
    for (const auto& h : base_header(c)) os << "# " << h << '\n';
    os << "# weight: " << w.tag() << '\n';
    os << "# system: " << sys.text << '\n';
    os << "# observable: " << obs.text << '\n';
    os << "# poly: " << poly.to_string() << '\n';
    os << "# checkpoints: " << join(cps) << '\n';
    os << "# sieve_limit: " << need << '\n';
    write_series_csv(os, series, {});
    print_fit(os, series);
    return kExitOk;
}

inline int cmd_davenport(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
    const auto poly = parse_polynomial(c.poly.empty() ? "0,1" : c.poly);
    std::vector<std::uint64_t> cps;
    if (!c.n.empty() && !c.checkpoints.empty()) throw ConfigError("davenport: give either --N or --checkpoints");
    if (!c.n.empty()) {
        cps = {parse_count(c.n, "N")};
    } else {
        cps = parse_checkpoints(c.checkpoints.empty() ? "1000,10000,100000,1000000" : c.checkpoints);
    }
    const auto grid = parse_count(c.grid, "grid");
    if (grid < 2 || grid > (std::uint64_t{1} << 32)) throw ConfigError("grid: must be in [2, 2^32]");
    const auto refine = c.refine == "0" ? 0 : parse_count(c.refine, "refine");
    if (refine > 200) throw ConfigError("refine: at most 200 rounds");
    std::uint64_t need = cps.back();
    if (!c.limit.empty()) need = std::max(need, parse_count(c.limit, "limit"));
    const auto table = obtain_table(need, c.sieve_cache, err);

    AverageSeries series;
    series.weight = WeightKind::moebius;
    std::vector<DavenportResult> rows;
    for (auto n : cps) {
        rows.push_back(davenport_sup(table, poly, n, grid, static_cast<unsigned>(refine), c.threads));
        series.checkpoints.push_back(n);
        series.partials.push_back(rows.back().value);
    }

    Output o(c.out, out);
    auto& os = *o;
    for (const auto& h : base_header(c)) os << "# " << h << '\n';
    os << "# poly: " << poly.to_string() << '\n';
    os << "# checkpoints: " << join(cps) << '\n';
    os << "# grid: " << grid << '\n';
    os << "# refine: " << refine << '\n';
    os << "# candidates: " << kDavenportCandidates << '\n';
    os << "# sup is a lower bound: the largest |(1/N) sum mu(n) e(p(n) theta)| over all evaluated theta\n";
    os << "N,theta,sup,abs_mertens_over_N\n";
    for (const auto& r : rows) {
        os << r.n << ',' << format_real(r.theta.to_double()) << ',' << format_real(r.value) << ','
           << format_real(r.value_at_zero) << '\n';
    }
    print_fit(os, series);
    return kExitOk;
}

inline int cmd_kbsz(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
    const auto sys = parse_system(c.system);
    const auto obs = parse_observable(c.observable.empty() ? default_observable(sys.kind) : c.observable, sys.kind);
    const auto poly = parse_polynomial(c.poly.empty() ? "0,1" : c.poly);
    const auto primes = parse_count_list(c.primes, "primes");
    if (primes.size() < 2) throw ConfigError("primes: need at least two");
    for (std::size_t i = 0; i < primes.size(); ++i) {
        if (!is_prime(primes[i])) throw ConfigError("primes: " + std::to_string(primes[i]) + " is not prime");
        for (std::size_t j = 0; j < i; ++j) {
            if (primes[j] == primes[i]) throw ConfigError("primes: duplicate " + std::to_string(primes[i]));
        }
    }
    std::vector<std::uint64_t> cps;
    if (!c.n.empty() && !c.checkpoints.empty()) throw ConfigError("kbsz: give either --N or --checkpoints");
    cps = !c.n.empty() ? std::vector<std::uint64_t>{parse_count(c.n, "N")}
                       : parse_checkpoints(c.checkpoints.empty() ? "10000" : c.checkpoints);
    const auto q_max = *std::max_element(primes.begin(), primes.end());
    const auto top = cps.back() * q_max;
    if (!nonneg_on_range(poly, top)) {
        throw ConfigError("poly: " + poly.to_string() + " takes negative values on [1, " + std::to_string(top) + "]");
    }
    std::uint64_t need = 1;
    if (sys.kind == SystemKind::subshift && obs.kind != ObservableKind::constant) need = subshift_table_limit(poly, top);
    if (!c.limit.empty()) need = std::max(need, parse_count(c.limit, "limit"));
    const auto table = obtain_table(need, c.sieve_cache, err);
    const CounterexamplePoint point(table);
    const auto src = make_orbit_source(sys, obs, poly, &point);
    const auto v = [&](std::uint64_t m) { return value_at(src, m); };

    Output o(c.out, out);
    auto& os = *o;
    for (const auto& h : base_header(c)) os << "# " << h << '\n';
    os << "# system: " << sys.text << '\n';
    os << "# observable: " << obs.text << '\n';
    os << "# poly: " << poly.to_string() << '\n';
    os << "# primes: " << join(primes) << '\n';
    os << "# checkpoints: " << join(cps) << '\n';
    os << "q1,q2,N,re,im,abs\n";
    for (std::size_t i = 0; i < primes.size(); ++i) {
        for (std::size_t j = i + 1; j < primes.size(); ++j) {
            const auto q1 = std::min(primes[i], primes[j]), q2 = std::max(primes[i], primes[j]);
            for (auto n : cps) {
                const cplx b = kbsz_correlation(v, q1, q2, n);
                os << q1 << ',' << q2 << ',' << n << ',' << format_real(b.real()) << ',' << format_real(b.imag()) << ','
                   << format_real(std::abs(b)) << '\n';
            }
        }
    }
    return kExitOk;
}

inline int cmd_counterexample(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
    const auto cps = parse_checkpoints(c.checkpoints.empty() ? "1000,10000,100000,1000000" : c.checkpoints);
    const IntPolynomial poly({0, 0, 1});
    std::optional<std::uint64_t> prefix;
    if (!c.m.empty()) prefix = parse_count(c.m, "M");
    if (!c.dump_seq.empty() && !prefix) throw ConfigError("dump-seq: needs --M for the prefix length");
    std::uint64_t need = cps.back();
    if (prefix) need = std::max(need, isqrt(*prefix - 1));
    if (!c.limit.empty()) need = std::max(need, parse_count(c.limit, "limit"));
    const auto table = obtain_table(need, c.sieve_cache, err);
    const CounterexamplePoint point(table);
    const ShiftSource<CounterexamplePoint> src{&point, poly};
    const auto series = weighted_average(Weight::moebius(table), src, cps, c.threads, "counterexample");
    if (prefix && !c.dump_seq.empty()) dump_sequence(counterexample_sequence(*prefix, table), c.dump_seq);

    const double limit_value = 6.0 / (std::numbers::pi * std::numbers::pi);
    Output o(c.out, out);
    auto& os = *o;
    for (const auto& h : base_header(c)) os << "# " << h << '\n';
    os << "# system: subshift:counterexample\n# observable: x0\n# poly: 0,0,1\n# weight: moebius\n";
    os << "# checkpoints: " << join(cps) << '\n';
    os << "# six_over_pi_squared: " << format_real(limit_value) << '\n';
    os << "N,S_N,squarefree_density,abs_gap\n";
    std::uint64_t sqfree = 0, n = 0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        for (; n < cps[i];) sqfree += table[++n] != 0;
        const double s = series.partials[i].real();
        os << cps[i] << ',' << format_real(s) << ','
           << format_real(static_cast<double>(sqfree) / static_cast<double>(cps[i])) << ','
           << format_real(std::abs(s - limit_value)) << '\n';
    }
    return kExitOk;
}

inline int cmd_entropy(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
    const auto m = parse_count(c.m.empty() ? "1000000" : c.m, "M");
    std::vector<std::uint64_t> lengths;
    if (!c.lengths.empty()) {
        lengths = parse_count_list(c.lengths, "lengths");
    } else {
        for (std::uint64_t len = 16; len <= 1024 && len <= m / 2; len *= 2) lengths.push_back(len);
    }
    for (auto len : lengths) {
        if (len > m / 2) throw ConfigError("lengths: " + std::to_string(len) + " exceeds M/2");
    }
    if (lengths.size() < 3) throw ConfigError("lengths: need at least three word lengths for the growth fit");
    const auto table = obtain_table(std::max<std::uint64_t>(1, isqrt(m - 1)), c.sieve_cache, err);
    const auto seq = counterexample_sequence(m, table);
    if (!c.dump_seq.empty()) dump_sequence(seq, c.dump_seq);
    const auto report = entropy_growth_report(seq, lengths, c.threads);

    Output o(c.out, out);
    auto& os = *o;
    for (const auto& h : base_header(c)) os << "# " << h << '\n';
    os << "# sequence: counterexample prefix a_0..a_{M-1}\n# M: " << m << '\n';
    os << "# lengths: " << join(lengths) << '\n';
    os << "# metric: d(x,y) = 2^-min{i : x_i != y_i}; (n, 2^-k)-distinguishable segments = distinct factors of length n+k\n";
    os << "L,count,first_zero_run,count_over_L2\n";
    for (const auto& r : report.rows) {
        const auto z = first_zero_run(seq, r.length);
        os << r.length << ',' << r.count << ',' << (z ? std::to_string(*z) : "NA") << ','
           << format_real(static_cast<double>(r.count) / (static_cast<double>(r.length) * static_cast<double>(r.length)))
           << '\n';
    }
    os << "# fit: slope=" << format_real(report.slope) << ", intercept=" << format_real(report.intercept) << '\n';
    return kExitOk;
}

inline int cmd_equidist(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
    const auto sys = parse_system(c.system);
    if (sys.kind != SystemKind::rotation) throw ConfigError("equidist: only rotation systems are supported");
    const auto poly = parse_polynomial(c.poly.empty() ? "0,0,1" : c.poly);
    if (!c.n.empty() && !c.checkpoints.empty()) throw ConfigError("equidist: give either --N or --checkpoints");
    const auto cps = !c.n.empty() ? std::vector<std::uint64_t>{parse_count(c.n, "N")}
                                  : parse_checkpoints(c.checkpoints.empty() ? "1000,10000,100000" : c.checkpoints);
    if (cps.back() > 10'000'000) throw ConfigError("equidist: at most 10^7 samples");
    const RotationSystem rot{sys.alpha, sys.text};

    Output o(c.out, out);
    auto& os = *o;
    for (const auto& h : base_header(c)) os << "# " << h << '\n';
    os << "# system: " << sys.text << '\n';
    os << "# poly: " << poly.to_string() << '\n';
    os << "# checkpoints: " << join(cps) << '\n';
    os << "# samples: x0 + p(n) alpha mod 1, n = 1..N, x0 = 0\n";
    os << "N,star_discrepancy,sqrtN_times_D\n";
    std::vector<Frac64> samples;
    PolyStream s(poly, 1);
    for (auto n : cps) {
        while (samples.size() < n) samples.push_back(s.next() * rot.alpha);
        const double d = star_discrepancy(samples);
        os << n << ',' << format_real(d) << ',' << format_real(d * std::sqrt(static_cast<double>(n))) << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Config file: plain "key=value" lines, '#' comments. Keys are long option
// names with or without the leading "--". Command-line flags win.

inline std::vector<std::string> read_config_args(const std::string& path, const CLI::App& sub) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::vector<std::string> args;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config " + path + " line " + std::to_string(lineno) + ": expected key=value");
        }
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        if (key.starts_with("--")) key = key.substr(2);
        if (key == "config" || sub.get_option_no_throw("--" + key) == nullptr) {
            throw ConfigError("config " + path + " line " + std::to_string(lineno) + ": unknown key '" + key +
                              "' for command '" + sub.get_name() + "'");
        }
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    ExperimentConfig c;
    CLI::App app{"Möbius-weighted averages along polynomial orbits"};
    app.name("mobius_lab");
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", c.out, "CSV output path (default stdout)");
        sub->add_option("--sieve-cache", c.sieve_cache, "Möbius table cache file (MOBT format), loaded or created");
        sub->add_option("--threads", c.threads, "worker cap (default: logical cores); results do not depend on it");
        sub->add_option("--limit", c.limit, "sieve limit (e.g. 10^7)");
        sub->add_option("--config", c.config, "key=value config file; flags override it");
    };
    auto add_orbit = [&](CLI::App* sub) {
        sub->add_option("--system", c.system, "rotation:alpha=A | heis:a=X,Y,Z | subshift:counterexample");
        sub->add_option("--observable", c.observable, "char:K | char_x:K | char_y:K | smooth_z | x0 | const");
        sub->add_option("--poly", c.poly, "coefficients low to high, e.g. 0,0,1 for n^2");
    };

    auto* sieve = app.add_subcommand("sieve", "sieve mu, report Mertens sums and squarefree density");
    add_common(sieve);
    sieve->add_option("--checkpoints", c.checkpoints, "list n1,n2,... or geom:start:stop:factor");

    auto* average = app.add_subcommand("average", "weighted average of f(T^{p(n)} x) at checkpoints");
    add_common(average);
    add_orbit(average);
    average->add_option("--checkpoints", c.checkpoints, "list or geom:start:stop:factor");
    average->add_option("--weight", c.weight, "moebius | unit");

    auto* davenport = app.add_subcommand("davenport", "sup over theta of |(1/N) sum mu(n) e(p(n) theta)|");
    add_common(davenport);
    davenport->add_option("--poly", c.poly, "coefficients low to high");
    davenport->add_option("--N", c.n, "single N");
    davenport->add_option("--checkpoints", c.checkpoints, "list or geom:start:stop:factor");
    davenport->add_option("--grid", c.grid, "theta grid size G (default 65536)");
    davenport->add_option("--refine", c.refine, "golden-section rounds R (default 30)");

    auto* kbsz = app.add_subcommand("kbsz", "two-prime correlations (1/N) sum v(n q1) conj v(n q2)");
    add_common(kbsz);
    add_orbit(kbsz);
    kbsz->add_option("--primes", c.primes, "primes; every pair q1 < q2 is reported (default 2,3)");
    kbsz->add_option("--N", c.n, "single N");
    kbsz->add_option("--checkpoints", c.checkpoints, "list or geom:start:stop:factor");

    auto* cx = app.add_subcommand("counterexample", "mu-weighted average along n^2 on the counterexample subshift");
    add_common(cx);
    cx->add_option("--checkpoints", c.checkpoints, "list or geom:start:stop:factor");
    cx->add_option("--M", c.m, "materialized prefix length for --dump-seq");
    cx->add_option("--dump-seq", c.dump_seq, "write the prefix, one byte per symbol ('-','0','+')");

    auto* entropy = app.add_subcommand("entropy", "distinct factor counts of the counterexample prefix");
    add_common(entropy);
    entropy->add_option("--M", c.m, "prefix length (default 10^6)");
    entropy->add_option("--lengths", c.lengths, "word lengths (default 16,32,...,1024)");
    entropy->add_option("--dump-seq", c.dump_seq, "write the prefix, one byte per symbol ('-','0','+')");

    auto* equidist = app.add_subcommand("equidist", "star discrepancy of x0 + p(n) alpha mod 1");
    add_common(equidist);
    equidist->add_option("--system", c.system, "rotation:alpha=A");
    equidist->add_option("--poly", c.poly, "coefficients low to high (default 0,0,1)");
    equidist->add_option("--N", c.n, "single N");
    equidist->add_option("--checkpoints", c.checkpoints, "list or geom:start:stop:factor");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        // Splice config-file flags right after the subcommand so that explicit
        // flags, which come later, take precedence.
        std::string config_path;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
            if (args[i].starts_with("--config=")) config_path = args[i].substr(9);
        }
        if (!config_path.empty()) {
            const auto it = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
                return app.get_subcommand_no_throw(a) != nullptr;
            });
            if (it == args.end()) throw ConfigError("config: no subcommand given");
            const auto extra = read_config_args(config_path, *app.get_subcommand(*it));
            args.insert(it + 1, extra.begin(), extra.end());
        }
        std::vector<const char*> cargv{argv[0]};
        for (const auto& a : args) cargv.push_back(a.c_str());
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        c.command = sub->get_name();
        if (c.command == "sieve") return cmd_sieve(c, out, err);
        if (c.command == "average") return cmd_average(c, out, err);
        if (c.command == "davenport") return cmd_davenport(c, out, err);
        if (c.command == "kbsz") return cmd_kbsz(c, out, err);
        if (c.command == "counterexample") return cmd_counterexample(c, out, err);
        if (c.command == "entropy") return cmd_entropy(c, out, err);
        if (c.command == "equidist") return cmd_equidist(c, out, err);
        throw ConfigError("unknown command " + c.command);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace mlab::cli
