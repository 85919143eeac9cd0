#include "lifb/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <thread>

#include "lifb/rational_lp.hpp"

namespace lifb {

StateCube make_state_cube(size_t t, const std::vector<double>& alphabet, bool allow_large) {
    if (t < 1 || t > 4) {
        throw std::invalid_argument("make_state_cube: t must lie in [1,4], got " + std::to_string(t));
    }
    const size_t n = alphabet.size();
    if (n < 2 || n > 4) {
        throw std::invalid_argument("make_state_cube: alphabet size must lie in [2,4], got " +
                                    std::to_string(n));
    }
    std::set<double> uniq(alphabet.begin(), alphabet.end());
    if (uniq.size() != n) {
        throw std::invalid_argument("make_state_cube: alphabet values must be pairwise distinct");
    }
    size_t m = 1;
    for (size_t i = 0; i < t; ++i) m *= n;
    const size_t budget = allow_large ? 20 : 16;
    if (m > budget) {
        throw std::invalid_argument(
            "make_state_cube: enumeration budget exceeded (n^t = " + std::to_string(m) + " > " +
            std::to_string(budget) +
            (allow_large ? ", hard ceiling even with --allow-large"
                         : "; pass --allow-large to lift the ceiling to 20"));
    }

    StateCube cube;
    cube.t = t;
    cube.alphabet = alphabet;
    cube.points.reserve(m);
    std::vector<mpq_class> exact(n);
    for (size_t i = 0; i < n; ++i) exact[i] = mpq_class(alphabet[i]); // exact binary-to-rational
    for (size_t k = 0; k < m; ++k) {
        std::vector<mpq_class> p(t);
        size_t rem = k;
        for (size_t j = t; j-- > 0;) {
            p[j] = exact[rem % n];
            rem /= n;
        }
        cube.points.push_back(std::move(p));
    }
    return cube;
}

static size_t resolve_threads(size_t threads) {
    if (threads != 0) return threads;
    if (const char* env = std::getenv("LIFB_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return size_t(v);
    }
    return 1;
}

uint64_t count_threshold_functions(const StateCube& cube, size_t threads) {
    const size_t m = cube.points.size();
    if (m == 0 || m > 20) throw std::invalid_argument("count_threshold_functions: bad cube size");
    const uint64_t half = uint64_t(1) << (m - 1); // labelings with point 0 labeled 0
    const size_t nthreads = std::min<size_t>(resolve_threads(threads), 16);

    auto count_range = [&cube, m](uint64_t lo, uint64_t hi) {
        uint64_t cnt = 0;
        std::vector<int> labels(m);
        for (uint64_t code = lo; code < hi; ++code) {
            // Bit i of (code << 1) labels point i; point 0 always 0.
            for (size_t i = 1; i < m; ++i) labels[i] = int((code >> (i - 1)) & 1);
            labels[0] = 0;
            if (linear_separability(cube.points, labels).separable) ++cnt;
        }
        return cnt;
    };

    if (nthreads <= 1 || half < 64) return 2 * count_range(0, half);

    std::vector<uint64_t> partial(nthreads, 0);
    std::vector<std::thread> pool;
    const uint64_t chunk = (half + nthreads - 1) / nthreads;
    for (size_t k = 0; k < nthreads; ++k) {
        const uint64_t lo = std::min<uint64_t>(half, k * chunk);
        const uint64_t hi = std::min<uint64_t>(half, lo + chunk);
        pool.emplace_back([&partial, k, lo, hi, &count_range]() { partial[k] = count_range(lo, hi); });
    }
    for (auto& th : pool) th.join();
    uint64_t total = 0;
    for (uint64_t v : partial) total += v; // fixed shard order
    return 2 * total;
}

double capacity_bound_binary(size_t t) {
    if (t < 1) throw std::invalid_argument("capacity_bound_binary: t must be >= 1");
    const double td = double(t);
    return 1.0 + td * td - td * std::log2(td / std::exp(1.0));
}

double capacity_bound_nstate(size_t t, size_t n) {
    if (t < 1) throw std::invalid_argument("capacity_bound_nstate: t must be >= 1");
    if (n < 2) throw std::invalid_argument("capacity_bound_nstate: n must be >= 2");
    const double td = double(t);
    return 1.0 + td * td * std::log2(double(n)) - td * std::log2(td / std::exp(1.0));
}

GeneralBound capacity_bound_general(size_t m, size_t t) {
    if (m < 1 || t < 1) throw std::invalid_argument("capacity_bound_general: need m >= 1, t >= 1");
    // sum_{k=0}^{t-1} C(m-1, k); t <= m-1 terms of a 63-bit-safe magnitude for
    // the supported grid (m <= 64, t <= 6 in tests; guard anyway).
    if (m > 64 || t > 16) {
        throw std::invalid_argument("capacity_bound_general: grid limited to m <= 64, t <= 16");
    }
    long double sum = 0;
    long double c = 1; // C(m-1, 0)
    for (size_t k = 0; k < t; ++k) {
        if (k > 0) {
            if (k > m - 1) break; // C(m-1,k) = 0 beyond
            c = c * (long double)(m - k) / (long double)k;
        }
        sum += c;
    }
    GeneralBound b;
    b.binomial_sum = double(std::log2(2.0L * sum));
    b.relaxed = 1.0 + double(t) * std::log2(std::exp(1.0) * double(m) / double(t));
    return b;
}

std::vector<CapacityRow> capacity_curve(size_t t_max, const std::vector<size_t>& n_list,
                                        const std::vector<double>& kappas, size_t threads,
                                        bool allow_large) {
    if (t_max < 1 || t_max > 4) throw std::invalid_argument("capacity_curve: t_max must lie in [1,4]");
    std::vector<CapacityRow> rows;
    for (size_t t = 1; t <= t_max; ++t) {
        for (size_t n : n_list) {
            if (n < 2 || n > 4) throw std::invalid_argument("capacity_curve: n must lie in [2,4]");
            if (kappas.size() + 2 < n) {
                throw std::invalid_argument("capacity_curve: n = " + std::to_string(n) +
                                            " needs " + std::to_string(n - 2) +
                                            " kappa value(s) beyond {0,1}");
            }
            CapacityRow row;
            row.t = t;
            row.n = n;
            std::vector<double> alphabet{0.0, 1.0};
            for (size_t i = 0; i + 2 < n; ++i) {
                alphabet.push_back(kappas[i]);
                row.kappas.push_back(kappas[i]);
            }
            row.bound = capacity_bound_nstate(t, n);
            size_t m = 1;
            for (size_t i = 0; i < t; ++i) m *= n;
            if (m <= (allow_large ? size_t(20) : size_t(16))) {
                StateCube cube = make_state_cube(t, alphabet, allow_large);
                row.has_exact = true;
                row.exact_count = count_threshold_functions(cube, threads);
                row.exact_capacity = std::log2(double(row.exact_count));
                row.satisfied = row.exact_capacity <= row.bound;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

CsvTable capacity_rows_to_csv(const std::vector<CapacityRow>& rows) {
    CsvTable csv;
    csv.header = {"t", "n", "kappas", "exact_count", "exact_capacity", "bound", "satisfied"};
    for (const auto& r : rows) {
        std::string kap;
        for (size_t i = 0; i < r.kappas.size(); ++i) {
            if (i) kap += ";";
            kap += format_real(r.kappas[i]);
        }
        csv.rows.push_back({std::to_string(r.t), std::to_string(r.n), kap,
                            r.has_exact ? std::to_string(r.exact_count) : "",
                            r.has_exact ? format_real(r.exact_capacity) : "",
                            format_real(r.bound), r.satisfied ? "true" : "false"});
    }
    return csv;
}

std::string capacity_rows_to_svg(const std::vector<CapacityRow>& rows) {
    const double W = 640, H = 420, ML = 60, MR = 20, MT = 30, MB = 50;
    double tmax = 1, ymax = 1;
    for (const auto& r : rows) {
        tmax = std::max(tmax, double(r.t));
        ymax = std::max(ymax, r.bound);
        if (r.has_exact) ymax = std::max(ymax, r.exact_capacity);
    }
    auto X = [&](double t) { return ML + (W - ML - MR) * (tmax <= 1 ? 0.5 : (t - 1) / (tmax - 1)); };
    auto Y = [&](double v) { return H - MB - (H - MT - MB) * (v / ymax); };

    SvgBuilder svg(W, H);
    svg.rect(0, 0, W, H, "white");
    svg.line(ML, H - MB, W - MR, H - MB, "black", 1);
    svg.line(ML, MT, ML, H - MB, "black", 1);
    svg.text(W / 2, H - 12, "sequence length t", 13, "middle");
    svg.text(14, MT - 10, "capacity (bits)", 13);
    for (size_t t = 1; t <= size_t(tmax); ++t) {
        svg.text(X(double(t)), H - MB + 18, std::to_string(t), 12, "middle");
    }
    for (double v = 0; v <= ymax; v += ymax > 20 ? 10 : 5) {
        svg.text(ML - 8, Y(v) + 4, format_real(v), 11, "end");
        svg.line(ML, Y(v), W - MR, Y(v), "#dddddd", 0.5);
    }

    std::vector<size_t> ns;
    for (const auto& r : rows) {
        if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
    }
    const std::vector<std::string> colors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    for (size_t k = 0; k < ns.size(); ++k) {
        const std::string& col = colors[k % colors.size()];
        std::vector<std::pair<double, double>> bounds, exacts;
        for (const auto& r : rows) {
            if (r.n != ns[k]) continue;
            bounds.emplace_back(X(double(r.t)), Y(r.bound));
            if (r.has_exact) exacts.emplace_back(X(double(r.t)), Y(r.exact_capacity));
        }
        svg.polyline(bounds, col, 1.8);
        for (auto& p : exacts) svg.circle(p.first, p.second, 3.2, col);
        svg.text(bounds.back().first - 4, bounds.back().second - 6, "n=" + std::to_string(ns[k]), 12,
                 "end");
    }
    return svg.finish();
}

} // namespace lifb
