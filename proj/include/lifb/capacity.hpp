#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

#include "lifb/io_util.hpp"

namespace lifb {

/// All n^t points of alphabet^t in lexicographic order (first coordinate most
/// significant). Alphabet values are converted from their 64-bit binary
/// representation to exact rationals, so the separability decisions are exact
/// for the precise values given.
struct StateCube {
    size_t t = 0;
    std::vector<double> alphabet;
    std::vector<std::vector<mpq_class>> points;
};

/// Budget: exact counting enumerates 2^(n^t) labelings, so n^t <= 16 by
/// default; allow_large lifts the ceiling to n^t <= 20 (about one million
/// feasibility solves after symmetry reduction). t <= 4 and n <= 4 always.
StateCube make_state_cube(size_t t, const std::vector<double>& alphabet, bool allow_large = false);

/// Number of threshold functions on the cube: labelings f with
/// f(s) = H(<a,s> + b) for some (a, b), H(0) = 0. Counted by exhaustive
/// enumeration of labelings with an exact feasibility decision for each.
/// A labeling and its complement are separable together or not at all, so only
/// labelings with point 0 labeled 0 are solved and the count is doubled.
/// threads = 0 reads LIFB_THREADS (default 1); sharding is deterministic.
uint64_t count_threshold_functions(const StateCube& cube, size_t threads = 0);

/// 1 + t^2 - t*log2(t/e). t >= 1.
double capacity_bound_binary(size_t t);

/// 1 + t^2*log2(n) - t*log2(t/e). t >= 1, n >= 2. Reduces to the binary bound
/// at n = 2.
double capacity_bound_nstate(size_t t, size_t n);

struct GeneralBound {
    double binomial_sum; // log2(2 * sum_{k<t} C(m-1,k)), exact region count
    double relaxed;      // 1 + t*log2(e*m/t), its closed-form relaxation
};

/// Bounds for an arbitrary point-set size m. m >= 1, t >= 1; the relaxed form
/// dominates the binomial form whenever m >= t.
GeneralBound capacity_bound_general(size_t m, size_t t);

struct CapacityRow {
    size_t t = 0;
    size_t n = 0;
    std::vector<double> kappas; // extra alphabet values beyond {0,1}
    bool has_exact = false;
    uint64_t exact_count = 0;
    double exact_capacity = 0; // log2(exact_count)
    double bound = 0;          // n-state closed-form bound
    bool satisfied = true;     // exact_capacity <= bound when both known
};

/// One row per (t, n) pair, t = 1..t_max. n-state alphabets are {0, 1}
/// extended by the first n-2 kappa values, which must be supplied, distinct,
/// and different from 0 and 1. Exact counts are filled where the default
/// budget allows; bounds always.
std::vector<CapacityRow> capacity_curve(size_t t_max, const std::vector<size_t>& n_list,
                                        const std::vector<double>& kappas, size_t threads = 0,
                                        bool allow_large = false);

CsvTable capacity_rows_to_csv(const std::vector<CapacityRow>& rows);

/// Line chart of bound (and exact capacity where present) vs t, one series
/// per n.
std::string capacity_rows_to_svg(const std::vector<CapacityRow>& rows);

} // namespace lifb
