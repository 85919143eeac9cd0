#include "lifb/rational_lp.hpp"

#include <stdexcept>
#include <string>

namespace lifb {

bool check_separator(const std::vector<std::vector<mpq_class>>& points,
                     const std::vector<int>& labels,
                     const std::vector<mpq_class>& a, const mpq_class& b) {
    for (size_t i = 0; i < points.size(); ++i) {
        mpq_class v = b;
        for (size_t j = 0; j < a.size(); ++j) v += a[j] * points[i][j];
        if (labels[i] == 1) {
            if (v < 1) return false;
        } else {
            if (v > 0) return false;
        }
    }
    return true;
}

static void validate_input(const std::vector<std::vector<mpq_class>>& points,
                           const std::vector<int>& labels, const char* where) {
    if (points.empty()) throw std::invalid_argument(std::string(where) + ": no points");
    if (points.size() != labels.size()) {
        throw std::invalid_argument(std::string(where) + ": point/label count mismatch");
    }
    const size_t t = points[0].size();
    if (t == 0) throw std::invalid_argument(std::string(where) + ": zero-dimensional points");
    for (const auto& p : points) {
        if (p.size() != t) throw std::invalid_argument(std::string(where) + ": ragged point dimensions");
    }
    for (int l : labels) {
        if (l != 0 && l != 1) throw std::invalid_argument(std::string(where) + ": labels must be 0/1");
    }
}

SeparabilityResult linear_separability(const std::vector<std::vector<mpq_class>>& points,
                                       const std::vector<int>& labels) {
    validate_input(points, labels, "linear_separability");
    const size_t m = points.size();
    const size_t t = points[0].size();

    // Structural columns: a+ (t), a- (t), b+, b-, one slack per row.
    // Artificial columns: one per label-1 row (label-0 rows start feasible
    // with their slack basic at rhs 0).
    const size_t n_struct = 2 * t + 2 + m;
    size_t n_art = 0;
    for (int l : labels) n_art += (l == 1);
    const size_t n = n_struct + n_art;

    // tableau[i] = constraint row (n coefficient cols + rhs); last row is the
    // phase-1 reduced-cost row with the negated objective value in its rhs.
    std::vector<std::vector<mpq_class>> T(m + 1, std::vector<mpq_class>(n + 1, 0));
    std::vector<size_t> basis(m);
    size_t art = 0;
    for (size_t i = 0; i < m; ++i) {
        const bool one = labels[i] == 1;
        for (size_t j = 0; j < t; ++j) {
            T[i][j] = points[i][j];
            T[i][t + j] = -points[i][j];
        }
        T[i][2 * t] = 1;
        T[i][2 * t + 1] = -1;
        T[i][2 * t + 2 + i] = one ? -1 : 1; // slack: surplus on >= rows
        if (one) {
            T[i][n_struct + art] = 1;
            basis[i] = n_struct + art;
            ++art;
            T[i][n] = 1; // margin rhs
        } else {
            basis[i] = 2 * t + 2 + i;
            T[i][n] = 0;
        }
    }
    // Phase-1 objective: minimize the artificial sum. Reduced costs start as
    // c_j - sum over artificial-basic rows of T[i][j]; artificial columns have
    // cost 1 and cancel to 0.
    for (size_t i = 0; i < m; ++i) {
        if (labels[i] != 1) continue;
        for (size_t j = 0; j <= n; ++j) T[m][j] -= T[i][j];
    }
    for (size_t k = 0; k < n_art; ++k) T[m][n_struct + k] += 1;

    // Bland's rule: smallest improving column, smallest basic index on ties.
    // Finite termination guaranteed, no tolerance anywhere.
    for (;;) {
        size_t enter = n;
        for (size_t j = 0; j < n; ++j) {
            if (T[m][j] < 0) {
                enter = j;
                break;
            }
        }
        if (enter == n) break; // optimal
        size_t leave = m;
        mpq_class best;
        for (size_t i = 0; i < m; ++i) {
            if (T[i][enter] > 0) {
                mpq_class ratio = T[i][n] / T[i][enter];
                if (leave == m || ratio < best ||
                    (ratio == best && basis[i] < basis[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave == m) {
            // Phase-1 objective is bounded below by 0, so an unbounded ray
            // cannot occur here.
            throw std::logic_error("linear_separability: unbounded phase-1 column");
        }
        const mpq_class piv = T[leave][enter];
        for (size_t j = 0; j <= n; ++j) T[leave][j] /= piv;
        for (size_t i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const mpq_class f = T[i][enter];
            if (f == 0) continue;
            for (size_t j = 0; j <= n; ++j) T[i][j] -= f * T[leave][j];
        }
        basis[leave] = enter;
    }

    SeparabilityResult res;
    // rhs of the cost row holds -w at optimum; feasible iff w == 0.
    res.separable = (T[m][n] == 0);
    if (res.separable) {
        std::vector<mpq_class> x(n, 0);
        for (size_t i = 0; i < m; ++i) x[basis[i]] = T[i][n];
        res.a.resize(t);
        for (size_t j = 0; j < t; ++j) res.a[j] = x[j] - x[t + j];
        res.b = x[2 * t] - x[2 * t + 1];
        if (!check_separator(points, labels, res.a, res.b)) {
            throw std::logic_error("linear_separability: certificate failed verification");
        }
    }
    return res;
}

bool perceptron_separable(const std::vector<std::vector<mpq_class>>& points,
                          const std::vector<int>& labels, size_t max_updates) {
    validate_input(points, labels, "perceptron_separable");
    const size_t m = points.size();
    const size_t t = points[0].size();
    std::vector<mpq_class> a(t, 0);
    mpq_class b = 0;
    size_t updates = 0;
    for (;;) {
        bool clean = true;
        for (size_t i = 0; i < m; ++i) {
            mpq_class v = b;
            for (size_t j = 0; j < t; ++j) v += a[j] * points[i][j];
            const int y = labels[i] == 1 ? 1 : -1;
            if (y * v < 1) {
                for (size_t j = 0; j < t; ++j) a[j] += y * points[i][j];
                b += y;
                clean = false;
                if (++updates >= max_updates) return false;
            }
        }
        if (clean) {
            if (!check_separator(points, labels, a, b)) {
                throw std::logic_error("perceptron_separable: converged to invalid separator");
            }
            return true;
        }
    }
}

} // namespace lifb
