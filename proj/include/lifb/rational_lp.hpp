#pragma once

#include <gmpxx.h>

#include <vector>

namespace lifb {

/// Certificate-producing exact linear separability test over the rationals.
///
/// A labeling of points s_1..s_m (labels in {0,1}) is separable when some
/// affine form satisfies <a, s_i> + b > 0 for every label-1 point and
/// <a, s_i> + b <= 0 for every label-0 point (the H(0)=0 convention). On a
/// finite set this is equivalent to margin-1 feasibility
///   <a, s_i> + b >= 1  (label 1)     <a, s_i> + b <= 0  (label 0)
/// which is decided exactly by a phase-1 simplex with Bland's rule over
/// mpq_class. No tolerances are involved anywhere.
struct SeparabilityResult {
    bool separable = false;
    std::vector<mpq_class> a; // certificate when separable
    mpq_class b;
};

SeparabilityResult linear_separability(const std::vector<std::vector<mpq_class>>& points,
                                       const std::vector<int>& labels);

/// Secondary oracle: margin perceptron in exact rational arithmetic.
/// Returns true as soon as a separating form is found (then verified against
/// every constraint), false if max_updates mistake-driven updates pass without
/// convergence. Convergence is guaranteed for separable inputs given enough
/// updates, so this independently confirms the simplex verdicts on small
/// cubes.
bool perceptron_separable(const std::vector<std::vector<mpq_class>>& points,
                          const std::vector<int>& labels, size_t max_updates);

/// True when (a, b) satisfies the margin-1 system exactly.
bool check_separator(const std::vector<std::vector<mpq_class>>& points,
                     const std::vector<int>& labels,
                     const std::vector<mpq_class>& a, const mpq_class& b);

} // namespace lifb
