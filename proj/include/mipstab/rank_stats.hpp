#pragma once

#include <string>
#include <vector>

#include "mipstab/core.hpp"

namespace mipstab {

enum class Alternative { two_sided, greater, less };

Alternative alternative_from_string(const std::string& name);
std::string to_string(Alternative alternative);

/// Kendall correlation with its p-value computed both ways where possible.
/// `p` is the exact permutation value when available, otherwise the normal
/// approximation.
struct TauResult {
    double tau = 0.0;
    double p = 1.0;
    double p_asymptotic = 1.0;  // normal approximation, tie-adjusted variance
    double p_exact = 1.0;       // permutation distribution; valid if exact_available
    bool exact_available = false;
};

struct CorrelationResult {
    double r = 0.0;
    double p = 1.0;  // t distribution, n - 2 degrees of freedom
};

/// Kendall's tau_b with tie correction. The exact p uses the inversion-count
/// permutation distribution and is computed for n <= 10 with no ties.
TauResult kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y,
                        Alternative alternative = Alternative::two_sided);

/// Pearson correlation with a t-based p-value.
CorrelationResult pearson_r(const std::vector<double>& x, const std::vector<double>& y,
                            Alternative alternative = Alternative::two_sided);

/// Writes `ranking` as the sequence of integer codes assigned by `coding`
/// (the feature listed first in `coding` has code 1, and so on). Both
/// rankings must contain exactly the coding's features.
std::vector<double> coded_order(const Ranking& coding, const Ranking& ranking);

/// Regularized incomplete beta function I_x(a, b); exposed for tests.
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace mipstab
