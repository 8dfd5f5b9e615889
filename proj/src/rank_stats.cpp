#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "mipstab/errors.hpp"
#include "mipstab/rank_stats.hpp"

namespace mipstab {

namespace {

void check_inputs(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw Error(ErrorCode::structure_mismatch, "vectors must have equal length");
    if (x.size() < 3) throw Error(ErrorCode::bad_input, "need at least 3 observations");
    for (double v : x) {
        if (!std::isfinite(v)) throw Error(ErrorCode::bad_input, "non-finite value in x");
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw Error(ErrorCode::bad_input, "non-finite value in y");
    }
    const bool x_constant = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    const bool y_constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (x_constant || y_constant)
        throw Error(ErrorCode::undefined_statistic, "correlation is undefined for constant input");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double sided_p_from_z(double z, Alternative alternative) {
    switch (alternative) {
        case Alternative::two_sided: return 2.0 * (1.0 - normal_cdf(std::abs(z)));
        case Alternative::greater: return 1.0 - normal_cdf(z);
        case Alternative::less: return normal_cdf(z);
    }
    throw Error(ErrorCode::bad_input, "unrecognized alternative");
}

/// Counts of permutations of n items by inversion number (Mahonian
/// distribution), as cumulative probabilities.
std::vector<double> inversion_cdf(int n) {
    const int max_inversions = n * (n - 1) / 2;
    std::vector<double> counts(static_cast<std::size_t>(max_inversions) + 1, 0.0);
    counts[0] = 1.0;
    for (int m = 2; m <= n; ++m) {
        std::vector<double> next(counts.size(), 0.0);
        double window = 0.0;
        for (int k = 0; k < static_cast<int>(counts.size()); ++k) {
            window += counts[static_cast<std::size_t>(k)];
            if (k >= m) window -= counts[static_cast<std::size_t>(k - m)];
            next[static_cast<std::size_t>(k)] = window;
        }
        counts.swap(next);
    }
    double total = 0.0;
    for (double c : counts) total += c;
    std::vector<double> cdf(counts.size());
    double running = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        running += counts[k];
        cdf[k] = running / total;
    }
    return cdf;
}

double continued_fraction_beta(double a, double b, double x) {
    const double tiny = 1e-300;
    const int max_iter = 300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-14) break;
    }
    return h;
}

}  // namespace

Alternative alternative_from_string(const std::string& name) {
    if (name == "two_sided" || name == "two-sided") return Alternative::two_sided;
    if (name == "greater") return Alternative::greater;
    if (name == "less") return Alternative::less;
    throw Error(ErrorCode::bad_input, "unknown alternative: " + name);
}

std::string to_string(Alternative alternative) {
    switch (alternative) {
        case Alternative::two_sided: return "two_sided";
        case Alternative::greater: return "greater";
        case Alternative::less: return "less";
    }
    throw Error(ErrorCode::bad_input, "unrecognized alternative");
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0)
        throw Error(ErrorCode::domain, "incomplete beta requires positive shape parameters");
    if (x < 0.0 || x > 1.0) throw Error(ErrorCode::domain, "incomplete beta requires x in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * continued_fraction_beta(a, b, x) / a;
    }
    return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                          b * std::log1p(-x) + a * std::log(x)) *
                     continued_fraction_beta(b, a, 1.0 - x) / b;
}

TauResult kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y,
                        Alternative alternative) {
    check_inputs(x, y);
    const int n = static_cast<int>(x.size());

    long concordant = 0, discordant = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double dx = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
            const double dy = y[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)];
            const double product = dx * dy;
            if (product > 0.0) ++concordant;
            else if (product < 0.0) ++discordant;
        }
    }

    auto tie_sizes = [](const std::vector<double>& v) {
        std::map<double, long> groups;
        for (double value : v) ++groups[value];
        std::vector<long> sizes;
        for (const auto& [value, count] : groups) {
            (void)value;
            if (count > 1) sizes.push_back(count);
        }
        return sizes;
    };
    const std::vector<long> ties_x = tie_sizes(x);
    const std::vector<long> ties_y = tie_sizes(y);

    const double n_pairs = 0.5 * n * (n - 1.0);
    double tx = 0.0, ty = 0.0;
    for (long t : ties_x) tx += 0.5 * t * (t - 1.0);
    for (long t : ties_y) ty += 0.5 * t * (t - 1.0);

    TauResult result;
    const double s = static_cast<double>(concordant - discordant);
    result.tau = s / std::sqrt((n_pairs - tx) * (n_pairs - ty));

    // Tie-adjusted variance of S for the normal approximation.
    const double nd = n;
    double v0 = nd * (nd - 1.0) * (2.0 * nd + 5.0);
    double vt = 0.0, vu = 0.0, t1 = 0.0, t2 = 0.0, u1 = 0.0, u2 = 0.0;
    for (long t : ties_x) {
        vt += t * (t - 1.0) * (2.0 * t + 5.0);
        t1 += t * (t - 1.0) * (t - 2.0);
        t2 += t * (t - 1.0);
    }
    for (long u : ties_y) {
        vu += u * (u - 1.0) * (2.0 * u + 5.0);
        u1 += u * (u - 1.0) * (u - 2.0);
        u2 += u * (u - 1.0);
    }
    double variance = (v0 - vt - vu) / 18.0;
    if (n > 2) variance += t1 * u1 / (9.0 * nd * (nd - 1.0) * (nd - 2.0));
    variance += t2 * u2 / (2.0 * nd * (nd - 1.0));
    const double z = variance > 0.0 ? s / std::sqrt(variance) : 0.0;
    result.p_asymptotic = std::clamp(sided_p_from_z(z, alternative), 0.0, 1.0);
    result.p = result.p_asymptotic;

    const bool no_ties = ties_x.empty() && ties_y.empty();
    if (n <= 10 && no_ties) {
        // With no ties, discordant pairs = inversions of y ordered by x.
        const std::vector<double> cdf = inversion_cdf(n);
        const long max_inv = static_cast<long>(cdf.size()) - 1;
        auto prob_le = [&](long k) {
            if (k < 0) return 0.0;
            return cdf[static_cast<std::size_t>(std::min(k, max_inv))];
        };
        // The inversion distribution is symmetric: P(D >= k) = P(D <= max - k).
        const double p_greater = prob_le(discordant);
        const double p_less = prob_le(max_inv - discordant);
        switch (alternative) {
            case Alternative::two_sided:
                result.p_exact = std::min(1.0, 2.0 * std::min(p_greater, p_less));
                break;
            case Alternative::greater: result.p_exact = p_greater; break;
            case Alternative::less: result.p_exact = p_less; break;
        }
        result.exact_available = true;
        result.p = result.p_exact;
    }
    return result;
}

CorrelationResult pearson_r(const std::vector<double>& x, const std::vector<double>& y,
                            Alternative alternative) {
    check_inputs(x, y);
    const int n = static_cast<int>(x.size());

    double mean_x = 0.0, mean_y = 0.0;
    for (int i = 0; i < n; ++i) {
        mean_x += x[static_cast<std::size_t>(i)];
        mean_y += y[static_cast<std::size_t>(i)];
    }
    mean_x /= n;
    mean_y /= n;

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dx = x[static_cast<std::size_t>(i)] - mean_x;
        const double dy = y[static_cast<std::size_t>(i)] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }

    CorrelationResult result;
    result.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

    const double df = n - 2.0;
    if (std::abs(result.r) >= 1.0) {
        result.p = alternative == Alternative::two_sided
                       ? 0.0
                       : ((result.r > 0) == (alternative == Alternative::greater) ? 0.0 : 1.0);
        return result;
    }
    const double t = result.r * std::sqrt(df / (1.0 - result.r * result.r));
    const double p_two = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    switch (alternative) {
        case Alternative::two_sided: result.p = p_two; break;
        case Alternative::greater: result.p = t >= 0.0 ? p_two / 2.0 : 1.0 - p_two / 2.0; break;
        case Alternative::less: result.p = t <= 0.0 ? p_two / 2.0 : 1.0 - p_two / 2.0; break;
    }
    result.p = std::clamp(result.p, 0.0, 1.0);
    return result;
}

std::vector<double> coded_order(const Ranking& coding, const Ranking& ranking) {
    if (coding.size() != ranking.size())
        throw Error(ErrorCode::structure_mismatch, "coding and ranking sizes differ");
    std::vector<double> codes;
    codes.reserve(ranking.size());
    for (const FeatureId& feature : ranking.features()) {
        const std::size_t code = coding.position_of(feature);
        if (code == 0)
            throw Error(ErrorCode::structure_mismatch,
                        "feature " + feature.name + " is absent from the coding");
        codes.push_back(static_cast<double>(code));
    }
    return codes;
}

}  // namespace mipstab
