#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "mipstab/errors.hpp"
#include "mipstab/explainers.hpp"
#include "mipstab/rng.hpp"

namespace mipstab {

namespace {

void require_arity(const FittedModel& model, const Dataset& background,
                   const Eigen::RowVectorXd& x) {
    if (background.n_rows() < 1)
        throw Error(ErrorCode::bad_input, "background set must be non-empty");
    const auto d = static_cast<Eigen::Index>(model.feature_names().size());
    if (background.n_features() != d)
        throw Error(ErrorCode::structure_mismatch, "background width does not match the model");
    if (x.size() != d)
        throw Error(ErrorCode::structure_mismatch, "row width does not match the model");
}

/// Mean model output with coalition features taken from x, the rest from
/// each background row in turn.
double coalition_value(const FittedModel& model, const Dataset& background,
                       const Eigen::RowVectorXd& x, std::uint32_t mask) {
    const Eigen::Index d = x.size();
    Eigen::RowVectorXd hybrid(d);
    double sum = 0.0;
    for (Eigen::Index b = 0; b < background.n_rows(); ++b) {
        hybrid = background.X.row(b);
        for (Eigen::Index j = 0; j < d; ++j) {
            if (mask & (1u << j)) hybrid[j] = x[j];
        }
        sum += model.explained_output(hybrid);
    }
    return sum / static_cast<double>(background.n_rows());
}

double shapley_kernel_weight(int d, int size) {
    double log_choose = 0.0;
    for (int i = 0; i < size; ++i) {
        log_choose += std::log(static_cast<double>(d - i)) - std::log(static_cast<double>(i + 1));
    }
    return (static_cast<double>(d) - 1.0) /
           (std::exp(log_choose) * static_cast<double>(size) * static_cast<double>(d - size));
}

/// Sampled coalitions with dedup: mask -> accumulated draw count. Paired
/// sampling (each subset together with its complement), sizes drawn from the
/// Shapley-kernel size distribution.
std::unordered_map<std::uint32_t, double> sample_coalitions(int d, int n_samples,
                                                            std::uint64_t seed) {
    std::vector<double> size_weight(static_cast<std::size_t>(d), 0.0);
    double total = 0.0;
    for (int s = 1; s <= d - 1; ++s) {
        size_weight[static_cast<std::size_t>(s)] =
            (static_cast<double>(d) - 1.0) / (static_cast<double>(s) * static_cast<double>(d - s));
        total += size_weight[static_cast<std::size_t>(s)];
    }

    Rng rng(seed);
    std::vector<int> indices(static_cast<std::size_t>(d));
    std::iota(indices.begin(), indices.end(), 0);
    const std::uint32_t full = (d >= 32) ? 0xffffffffu : ((1u << d) - 1u);

    std::unordered_map<std::uint32_t, double> counts;
    int collected = 0;
    while (collected < n_samples) {
        double pick = rng.uniform() * total;
        int size = 1;
        for (int s = 1; s <= d - 1; ++s) {
            pick -= size_weight[static_cast<std::size_t>(s)];
            if (pick <= 0.0) {
                size = s;
                break;
            }
            size = s;
        }
        for (int i = 0; i < size; ++i) {
            std::swap(indices[static_cast<std::size_t>(i)],
                      indices[static_cast<std::size_t>(i + static_cast<int>(rng.below(
                                                               static_cast<std::uint64_t>(d - i))))]);
        }
        std::uint32_t mask = 0;
        for (int i = 0; i < size; ++i) mask |= 1u << indices[static_cast<std::size_t>(i)];
        counts[mask] += 1.0;
        ++collected;
        if (collected < n_samples) {
            counts[full & ~mask] += 1.0;
            ++collected;
        }
    }
    return counts;
}

/// Solves the constrained weighted least squares given (mask, weight) pairs.
/// Returns false when the system is rank-deficient.
bool solve_weighted(const FittedModel& model, const Dataset& background,
                    const Eigen::RowVectorXd& x,
                    const std::vector<std::pair<std::uint32_t, double>>& coalitions, double base,
                    double fx, Eigen::VectorXd* phi) {
    const int d = static_cast<int>(x.size());
    const Eigen::Index m = static_cast<Eigen::Index>(coalitions.size());
    if (m < d - 1) return false;

    // Last feature's phi is eliminated through the additivity constraint.
    Eigen::MatrixXd A(m, d - 1);
    Eigen::VectorXd t(m), w(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const std::uint32_t mask = coalitions[static_cast<std::size_t>(r)].first;
        w[r] = coalitions[static_cast<std::size_t>(r)].second;
        const double z_last = (mask & (1u << (d - 1))) ? 1.0 : 0.0;
        for (int j = 0; j < d - 1; ++j) {
            A(r, j) = ((mask & (1u << j)) ? 1.0 : 0.0) - z_last;
        }
        t[r] = coalition_value(model, background, x, mask) - base - z_last * (fx - base);
    }

    const Eigen::MatrixXd AtW = A.transpose() * w.asDiagonal();
    const Eigen::MatrixXd G = AtW * A;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    if (!lu.isInvertible()) return false;

    const Eigen::VectorXd head = lu.solve(AtW * t);
    phi->resize(d);
    phi->head(d - 1) = head;
    (*phi)[d - 1] = (fx - base) - head.sum();
    return true;
}

}  // namespace

ExplainerKind explainer_kind_from_string(const std::string& name) {
    if (name == "kernel_shap") return ExplainerKind::kernel_shap;
    if (name == "exact_shap") return ExplainerKind::exact_shap;
    if (name == "permutation") return ExplainerKind::permutation;
    if (name == "native") return ExplainerKind::native;
    throw Error(ErrorCode::bad_input, "unknown explainer kind: " + name);
}

std::string to_string(ExplainerKind kind) {
    switch (kind) {
        case ExplainerKind::kernel_shap: return "kernel_shap";
        case ExplainerKind::exact_shap: return "exact_shap";
        case ExplainerKind::permutation: return "permutation";
        case ExplainerKind::native: return "native";
    }
    throw Error(ErrorCode::bad_input, "unrecognized explainer kind");
}

Dataset background_sample(const Dataset& train, int size, std::uint64_t seed) {
    train.validate();
    if (size < 1) throw Error(ErrorCode::bad_input, "background_size must be >= 1");
    if (train.n_rows() <= size) return train;
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(train.n_rows()));
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng(mix_seed(seed, 0x62616b67u));
    rng.shuffle(rows);
    rows.resize(static_cast<std::size_t>(size));
    std::sort(rows.begin(), rows.end());
    return train.take_rows(rows);
}

std::pair<Eigen::VectorXd, double> kernel_shap_row(const FittedModel& model,
                                                   const Dataset& background,
                                                   const Eigen::RowVectorXd& x,
                                                   const ExplainerSpec& spec) {
    require_arity(model, background, x);
    if (spec.n_coalition_samples < 1)
        throw Error(ErrorCode::bad_input, "n_coalition_samples must be >= 1");
    const int d = static_cast<int>(x.size());
    if (d > 30) throw Error(ErrorCode::cost_guard, "kernel_shap supports at most 30 features");

    const double base = coalition_value(model, background, x, 0u);
    const double fx = model.explained_output(x);

    Eigen::VectorXd phi;
    if (d == 1) {
        phi.resize(1);
        phi[0] = fx - base;
        return {phi, base};
    }

    const std::uint64_t n_proper = (1ull << d) - 2;
    if (static_cast<std::uint64_t>(spec.n_coalition_samples) >= n_proper) {
        std::vector<std::pair<std::uint32_t, double>> coalitions;
        coalitions.reserve(n_proper);
        std::vector<double> weight_by_size(static_cast<std::size_t>(d));
        for (int s = 1; s <= d - 1; ++s)
            weight_by_size[static_cast<std::size_t>(s)] = shapley_kernel_weight(d, s);
        for (std::uint32_t mask = 1; mask < (1u << d) - 1u; ++mask) {
            const int size = std::popcount(mask);
            coalitions.emplace_back(mask, weight_by_size[static_cast<std::size_t>(size)]);
        }
        if (!solve_weighted(model, background, x, coalitions, base, fx, &phi))
            throw Error(ErrorCode::degenerate_system, "kernel_shap enumeration system is singular");
        return {phi, base};
    }

    int samples = spec.n_coalition_samples;
    for (int attempt = 0; attempt < 3; ++attempt) {
        const auto counts =
            sample_coalitions(d, samples, mix_seed(spec.seed, 0x6b736d70u + static_cast<std::uint64_t>(attempt)));
        std::vector<std::pair<std::uint32_t, double>> coalitions(counts.begin(), counts.end());
        std::sort(coalitions.begin(), coalitions.end());
        if (solve_weighted(model, background, x, coalitions, base, fx, &phi)) return {phi, base};
        samples = std::min<int>(samples * 2, static_cast<int>(std::min<std::uint64_t>(n_proper, 1u << 20)));
    }
    throw Error(ErrorCode::degenerate_system,
                "kernel_shap sampling produced a degenerate coalition system");
}

std::pair<Eigen::VectorXd, double> exact_shap_row(const FittedModel& model,
                                                  const Dataset& background,
                                                  const Eigen::RowVectorXd& x) {
    require_arity(model, background, x);
    const int d = static_cast<int>(x.size());
    if (d > 15)
        throw Error(ErrorCode::cost_guard, "exact_shap enumerates 2^d coalitions; d must be <= 15");

    const std::uint32_t n_masks = 1u << d;
    std::vector<double> value(n_masks);
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
        value[mask] = coalition_value(model, background, x, mask);
    }

    std::vector<double> factorial(static_cast<std::size_t>(d) + 1, 1.0);
    for (int i = 1; i <= d; ++i)
        factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i - 1)] * i;

    Eigen::VectorXd phi = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) {
        const std::uint32_t bit = 1u << i;
        for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            const int s = std::popcount(mask);
            const double coeff = factorial[static_cast<std::size_t>(s)] *
                                 factorial[static_cast<std::size_t>(d - s - 1)] /
                                 factorial[static_cast<std::size_t>(d)];
            phi[i] += coeff * (value[mask | bit] - value[mask]);
        }
    }
    return {phi, value[0]};
}

Attribution attribute_rows(const FittedModel& model, const Dataset& background,
                           const Dataset& test, const ExplainerSpec& spec, int n_threads) {
    test.validate();
    if (test.n_rows() < 1) throw Error(ErrorCode::bad_input, "test set must be non-empty");
    if (spec.kind != ExplainerKind::kernel_shap && spec.kind != ExplainerKind::exact_shap)
        throw Error(ErrorCode::capability, "per-row attributions exist only for shap explainers");

    const Eigen::Index n = test.n_rows();
    const auto d = static_cast<Eigen::Index>(model.feature_names().size());
    Attribution out;
    out.per_row.resize(n, d);

    double base = 0.0;
    auto explain_row = [&](Eigen::Index i) {
        ExplainerSpec row_spec = spec;
        row_spec.seed = mix_seed(spec.seed, 0x726f7700u + static_cast<std::uint64_t>(i));
        const auto [phi, row_base] =
            spec.kind == ExplainerKind::kernel_shap
                ? kernel_shap_row(model, background, test.X.row(i), row_spec)
                : exact_shap_row(model, background, test.X.row(i));
        out.per_row.row(i) = phi.transpose();
        if (i == 0) base = row_base;
    };

    const int threads = std::max(1, n_threads);
    if (threads == 1 || n == 1) {
        for (Eigen::Index i = 0; i < n; ++i) explain_row(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<Eigen::Index> cursor{0};
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (Eigen::Index i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) {
                    explain_row(i);
                }
            });
        }
        for (auto& worker : pool) worker.join();
    }
    out.base_value = base;
    return out;
}

std::vector<std::pair<FeatureId, double>> explain_global(const FittedModel& model,
                                                         const Dataset& background,
                                                         const Dataset& test,
                                                         const ExplainerSpec& spec,
                                                         int n_threads) {
    const std::vector<FeatureId>& features = model.feature_names();
    std::vector<std::pair<FeatureId, double>> out;
    out.reserve(features.size());

    switch (spec.kind) {
        case ExplainerKind::kernel_shap:
        case ExplainerKind::exact_shap: {
            const Attribution attribution = attribute_rows(model, background, test, spec, n_threads);
            for (std::size_t j = 0; j < features.size(); ++j) {
                out.emplace_back(features[j],
                                 attribution.per_row.col(static_cast<Eigen::Index>(j)).cwiseAbs().mean());
            }
            return out;
        }
        case ExplainerKind::permutation:
            return permutation_importance(model, test, spec.n_permutation_repeats, spec.seed);
        case ExplainerKind::native: {
            auto native = model.native_importances();
            if (native.empty())
                throw Error(ErrorCode::capability,
                            "model family does not expose native importances");
            return native;
        }
    }
    throw Error(ErrorCode::bad_input, "unrecognized explainer kind");
}

std::vector<std::pair<FeatureId, double>> permutation_importance(const FittedModel& model,
                                                                 const Dataset& data, int repeats,
                                                                 std::uint64_t seed) {
    data.validate();
    if (repeats < 1) throw Error(ErrorCode::bad_input, "repeats must be >= 1");
    const double baseline = accuracy(model, data);

    const Eigen::Index n = data.n_rows();
    std::vector<std::pair<FeatureId, double>> out;
    out.reserve(model.feature_names().size());
    for (std::size_t j = 0; j < model.feature_names().size(); ++j) {
        double drop_sum = 0.0;
        for (int r = 0; r < repeats; ++r) {
            std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), 0);
            Rng rng(mix_seed(seed, 0x7065726du + 131ull * static_cast<std::uint64_t>(j) +
                                       static_cast<std::uint64_t>(r)));
            rng.shuffle(order);

            Eigen::Index correct = 0;
            Eigen::RowVectorXd row(data.n_features());
            for (Eigen::Index i = 0; i < n; ++i) {
                row = data.X.row(i);
                row[static_cast<Eigen::Index>(j)] =
                    data.X(order[static_cast<std::size_t>(i)], static_cast<Eigen::Index>(j));
                if (model.predict(row) == data.y[i]) ++correct;
            }
            drop_sum += baseline - static_cast<double>(correct) / static_cast<double>(n);
        }
        out.emplace_back(model.feature_names()[j], drop_sum / static_cast<double>(repeats));
    }
    return out;
}

}  // namespace mipstab
