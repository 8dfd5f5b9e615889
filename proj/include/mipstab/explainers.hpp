#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mipstab/dataset.hpp"
#include "mipstab/models.hpp"

namespace mipstab {

enum class ExplainerKind { kernel_shap, exact_shap, permutation, native };

ExplainerKind explainer_kind_from_string(const std::string& name);
std::string to_string(ExplainerKind kind);

struct ExplainerSpec {
    ExplainerKind kind = ExplainerKind::kernel_shap;
    int n_coalition_samples = 128;   // kernel_shap; >= 2^d - 2 switches to full enumeration
    int n_permutation_repeats = 20;  // permutation
    int background_size = 100;
    std::uint64_t seed = 0;
};

/// Per-row attributions. Row i of per_row holds the phi vector for test row i;
/// base_value is the expected model output over the background set.
struct Attribution {
    Eigen::MatrixXd per_row;
    double base_value = 0.0;
};

/// Deterministic background subsample (at most `size` rows) of a training set.
Dataset background_sample(const Dataset& train, int size, std::uint64_t seed);

/// Kernel SHAP for one row: Shapley-kernel-weighted least squares over
/// coalitions with marginal (background-averaging) imputation. The additivity
/// constraint sum(phi) = f(x) - base is enforced exactly. When
/// spec.n_coalition_samples covers all 2^d - 2 proper coalitions the solve is
/// a full enumeration and equals the exact Shapley value.
std::pair<Eigen::VectorXd, double> kernel_shap_row(const FittedModel& model,
                                                   const Dataset& background,
                                                   const Eigen::RowVectorXd& x,
                                                   const ExplainerSpec& spec);

/// Exact Shapley values by enumeration of the 2^d coalition lattice with
/// marginal imputation. Guarded to d <= 15.
std::pair<Eigen::VectorXd, double> exact_shap_row(const FittedModel& model,
                                                  const Dataset& background,
                                                  const Eigen::RowVectorXd& x);

/// Per-row attributions for every row of `test` (shap kinds only).
Attribution attribute_rows(const FittedModel& model, const Dataset& background,
                           const Dataset& test, const ExplainerSpec& spec, int n_threads = 1);

/// Global importances: mean |phi| for shap kinds, mean accuracy drop for
/// permutation, native magnitudes otherwise. Order follows the model's
/// fit-time features.
std::vector<std::pair<FeatureId, double>> explain_global(const FittedModel& model,
                                                         const Dataset& background,
                                                         const Dataset& test,
                                                         const ExplainerSpec& spec,
                                                         int n_threads = 1);

/// Baseline accuracy minus mean accuracy with column i shuffled, per feature.
std::vector<std::pair<FeatureId, double>> permutation_importance(const FittedModel& model,
                                                                 const Dataset& data, int repeats,
                                                                 std::uint64_t seed);

}  // namespace mipstab
