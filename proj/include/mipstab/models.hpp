#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mipstab/dataset.hpp"

namespace mipstab {

enum class ModelFamily {
    logistic_regression,
    decision_tree,
    random_forest,
    linear_svc,
    boosted_stumps,
};

ModelFamily model_family_from_string(const std::string& name);
std::string to_string(ModelFamily family);

/// Family plus hyperparameters. Unknown hyperparameter names are rejected
/// at training time.
struct ModelSpec {
    ModelFamily family = ModelFamily::logistic_regression;
    std::map<std::string, double> hyperparameters;

    double get(const std::string& name, double fallback) const {
        auto it = hyperparameters.find(name);
        return it == hyperparameters.end() ? fallback : it->second;
    }
};

/// Default tuning grid per family. Overridable through the run config.
std::vector<std::map<std::string, double>> default_grid(ModelFamily family);

namespace detail {
class ModelImpl;
}

/// Immutable trained classifier. Cheap to copy (shared state), safe to share
/// across threads.
class FittedModel {
  public:
    FittedModel() = default;
    FittedModel(ModelSpec spec, std::vector<FeatureId> features,
                std::shared_ptr<const detail::ModelImpl> impl, bool converged);

    const ModelSpec& spec() const { return spec_; }
    const std::vector<FeatureId>& feature_names() const { return features_; }
    bool converged() const { return converged_; }

    /// Raw decision score (margin for SVC, log-odds/score otherwise).
    double decision(const Eigen::RowVectorXd& row) const;
    /// The output explainers attribute: probability for logistic regression
    /// and tree models, margin for the linear SVC.
    double explained_output(const Eigen::RowVectorXd& row) const;
    int predict(const Eigen::RowVectorXd& row) const;

    /// Family-native global importances: |coefficient| for linear models,
    /// summed impurity/gain decrease for tree models.
    std::vector<std::pair<FeatureId, double>> native_importances() const;

    /// Flat dump of learned parameters; used for determinism checks.
    std::vector<double> parameters() const;

  private:
    ModelSpec spec_;
    std::vector<FeatureId> features_;
    std::shared_ptr<const detail::ModelImpl> impl_;
    bool converged_ = true;
};

/// Trains a model. Deterministic given (spec, data, seed).
FittedModel train(const ModelSpec& spec, const Dataset& data, std::uint64_t seed);

/// Fraction of rows predicted correctly. Features must match fit-time
/// features exactly (names and order).
double accuracy(const FittedModel& model, const Dataset& data);

/// Stratified train/test split, deterministic given seed.
std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// Grid search by mean stratified k-fold CV accuracy. Ties go to the
/// earliest grid entry.
ModelSpec tune(ModelFamily family, const std::vector<std::map<std::string, double>>& grid,
               const Dataset& data, int k, std::uint64_t seed);

/// Regularized logistic log-loss and its gradient on standardized inputs;
/// exposed so the training gradient can be checked against finite
/// differences. `theta` is [w_0..w_{d-1}, bias]; the bias is not penalized.
double logistic_loss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                     const Eigen::VectorXi& y, double l2);
Eigen::VectorXd logistic_gradient(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                                  const Eigen::VectorXi& y, double l2);

}  // namespace mipstab
