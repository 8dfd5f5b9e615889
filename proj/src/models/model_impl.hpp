#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "mipstab/errors.hpp"
#include "mipstab/models.hpp"
#include "mipstab/rng.hpp"

namespace mipstab::detail {

class ModelImpl {
  public:
    virtual ~ModelImpl() = default;
    virtual double decision(const Eigen::RowVectorXd& row) const = 0;
    virtual double explained_output(const Eigen::RowVectorXd& row) const = 0;
    virtual int predict(const Eigen::RowVectorXd& row) const { return decision(row) >= 0.0 ? 1 : 0; }
    virtual std::vector<double> native_importances() const = 0;
    virtual std::vector<double> parameters() const = 0;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Train-set column standardization applied inside linear models.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  // sd, or 1 for constant columns

    void fit(const Eigen::MatrixXd& X) {
        const double n = static_cast<double>(X.rows());
        mean = X.colwise().mean();
        Eigen::MatrixXd centered = X.rowwise() - mean.transpose();
        scale = (centered.array().square().colwise().sum() / n).sqrt();
        for (Eigen::Index j = 0; j < scale.size(); ++j) {
            if (scale[j] <= 0.0) scale[j] = 1.0;
        }
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
        return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    }

    Eigen::RowVectorXd apply_row(const Eigen::RowVectorXd& row) const {
        return (row - mean.transpose()).array() / scale.transpose().array();
    }
};

// ---- decision tree machinery shared by tree, forest and stump models ----

struct TreeNode {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0; // x <= threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;     // leaf payload (class-1 probability, or boosting step)
};

struct TreeSettings {
    int max_depth = 6;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    int mtry = 0;  // 0 = consider all features at every split
};

/// CART builder with deterministic tie-breaking (lower feature index, then
/// lower threshold). `importance` accumulates sample-weighted Gini decrease
/// per feature.
class TreeBuilder {
  public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, TreeSettings settings, Rng* rng)
        : X_(X), y_(y), settings_(settings), rng_(rng) {}

    std::vector<TreeNode> build(const std::vector<Eigen::Index>& rows, std::vector<double>* importance);

  private:
    int grow(const std::vector<Eigen::Index>& rows, int depth, std::vector<TreeNode>& nodes,
             std::vector<double>* importance, double total_rows);

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXi& y_;
    TreeSettings settings_;
    Rng* rng_;
};

double tree_value(const std::vector<TreeNode>& nodes, const Eigen::RowVectorXd& row);

// ---- per-family trainers (models.cpp dispatches to these) ----

std::shared_ptr<const ModelImpl> train_logistic(const ModelSpec& spec, const Dataset& data,
                                                bool* converged);
std::shared_ptr<const ModelImpl> train_linear_svc(const ModelSpec& spec, const Dataset& data);
std::shared_ptr<const ModelImpl> train_tree(const ModelSpec& spec, const Dataset& data);
std::shared_ptr<const ModelImpl> train_forest(const ModelSpec& spec, const Dataset& data,
                                              std::uint64_t seed);
std::shared_ptr<const ModelImpl> train_stumps(const ModelSpec& spec, const Dataset& data);

}  // namespace mipstab::detail
