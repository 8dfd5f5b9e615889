#pragma once

#include <Eigen/Core>
#include <vector>

namespace mipstab {

/// Correlation-matrix PCA (inputs standardized before the eigendecomposition).
struct PcaModel {
    Eigen::VectorXd means;
    Eigen::VectorXd scales;
    Eigen::MatrixXd components;  // k x d, rows orthonormal
    Eigen::VectorXd explained_variance_ratio;  // length k, non-increasing
    Eigen::VectorXd eigenvalues;               // all d, descending
    std::vector<int> constant_columns;         // scale forced to 1, zero loading

    Eigen::Index n_components() const { return components.rows(); }
};

/// Keeps the smallest component count whose cumulative explained-variance
/// ratio reaches `variance_threshold`. Sign convention: each component's
/// largest-magnitude entry is positive.
PcaModel fit_pca(const Eigen::MatrixXd& X, double variance_threshold = 0.95);

/// Standardizes with the fit-time means/scales and projects onto the
/// retained components.
Eigen::MatrixXd transform(const PcaModel& model, const Eigen::MatrixXd& X);

}  // namespace mipstab
