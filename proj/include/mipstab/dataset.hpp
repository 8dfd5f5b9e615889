#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mipstab/core.hpp"

namespace mipstab {

/// Column-major numeric table with named features and binary labels.
/// Labels may be single-class here; training validates that both classes
/// are present where it matters.
struct Dataset {
    std::vector<FeatureId> feature_names;
    Eigen::MatrixXd X;           // n_rows x n_features
    Eigen::VectorXi y;           // entries in {0, 1}

    Eigen::Index n_rows() const { return X.rows(); }
    Eigen::Index n_features() const { return X.cols(); }

    /// Validates shape, finiteness and label values.
    void validate() const;

    /// New dataset keeping only the given features, in the given order.
    Dataset select(const std::vector<FeatureId>& keep) const;

    /// Rows at the given indices, all columns.
    Dataset take_rows(const std::vector<Eigen::Index>& rows) const;

    bool both_classes_present() const;
};

}  // namespace mipstab
