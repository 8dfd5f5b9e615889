#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "mipstab/dataset.hpp"

namespace mipstab {

/// Correlated Gaussian features with Bernoulli(sigmoid(w.x + intercept))
/// labels; the stand-in for data that cannot ship with the artifact.
struct SynthSpec {
    int n_rows = 0;
    Eigen::MatrixXd correlation;  // symmetric PSD, unit diagonal
    Eigen::VectorXd weights;
    double intercept = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> feature_names;  // empty = f1..fd
};

/// Deterministic sample from the spec. `clipped`, when given, reports
/// whether near-zero eigenvalues had to be clipped to keep the correlation
/// factorizable.
Dataset generate(const SynthSpec& spec, bool* clipped = nullptr);

/// Pairwise Pearson correlations; entries involving a constant column are
/// NaN (the diagonal stays 1).
Eigen::MatrixXd correlation_matrix(const Dataset& data);

}  // namespace mipstab
