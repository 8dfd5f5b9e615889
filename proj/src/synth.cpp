#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "mipstab/errors.hpp"
#include "mipstab/rng.hpp"
#include "mipstab/synth.hpp"

namespace mipstab {

Dataset generate(const SynthSpec& spec, bool* clipped) {
    const Eigen::Index d = spec.correlation.rows();
    if (spec.n_rows < 2) throw Error(ErrorCode::bad_input, "n_rows must be >= 2");
    if (d < 1 || spec.correlation.cols() != d)
        throw Error(ErrorCode::bad_input, "correlation must be a square matrix");
    if (!spec.correlation.allFinite())
        throw Error(ErrorCode::bad_input, "correlation must be finite");
    if (!spec.correlation.isApprox(spec.correlation.transpose(), 1e-8))
        throw Error(ErrorCode::matrix_domain, "correlation must be symmetric");
    for (Eigen::Index j = 0; j < d; ++j) {
        if (std::abs(spec.correlation(j, j) - 1.0) > 1e-8)
            throw Error(ErrorCode::matrix_domain, "correlation diagonal must be 1");
    }
    if (spec.weights.size() != d)
        throw Error(ErrorCode::bad_input, "weights length must match the feature count");
    if (!spec.feature_names.empty() && spec.feature_names.size() != static_cast<std::size_t>(d))
        throw Error(ErrorCode::bad_input, "feature_names length must match the feature count");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(spec.correlation);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::matrix_domain, "correlation eigendecomposition failed");
    Eigen::VectorXd eigenvalues = solver.eigenvalues();
    if (eigenvalues.minCoeff() < -1e-8)
        throw Error(ErrorCode::matrix_domain, "correlation is not positive semi-definite");
    bool any_clipped = false;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (eigenvalues[j] < 1e-10) {
            eigenvalues[j] = 1e-10;
            any_clipped = true;
        }
    }
    if (clipped != nullptr) *clipped = any_clipped;
    const Eigen::MatrixXd factor =
        solver.eigenvectors() * eigenvalues.cwiseSqrt().asDiagonal();

    Dataset data;
    data.X.resize(spec.n_rows, d);
    data.y.resize(spec.n_rows);
    Eigen::VectorXd z(d);
    for (int i = 0; i < spec.n_rows; ++i) {
        Rng rng(mix_seed(spec.seed, 0x726f7773u + static_cast<std::uint64_t>(i)));
        for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
        data.X.row(i) = (factor * z).transpose();
        const double logit = data.X.row(i).dot(spec.weights) + spec.intercept;
        const double probability = 1.0 / (1.0 + std::exp(-logit));
        data.y[i] = rng.uniform() < probability ? 1 : 0;
    }

    data.feature_names.reserve(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        const std::string name = spec.feature_names.empty()
                                     ? "f" + std::to_string(j + 1)
                                     : spec.feature_names[static_cast<std::size_t>(j)];
        data.feature_names.push_back({name, static_cast<int>(j)});
    }
    data.validate();
    return data;
}

Eigen::MatrixXd correlation_matrix(const Dataset& data) {
    if (data.n_rows() < 2)
        throw Error(ErrorCode::bad_input, "correlation needs at least 2 rows");
    const Eigen::Index n = data.n_rows(), d = data.n_features();
    const Eigen::RowVectorXd means = data.X.colwise().mean();
    const Eigen::MatrixXd centered = data.X.rowwise() - means;
    const Eigen::VectorXd norms = centered.colwise().norm();

    const double nan = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = a + 1; b < d; ++b) {
            double value;
            if (norms[a] <= 0.0 || norms[b] <= 0.0) {
                value = nan;
            } else {
                value = centered.col(a).dot(centered.col(b)) / (norms[a] * norms[b]);
            }
            out(a, b) = value;
            out(b, a) = value;
        }
    }
    (void)n;
    return out;
}

}  // namespace mipstab
