#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mipstab/errors.hpp"
#include "mipstab/pca.hpp"

namespace mipstab {

PcaModel fit_pca(const Eigen::MatrixXd& X, double variance_threshold) {
    if (X.rows() <= 1) throw Error(ErrorCode::size, "PCA needs more than one row");
    if (X.cols() < 1) throw Error(ErrorCode::bad_input, "PCA needs at least one column");
    if (!X.allFinite()) throw Error(ErrorCode::bad_input, "PCA input must be finite");
    if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
        throw Error(ErrorCode::bad_input, "variance threshold must be in (0, 1]");

    const Eigen::Index n = X.rows(), d = X.cols();
    PcaModel model;
    model.means = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - model.means.transpose();
    model.scales = (centered.array().square().colwise().sum() / static_cast<double>(n - 1)).sqrt();
    for (Eigen::Index j = 0; j < d; ++j) {
        if (model.scales[j] <= 0.0) {
            model.constant_columns.push_back(static_cast<int>(j));
            model.scales[j] = 1.0;
        }
    }
    const Eigen::MatrixXd Z = centered.array().rowwise() / model.scales.transpose().array();
    const Eigen::MatrixXd correlation = (Z.transpose() * Z) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(correlation);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::matrix_domain, "eigendecomposition failed");

    // SelfAdjointEigenSolver sorts ascending; flip to descending.
    Eigen::VectorXd eigenvalues = solver.eigenvalues().reverse();
    Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index c = 0; c < eigenvalues.size(); ++c) {
        if (eigenvalues[c] < 0.0) eigenvalues[c] = 0.0;
    }
    model.eigenvalues = eigenvalues;

    // Deterministic sign: largest-magnitude loading positive.
    for (Eigen::Index c = 0; c < d; ++c) {
        Eigen::Index argmax = 0;
        vectors.col(c).cwiseAbs().maxCoeff(&argmax);
        if (vectors(argmax, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }

    const double total = eigenvalues.sum();
    if (total <= 0.0)
        throw Error(ErrorCode::matrix_domain, "all columns are constant; nothing to retain");

    Eigen::Index k = 0;
    double cumulative = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
        cumulative += eigenvalues[c] / total;
        k = c + 1;
        if (cumulative >= variance_threshold - 1e-12) break;
    }

    model.components = vectors.leftCols(k).transpose();
    model.explained_variance_ratio = eigenvalues.head(k) / total;
    return model;
}

Eigen::MatrixXd transform(const PcaModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.means.size())
        throw Error(ErrorCode::structure_mismatch,
                    "column count does not match the fitted PCA model");
    const Eigen::MatrixXd Z =
        (X.rowwise() - model.means.transpose()).array().rowwise() / model.scales.transpose().array();
    return Z * model.components.transpose();
}

}  // namespace mipstab
