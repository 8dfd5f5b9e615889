#include <Eigen/Dense>
#include <cmath>

#include "mipstab/models.hpp"
#include "model_impl.hpp"

namespace mipstab {

double logistic_loss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                     const Eigen::VectorXi& y, double l2) {
    const Eigen::Index n = X.rows(), d = X.cols();
    const Eigen::VectorXd w = theta.head(d);
    const double b = theta[d];
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = X.row(i).dot(w) + b;
        const double margin = (y[i] == 1 ? s : -s);
        // log(1 + exp(-margin)) without overflow
        loss += margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    }
    return loss / static_cast<double>(n) + 0.5 * l2 * w.squaredNorm();
}

Eigen::VectorXd logistic_gradient(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                                  const Eigen::VectorXi& y, double l2) {
    const Eigen::Index n = X.rows(), d = X.cols();
    const Eigen::VectorXd w = theta.head(d);
    const double b = theta[d];
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = detail::sigmoid(X.row(i).dot(w) + b);
        const double residual = p - static_cast<double>(y[i]);
        grad.head(d) += residual * X.row(i).transpose();
        grad[d] += residual;
    }
    grad /= static_cast<double>(n);
    grad.head(d) += l2 * w;
    return grad;
}

namespace detail {

class LogisticModel : public ModelImpl {
  public:
    LogisticModel(Standardizer standardizer, Eigen::VectorXd weights, double bias)
        : standardizer_(std::move(standardizer)), weights_(std::move(weights)), bias_(bias) {}

    double decision(const Eigen::RowVectorXd& row) const override {
        return standardizer_.apply_row(row).dot(weights_) + bias_;
    }
    double explained_output(const Eigen::RowVectorXd& row) const override {
        return sigmoid(decision(row));
    }
    std::vector<double> native_importances() const override {
        std::vector<double> out(weights_.size());
        for (Eigen::Index j = 0; j < weights_.size(); ++j) out[j] = std::abs(weights_[j]);
        return out;
    }
    std::vector<double> parameters() const override {
        std::vector<double> out(weights_.data(), weights_.data() + weights_.size());
        out.push_back(bias_);
        out.insert(out.end(), standardizer_.mean.data(), standardizer_.mean.data() + standardizer_.mean.size());
        out.insert(out.end(), standardizer_.scale.data(), standardizer_.scale.data() + standardizer_.scale.size());
        return out;
    }

  private:
    Standardizer standardizer_;
    Eigen::VectorXd weights_;
    double bias_;
};

class LinearSvcModel : public ModelImpl {
  public:
    LinearSvcModel(Standardizer standardizer, Eigen::VectorXd weights, double bias)
        : standardizer_(std::move(standardizer)), weights_(std::move(weights)), bias_(bias) {}

    double decision(const Eigen::RowVectorXd& row) const override {
        return standardizer_.apply_row(row).dot(weights_) + bias_;
    }
    // Margin models are explained on the raw margin.
    double explained_output(const Eigen::RowVectorXd& row) const override { return decision(row); }
    std::vector<double> native_importances() const override {
        std::vector<double> out(weights_.size());
        for (Eigen::Index j = 0; j < weights_.size(); ++j) out[j] = std::abs(weights_[j]);
        return out;
    }
    std::vector<double> parameters() const override {
        std::vector<double> out(weights_.data(), weights_.data() + weights_.size());
        out.push_back(bias_);
        return out;
    }

  private:
    Standardizer standardizer_;
    Eigen::VectorXd weights_;
    double bias_;
};

std::shared_ptr<const ModelImpl> train_logistic(const ModelSpec& spec, const Dataset& data,
                                                bool* converged) {
    const double C = spec.get("C", 1.0);
    if (C <= 0) throw Error(ErrorCode::bad_input, "logistic_regression C must be > 0");

    Standardizer standardizer;
    standardizer.fit(data.X);
    const Eigen::MatrixXd Z = standardizer.apply(data.X);
    const Eigen::Index n = Z.rows(), d = Z.cols();
    const double l2 = 1.0 / (C * static_cast<double>(n));

    // Damped Newton on the penalized log-loss.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
    const int max_iter = 100;
    *converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::VectorXd grad = logistic_gradient(theta, Z, data.y, l2);
        if (grad.lpNorm<Eigen::Infinity>() < 1e-10) {
            *converged = true;
            break;
        }
        Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(d + 1, d + 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = sigmoid(Z.row(i).dot(theta.head(d)) + theta[d]);
            const double h = std::max(p * (1.0 - p), 1e-12);
            Eigen::VectorXd xi(d + 1);
            xi.head(d) = Z.row(i).transpose();
            xi[d] = 1.0;
            hessian.noalias() += h * xi * xi.transpose();
        }
        hessian /= static_cast<double>(n);
        hessian.topLeftCorner(d, d).diagonal().array() += l2;
        hessian.diagonal().array() += 1e-12;

        const Eigen::VectorXd step = hessian.ldlt().solve(grad);
        const double before = logistic_loss(theta, Z, data.y, l2);
        double scale = 1.0;
        Eigen::VectorXd candidate = theta - step;
        for (int half = 0; half < 40 && logistic_loss(candidate, Z, data.y, l2) > before; ++half) {
            scale *= 0.5;
            candidate = theta - scale * step;
        }
        theta = candidate;
    }
    return std::make_shared<LogisticModel>(std::move(standardizer),
                                           Eigen::VectorXd(theta.head(d)), theta[d]);
}

std::shared_ptr<const ModelImpl> train_linear_svc(const ModelSpec& spec, const Dataset& data) {
    const double C = spec.get("C", 1.0);
    const int iterations = static_cast<int>(spec.get("iterations", 2000));
    if (C <= 0) throw Error(ErrorCode::bad_input, "linear_svc C must be > 0");
    if (iterations < 1) throw Error(ErrorCode::bad_input, "linear_svc iterations must be >= 1");

    Standardizer standardizer;
    standardizer.fit(data.X);
    const Eigen::MatrixXd Z = standardizer.apply(data.X);
    const Eigen::Index n = Z.rows(), d = Z.cols();
    const double l2 = 1.0 / (C * static_cast<double>(n));

    // Full-batch subgradient descent on hinge loss + L2, with tail averaging.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    Eigen::VectorXd w_avg = Eigen::VectorXd::Zero(d);
    double b_avg = 0.0;
    int averaged = 0;
    for (int t = 1; t <= iterations; ++t) {
        Eigen::VectorXd grad = l2 * w;
        double grad_b = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double label = data.y[i] == 1 ? 1.0 : -1.0;
            if (label * (Z.row(i).dot(w) + b) < 1.0) {
                grad -= (label / static_cast<double>(n)) * Z.row(i).transpose();
                grad_b -= label / static_cast<double>(n);
            }
        }
        const double eta = 1.0 / (1.0 + l2 * static_cast<double>(t));
        w -= eta * grad;
        b -= eta * grad_b;
        if (t > iterations / 2) {
            w_avg += w;
            b_avg += b;
            ++averaged;
        }
    }
    w_avg /= static_cast<double>(averaged);
    b_avg /= static_cast<double>(averaged);
    return std::make_shared<LinearSvcModel>(std::move(standardizer), std::move(w_avg), b_avg);
}

}  // namespace detail
}  // namespace mipstab
