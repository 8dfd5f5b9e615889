#include <algorithm>
#include <cmath>

#include "mipstab/models.hpp"
#include "model_impl.hpp"

namespace mipstab::detail {

namespace {

struct Stump {
    int feature = -1;
    double threshold = 0.0;
    double left_value = 0.0;   // x <= threshold
    double right_value = 0.0;
};

class StumpsModel : public ModelImpl {
  public:
    StumpsModel(double base_score, std::vector<Stump> stumps, std::vector<double> importances)
        : base_score_(base_score), stumps_(std::move(stumps)), importances_(std::move(importances)) {}

    double decision(const Eigen::RowVectorXd& row) const override {
        double score = base_score_;
        for (const Stump& s : stumps_) {
            score += row[s.feature] <= s.threshold ? s.left_value : s.right_value;
        }
        return score;
    }
    double explained_output(const Eigen::RowVectorXd& row) const override {
        return sigmoid(decision(row));
    }
    std::vector<double> native_importances() const override { return importances_; }
    std::vector<double> parameters() const override {
        std::vector<double> out{base_score_};
        for (const Stump& s : stumps_) {
            out.push_back(static_cast<double>(s.feature));
            out.push_back(s.threshold);
            out.push_back(s.left_value);
            out.push_back(s.right_value);
        }
        return out;
    }

  private:
    double base_score_;
    std::vector<Stump> stumps_;
    std::vector<double> importances_;
};

}  // namespace

std::shared_ptr<const ModelImpl> train_stumps(const ModelSpec& spec, const Dataset& data) {
    const int rounds = static_cast<int>(spec.get("rounds", 200));
    const double shrinkage = spec.get("shrinkage", 0.1);
    const double lambda = spec.get("lambda", 1.0);
    if (rounds < 1) throw Error(ErrorCode::bad_input, "rounds must be >= 1");
    if (shrinkage <= 0.0 || shrinkage > 1.0)
        throw Error(ErrorCode::bad_input, "shrinkage must be in (0, 1]");
    if (lambda < 0.0) throw Error(ErrorCode::bad_input, "lambda must be >= 0");

    const Eigen::Index n = data.n_rows();
    const int d = static_cast<int>(data.n_features());

    double positives = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) positives += data.y[i];
    const double base_rate = std::clamp(positives / static_cast<double>(n), 1e-12, 1.0 - 1e-12);
    const double base_score = std::log(base_rate / (1.0 - base_rate));

    // Columns pre-sorted once; each round scans prefix gradient sums.
    std::vector<std::vector<std::pair<double, Eigen::Index>>> sorted(static_cast<std::size_t>(d));
    for (int f = 0; f < d; ++f) {
        auto& col = sorted[static_cast<std::size_t>(f)];
        col.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = {data.X(i, f), i};
        std::sort(col.begin(), col.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }

    Eigen::VectorXd score = Eigen::VectorXd::Constant(n, base_score);
    std::vector<Stump> stumps;
    stumps.reserve(static_cast<std::size_t>(rounds));
    std::vector<double> importances(static_cast<std::size_t>(d), 0.0);

    for (int round = 0; round < rounds; ++round) {
        Eigen::VectorXd grad(n), hess(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = sigmoid(score[i]);
            grad[i] = p - static_cast<double>(data.y[i]);
            hess[i] = std::max(p * (1.0 - p), 1e-12);
        }
        const double total_grad = grad.sum();
        const double total_hess = hess.sum();
        const double root_objective = total_grad * total_grad / (total_hess + lambda);

        int best_feature = -1;
        double best_threshold = 0.0, best_gain = 0.0, best_gl = 0.0, best_hl = 0.0;
        for (int f = 0; f < d; ++f) {
            const auto& col = sorted[static_cast<std::size_t>(f)];
            double gl = 0.0, hl = 0.0;
            for (std::size_t i = 0; i + 1 < col.size(); ++i) {
                gl += grad[col[i].second];
                hl += hess[col[i].second];
                if (col[i].first == col[i + 1].first) continue;
                const double gr = total_grad - gl, hr = total_hess - hl;
                const double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                                           root_objective);
                if (gain > best_gain + 1e-12) {
                    best_feature = f;
                    best_threshold = (col[i].first + col[i + 1].first) / 2.0;
                    best_gain = gain;
                    best_gl = gl;
                    best_hl = hl;
                }
            }
        }
        if (best_feature < 0) break;

        Stump stump;
        stump.feature = best_feature;
        stump.threshold = best_threshold;
        stump.left_value = shrinkage * (-best_gl / (best_hl + lambda));
        const double gr = total_grad - best_gl, hr = total_hess - best_hl;
        stump.right_value = shrinkage * (-gr / (hr + lambda));
        importances[static_cast<std::size_t>(best_feature)] += best_gain;

        for (Eigen::Index i = 0; i < n; ++i) {
            score[i] += data.X(i, best_feature) <= best_threshold ? stump.left_value
                                                                  : stump.right_value;
        }
        stumps.push_back(stump);
    }

    return std::make_shared<StumpsModel>(base_score, std::move(stumps), std::move(importances));
}

}  // namespace mipstab::detail
