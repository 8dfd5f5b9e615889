#include <algorithm>
#include <numeric>

#include "model_impl.hpp"

namespace mipstab::detail {

namespace {

double gini(double n0, double n1) {
    const double n = n0 + n1;
    if (n <= 0.0) return 0.0;
    const double p0 = n0 / n, p1 = n1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
};

}  // namespace

std::vector<TreeNode> TreeBuilder::build(const std::vector<Eigen::Index>& rows,
                                         std::vector<double>* importance) {
    std::vector<TreeNode> nodes;
    grow(rows, 0, nodes, importance, static_cast<double>(rows.size()));
    return nodes;
}

int TreeBuilder::grow(const std::vector<Eigen::Index>& rows, int depth, std::vector<TreeNode>& nodes,
                      std::vector<double>* importance, double total_rows) {
    const double n = static_cast<double>(rows.size());
    double n1 = 0.0;
    for (Eigen::Index r : rows) n1 += y_[r];
    const double n0 = n - n1;

    auto make_leaf = [&]() {
        TreeNode leaf;
        leaf.value = n1 / n;
        nodes.push_back(leaf);
        return static_cast<int>(nodes.size()) - 1;
    };

    if (n0 == 0.0 || n1 == 0.0 || depth >= settings_.max_depth ||
        rows.size() < static_cast<std::size_t>(settings_.min_samples_split)) {
        return make_leaf();
    }

    // Candidate features: all, or an mtry-sized deterministic draw.
    const int d = static_cast<int>(X_.cols());
    std::vector<int> features(d);
    std::iota(features.begin(), features.end(), 0);
    if (settings_.mtry > 0 && settings_.mtry < d && rng_ != nullptr) {
        for (int i = 0; i < settings_.mtry; ++i) {
            std::swap(features[i], features[i + static_cast<int>(rng_->below(d - i))]);
        }
        features.resize(settings_.mtry);
        std::sort(features.begin(), features.end());
    }

    const double parent_impurity = gini(n0, n1);
    SplitCandidate best;
    std::vector<std::pair<double, int>> column(rows.size());
    for (int f : features) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            column[i] = {X_(rows[i], f), y_[rows[i]]};
        }
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        double left0 = 0.0, left1 = 0.0;
        for (std::size_t i = 0; i + 1 < column.size(); ++i) {
            left1 += column[i].second;
            left0 += 1.0 - column[i].second;
            if (column[i].first == column[i + 1].first) continue;
            const double nl = left0 + left1;
            const double nr = n - nl;
            if (nl < settings_.min_samples_leaf || nr < settings_.min_samples_leaf) continue;
            const double right0 = n0 - left0, right1 = n1 - left1;
            const double dec = parent_impurity - (nl / n) * gini(left0, left1) - (nr / n) * gini(right0, right1);
            // Zero-gain splits are kept so patterns like XOR, where no single
            // split helps immediately, still get separated deeper down.
            if (best.feature < 0 || dec > best.decrease + 1e-12) {
                best.feature = f;
                best.threshold = (column[i].first + column[i + 1].first) / 2.0;
                best.decrease = dec;
            }
        }
    }

    if (best.feature < 0) return make_leaf();

    if (importance != nullptr) {
        (*importance)[static_cast<std::size_t>(best.feature)] +=
            (n / total_rows) * std::max(best.decrease, 0.0);
    }

    std::vector<Eigen::Index> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (Eigen::Index r : rows) {
        (X_(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
    }

    nodes.emplace_back();
    const int self = static_cast<int>(nodes.size()) - 1;
    nodes[self].feature = best.feature;
    nodes[self].threshold = best.threshold;
    const int left = grow(left_rows, depth + 1, nodes, importance, total_rows);
    const int right = grow(right_rows, depth + 1, nodes, importance, total_rows);
    nodes[self].left = left;
    nodes[self].right = right;
    return self;
}

double tree_value(const std::vector<TreeNode>& nodes, const Eigen::RowVectorXd& row) {
    int at = 0;
    while (nodes[at].feature >= 0) {
        at = row[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
    }
    return nodes[at].value;
}

}  // namespace mipstab::detail
