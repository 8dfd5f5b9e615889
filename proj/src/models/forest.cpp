#include <cmath>
#include <numeric>

#include "mipstab/models.hpp"
#include "model_impl.hpp"

namespace mipstab::detail {

namespace {

class TreeModel : public ModelImpl {
  public:
    TreeModel(std::vector<TreeNode> nodes, std::vector<double> importances)
        : nodes_(std::move(nodes)), importances_(std::move(importances)) {}

    double decision(const Eigen::RowVectorXd& row) const override {
        return tree_value(nodes_, row) - 0.5;
    }
    double explained_output(const Eigen::RowVectorXd& row) const override {
        return tree_value(nodes_, row);
    }
    int predict(const Eigen::RowVectorXd& row) const override {
        return tree_value(nodes_, row) >= 0.5 ? 1 : 0;
    }
    std::vector<double> native_importances() const override { return importances_; }
    std::vector<double> parameters() const override {
        std::vector<double> out;
        for (const TreeNode& node : nodes_) {
            out.push_back(static_cast<double>(node.feature));
            out.push_back(node.threshold);
            out.push_back(node.value);
        }
        return out;
    }

  private:
    std::vector<TreeNode> nodes_;
    std::vector<double> importances_;
};

class ForestModel : public ModelImpl {
  public:
    ForestModel(std::vector<std::vector<TreeNode>> trees, std::vector<double> importances)
        : trees_(std::move(trees)), importances_(std::move(importances)) {}

    double decision(const Eigen::RowVectorXd& row) const override {
        return probability(row) - 0.5;
    }
    double explained_output(const Eigen::RowVectorXd& row) const override {
        return probability(row);
    }
    int predict(const Eigen::RowVectorXd& row) const override {
        return probability(row) >= 0.5 ? 1 : 0;
    }
    std::vector<double> native_importances() const override { return importances_; }
    std::vector<double> parameters() const override {
        std::vector<double> out;
        for (const auto& nodes : trees_) {
            out.push_back(static_cast<double>(nodes.size()));
            for (const TreeNode& node : nodes) {
                out.push_back(static_cast<double>(node.feature));
                out.push_back(node.threshold);
                out.push_back(node.value);
            }
        }
        return out;
    }

  private:
    double probability(const Eigen::RowVectorXd& row) const {
        double sum = 0.0;
        for (const auto& nodes : trees_) sum += tree_value(nodes, row);
        return sum / static_cast<double>(trees_.size());
    }

    std::vector<std::vector<TreeNode>> trees_;
    std::vector<double> importances_;
};

TreeSettings tree_settings_from(const ModelSpec& spec) {
    TreeSettings settings;
    settings.max_depth = static_cast<int>(spec.get("max_depth", 6));
    settings.min_samples_split = static_cast<int>(spec.get("min_samples_split", 2));
    settings.min_samples_leaf = static_cast<int>(spec.get("min_samples_leaf", 1));
    if (settings.max_depth < 1) throw Error(ErrorCode::bad_input, "max_depth must be >= 1");
    if (settings.min_samples_split < 2)
        throw Error(ErrorCode::bad_input, "min_samples_split must be >= 2");
    if (settings.min_samples_leaf < 1)
        throw Error(ErrorCode::bad_input, "min_samples_leaf must be >= 1");
    return settings;
}

}  // namespace

std::shared_ptr<const ModelImpl> train_tree(const ModelSpec& spec, const Dataset& data) {
    TreeSettings settings = tree_settings_from(spec);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.n_rows()));
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> importances(static_cast<std::size_t>(data.n_features()), 0.0);
    TreeBuilder builder(data.X, data.y, settings, nullptr);
    std::vector<TreeNode> nodes = builder.build(rows, &importances);
    return std::make_shared<TreeModel>(std::move(nodes), std::move(importances));
}

std::shared_ptr<const ModelImpl> train_forest(const ModelSpec& spec, const Dataset& data,
                                              std::uint64_t seed) {
    const int n_trees = static_cast<int>(spec.get("trees", 200));
    if (n_trees < 1) throw Error(ErrorCode::bad_input, "trees must be >= 1");
    const bool bootstrap = spec.get("bootstrap", 1.0) != 0.0;
    TreeSettings settings = tree_settings_from(spec);
    settings.max_depth = static_cast<int>(spec.get("max_depth", 12));
    if (settings.max_depth < 1) throw Error(ErrorCode::bad_input, "max_depth must be >= 1");

    const int d = static_cast<int>(data.n_features());
    const int default_mtry = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(d)))));
    settings.mtry = static_cast<int>(spec.get("mtry", default_mtry));
    if (settings.mtry < 1 || settings.mtry > d)
        throw Error(ErrorCode::bad_input, "mtry must be in [1, n_features]");

    const Eigen::Index n = data.n_rows();
    std::vector<std::vector<TreeNode>> trees;
    trees.reserve(static_cast<std::size_t>(n_trees));
    std::vector<double> importances(static_cast<std::size_t>(d), 0.0);
    for (int t = 0; t < n_trees; ++t) {
        Rng rng(mix_seed(seed, 0x666f7265u + static_cast<std::uint64_t>(t)));
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
        if (bootstrap) {
            for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        std::vector<double> tree_importances(static_cast<std::size_t>(d), 0.0);
        TreeBuilder builder(data.X, data.y, settings, &rng);
        trees.push_back(builder.build(rows, &tree_importances));
        for (int j = 0; j < d; ++j) importances[static_cast<std::size_t>(j)] += tree_importances[static_cast<std::size_t>(j)];
    }
    for (double& v : importances) v /= static_cast<double>(n_trees);
    return std::make_shared<ForestModel>(std::move(trees), std::move(importances));
}

}  // namespace mipstab::detail
