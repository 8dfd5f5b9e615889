#include <algorithm>
#include <numeric>
#include <set>

#include "mipstab/models.hpp"
#include "model_impl.hpp"

namespace mipstab {

namespace {

const std::set<std::string>& allowed_hyperparameters(ModelFamily family) {
    static const std::set<std::string> logistic{"C"};
    static const std::set<std::string> tree{"max_depth", "min_samples_split", "min_samples_leaf"};
    static const std::set<std::string> forest{"trees",          "max_depth", "min_samples_split",
                                              "min_samples_leaf", "mtry",      "bootstrap"};
    static const std::set<std::string> svc{"C", "iterations"};
    static const std::set<std::string> stumps{"rounds", "shrinkage", "lambda"};
    switch (family) {
        case ModelFamily::logistic_regression: return logistic;
        case ModelFamily::decision_tree: return tree;
        case ModelFamily::random_forest: return forest;
        case ModelFamily::linear_svc: return svc;
        case ModelFamily::boosted_stumps: return stumps;
    }
    throw Error(ErrorCode::bad_input, "unrecognized model family");
}

void require_matching_features(const FittedModel& model, const Dataset& data) {
    if (data.feature_names != model.feature_names()) {
        throw Error(ErrorCode::structure_mismatch,
                    "dataset features do not match the model's fit-time features");
    }
}

}  // namespace

ModelFamily model_family_from_string(const std::string& name) {
    if (name == "logistic_regression") return ModelFamily::logistic_regression;
    if (name == "decision_tree") return ModelFamily::decision_tree;
    if (name == "random_forest") return ModelFamily::random_forest;
    if (name == "linear_svc") return ModelFamily::linear_svc;
    if (name == "boosted_stumps") return ModelFamily::boosted_stumps;
    throw Error(ErrorCode::bad_input, "unknown model family: " + name);
}

std::string to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::logistic_regression: return "logistic_regression";
        case ModelFamily::decision_tree: return "decision_tree";
        case ModelFamily::random_forest: return "random_forest";
        case ModelFamily::linear_svc: return "linear_svc";
        case ModelFamily::boosted_stumps: return "boosted_stumps";
    }
    throw Error(ErrorCode::bad_input, "unrecognized model family");
}

std::vector<std::map<std::string, double>> default_grid(ModelFamily family) {
    switch (family) {
        case ModelFamily::logistic_regression:
        case ModelFamily::linear_svc:
            return {{{"C", 0.01}}, {{"C", 0.1}}, {{"C", 1.0}}, {{"C", 10.0}}};
        case ModelFamily::decision_tree:
            return {{{"max_depth", 2}}, {{"max_depth", 3}}, {{"max_depth", 4}},
                    {{"max_depth", 6}}, {{"max_depth", 8}}};
        case ModelFamily::random_forest:
            return {{{"trees", 50}, {"max_depth", 4}},
                    {{"trees", 50}, {"max_depth", 8}},
                    {{"trees", 200}, {"max_depth", 4}},
                    {{"trees", 200}, {"max_depth", 8}}};
        case ModelFamily::boosted_stumps:
            return {{{"rounds", 50}, {"shrinkage", 0.05}},
                    {{"rounds", 50}, {"shrinkage", 0.1}},
                    {{"rounds", 200}, {"shrinkage", 0.05}},
                    {{"rounds", 200}, {"shrinkage", 0.1}}};
    }
    throw Error(ErrorCode::bad_input, "unrecognized model family");
}

FittedModel::FittedModel(ModelSpec spec, std::vector<FeatureId> features,
                         std::shared_ptr<const detail::ModelImpl> impl, bool converged)
    : spec_(std::move(spec)), features_(std::move(features)), impl_(std::move(impl)),
      converged_(converged) {}

double FittedModel::decision(const Eigen::RowVectorXd& row) const {
    if (!impl_) throw Error(ErrorCode::unfit, "model has not been trained");
    if (row.size() != static_cast<Eigen::Index>(features_.size()))
        throw Error(ErrorCode::structure_mismatch, "row width does not match fit-time features");
    return impl_->decision(row);
}

double FittedModel::explained_output(const Eigen::RowVectorXd& row) const {
    if (!impl_) throw Error(ErrorCode::unfit, "model has not been trained");
    if (row.size() != static_cast<Eigen::Index>(features_.size()))
        throw Error(ErrorCode::structure_mismatch, "row width does not match fit-time features");
    return impl_->explained_output(row);
}

int FittedModel::predict(const Eigen::RowVectorXd& row) const {
    if (!impl_) throw Error(ErrorCode::unfit, "model has not been trained");
    if (row.size() != static_cast<Eigen::Index>(features_.size()))
        throw Error(ErrorCode::structure_mismatch, "row width does not match fit-time features");
    return impl_->predict(row);
}

std::vector<std::pair<FeatureId, double>> FittedModel::native_importances() const {
    if (!impl_) throw Error(ErrorCode::unfit, "model has not been trained");
    const std::vector<double> raw = impl_->native_importances();
    std::vector<std::pair<FeatureId, double>> out;
    out.reserve(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) out.emplace_back(features_[j], raw[j]);
    return out;
}

std::vector<double> FittedModel::parameters() const {
    if (!impl_) throw Error(ErrorCode::unfit, "model has not been trained");
    return impl_->parameters();
}

FittedModel train(const ModelSpec& spec, const Dataset& data, std::uint64_t seed) {
    data.validate();
    if (!data.both_classes_present())
        throw Error(ErrorCode::unfit, "training data contains a single class");
    const std::set<std::string>& allowed = allowed_hyperparameters(spec.family);
    for (const auto& [name, value] : spec.hyperparameters) {
        (void)value;
        if (!allowed.contains(name)) {
            throw Error(ErrorCode::bad_input, "unknown hyperparameter for " +
                                                  to_string(spec.family) + ": " + name);
        }
    }

    bool converged = true;
    std::shared_ptr<const detail::ModelImpl> impl;
    switch (spec.family) {
        case ModelFamily::logistic_regression:
            impl = detail::train_logistic(spec, data, &converged);
            break;
        case ModelFamily::decision_tree:
            impl = detail::train_tree(spec, data);
            break;
        case ModelFamily::random_forest:
            impl = detail::train_forest(spec, data, seed);
            break;
        case ModelFamily::linear_svc:
            impl = detail::train_linear_svc(spec, data);
            break;
        case ModelFamily::boosted_stumps:
            impl = detail::train_stumps(spec, data);
            break;
    }
    return FittedModel(spec, data.feature_names, std::move(impl), converged);
}

double accuracy(const FittedModel& model, const Dataset& data) {
    data.validate();
    require_matching_features(model, data);
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
        if (model.predict(data.X.row(i)) == data.y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.n_rows());
}

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed) {
    data.validate();
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error(ErrorCode::bad_input, "test_fraction must be in (0, 1)");

    std::vector<Eigen::Index> test_rows;
    for (int label = 0; label <= 1; ++label) {
        std::vector<Eigen::Index> members;
        for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
            if (data.y[i] == label) members.push_back(i);
        }
        if (members.empty()) continue;
        Rng rng(mix_seed(seed, 0x73706c69u + static_cast<std::uint64_t>(label)));
        rng.shuffle(members);
        const auto take = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(members.size())));
        test_rows.insert(test_rows.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(test_rows.begin(), test_rows.end());
    if (test_rows.empty() || test_rows.size() == static_cast<std::size_t>(data.n_rows()))
        throw Error(ErrorCode::size, "split would leave an empty train or test side");

    std::vector<Eigen::Index> train_rows;
    train_rows.reserve(static_cast<std::size_t>(data.n_rows()) - test_rows.size());
    std::size_t next_test = 0;
    for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
        if (next_test < test_rows.size() && test_rows[next_test] == i) {
            ++next_test;
        } else {
            train_rows.push_back(i);
        }
    }
    return {data.take_rows(train_rows), data.take_rows(test_rows)};
}

ModelSpec tune(ModelFamily family, const std::vector<std::map<std::string, double>>& grid,
               const Dataset& data, int k, std::uint64_t seed) {
    data.validate();
    if (grid.empty()) throw Error(ErrorCode::bad_input, "tuning grid is empty");
    if (k < 2) throw Error(ErrorCode::bad_input, "cross-validation requires k >= 2");
    if (data.n_rows() < k) throw Error(ErrorCode::size, "fewer rows than folds");
    if (!data.both_classes_present())
        throw Error(ErrorCode::unfit, "training data contains a single class");

    // Round-robin fold assignment per class, after a seeded shuffle.
    std::vector<int> fold_of(static_cast<std::size_t>(data.n_rows()), -1);
    for (int label = 0; label <= 1; ++label) {
        std::vector<Eigen::Index> members;
        for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
            if (data.y[i] == label) members.push_back(i);
        }
        if (members.size() < static_cast<std::size_t>(k)) {
            throw Error(ErrorCode::stratification,
                        "class " + std::to_string(label) + " has fewer rows than folds");
        }
        Rng rng(mix_seed(seed, 0x666f6c64u + static_cast<std::uint64_t>(label)));
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            fold_of[static_cast<std::size_t>(members[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
        }
    }

    std::vector<std::vector<Eigen::Index>> fold_rows(static_cast<std::size_t>(k));
    std::vector<std::vector<Eigen::Index>> rest_rows(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
        for (int f = 0; f < k; ++f) {
            (f == fold_of[static_cast<std::size_t>(i)] ? fold_rows : rest_rows)[static_cast<std::size_t>(f)]
                .push_back(i);
        }
    }

    std::size_t best_index = 0;
    double best_score = -1.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        ModelSpec candidate{family, grid[g]};
        double score_sum = 0.0;
        for (int f = 0; f < k; ++f) {
            const Dataset fold_train = data.take_rows(rest_rows[static_cast<std::size_t>(f)]);
            const Dataset fold_test = data.take_rows(fold_rows[static_cast<std::size_t>(f)]);
            const FittedModel model =
                train(candidate, fold_train, mix_seed(seed, 0x63760000u + static_cast<std::uint64_t>(f)));
            score_sum += accuracy(model, fold_test);
        }
        const double mean_score = score_sum / static_cast<double>(k);
        if (mean_score > best_score) {
            best_score = mean_score;
            best_index = g;
        }
    }
    return ModelSpec{family, grid[best_index]};
}

}  // namespace mipstab
