#include <doctest.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mipstab/dataset.hpp"
#include "mipstab/errors.hpp"
#include "mipstab/models.hpp"
#include "mipstab/rng.hpp"

using namespace mipstab;

namespace {

Dataset make_data(const std::vector<std::string>& names,
                  const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
    Dataset d;
    for (std::size_t j = 0; j < names.size(); ++j) d.feature_names.push_back({names[j], static_cast<int>(j)});
    d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    d.y.resize(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        d.y[static_cast<Eigen::Index>(i)] = labels[i];
    }
    return d;
}

Dataset separable_1d() {
    return make_data({"x"}, {{-4}, {-3}, {-2}, {-1}, {1}, {2}, {3}, {4}},
                     {0, 0, 0, 0, 1, 1, 1, 1});
}

Dataset xor_data(int copies) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int c = 0; c < copies; ++c) {
        rows.push_back({0.0, 0.0});
        labels.push_back(0);
        rows.push_back({0.0, 1.0});
        labels.push_back(1);
        rows.push_back({1.0, 0.0});
        labels.push_back(1);
        rows.push_back({1.0, 1.0});
        labels.push_back(0);
    }
    return make_data({"a", "b"}, rows, labels);
}

Dataset noisy_blobs(int n_per_class, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < n_per_class; ++i) {
        rows.push_back({-1.5 + rng.normal(), rng.normal(), rng.normal()});
        labels.push_back(0);
        rows.push_back({1.5 + rng.normal(), rng.normal(), rng.normal()});
        labels.push_back(1);
    }
    return make_data({"signal", "noise1", "noise2"}, rows, labels);
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a mipstab::Error");
    return ErrorCode::bad_input;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("logistic regression separates a linearly separable feature") {
    const Dataset d = separable_1d();
    const FittedModel m = train({ModelFamily::logistic_regression, {}}, d, 1);
    CHECK(m.converged());
    CHECK(accuracy(m, d) == 1.0);
    Eigen::RowVectorXd lo(1), hi(1);
    lo << -4.0;
    hi << 4.0;
    CHECK(m.decision(hi) > m.decision(lo));
    CHECK(m.explained_output(hi) > 0.5);
    CHECK(m.explained_output(lo) < 0.5);
    CHECK(m.explained_output(hi) < 1.0);
    CHECK(m.explained_output(lo) > 0.0);
    CHECK(m.predict(hi) == 1);
    CHECK(m.predict(lo) == 0);
}

TEST_CASE("linear models cannot express xor, a depth-2 tree can") {
    const Dataset d = xor_data(2);
    const FittedModel lr = train({ModelFamily::logistic_regression, {}}, d, 1);
    CHECK(accuracy(lr, d) <= 0.75);
    const FittedModel svc = train({ModelFamily::linear_svc, {}}, d, 1);
    CHECK(accuracy(svc, d) <= 0.75);
    const FittedModel tree =
        train({ModelFamily::decision_tree, {{"max_depth", 2}}}, d, 1);
    CHECK(accuracy(tree, d) == 1.0);
}

TEST_CASE("every family fits an easy problem and is deterministic") {
    const Dataset d = noisy_blobs(40, 7);
    const std::vector<ModelSpec> specs = {
        {ModelFamily::logistic_regression, {}},
        {ModelFamily::decision_tree, {{"max_depth", 4}}},
        {ModelFamily::random_forest, {{"trees", 20}}},
        {ModelFamily::linear_svc, {}},
        {ModelFamily::boosted_stumps, {{"rounds", 60}}},
    };
    for (const auto& spec : specs) {
        const std::string family_name = to_string(spec.family);
        CAPTURE(family_name);
        const FittedModel a = train(spec, d, 42);
        const FittedModel b = train(spec, d, 42);
        CHECK(accuracy(a, d) >= 0.9);
        CHECK(a.parameters() == b.parameters());
        for (Eigen::Index i = 0; i < 5; ++i) {
            CHECK(a.explained_output(d.X.row(i)) == b.explained_output(d.X.row(i)));
        }
    }
}

TEST_CASE("accuracy is the fraction of matching predictions") {
    const Dataset d = separable_1d();
    const FittedModel m = train({ModelFamily::logistic_regression, {}}, d, 1);
    Dataset test = make_data({"x"}, {{-3}, {-2}, {2}, {3}}, {0, 0, 1, 0});
    CHECK(accuracy(m, test) == doctest::Approx(0.75));
}

TEST_CASE("svc explained output is the margin") {
    const Dataset d = separable_1d();
    const FittedModel m = train({ModelFamily::linear_svc, {}}, d, 1);
    Eigen::RowVectorXd row(1);
    row << 2.5;
    CHECK(m.explained_output(row) == m.decision(row));
}

TEST_CASE("probability families emit probabilities") {
    const Dataset d = noisy_blobs(30, 3);
    for (ModelFamily family : {ModelFamily::logistic_regression, ModelFamily::decision_tree,
                               ModelFamily::random_forest, ModelFamily::boosted_stumps}) {
        const std::string family_name = to_string(family);
        CAPTURE(family_name);
        const FittedModel m = train({family, {}}, d, 5);
        for (Eigen::Index i = 0; i < 10; ++i) {
            const double p = m.explained_output(d.X.row(i));
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("split stratifies, is deterministic, and keeps every row") {
    const Dataset d = make_data(
        {"x"}, {{1}, {2}, {3}, {4}, {5}, {6}, {7}, {8}, {9}, {10}},
        {0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    auto [train_a, test_a] = split(d, 0.2, 11);
    CHECK(train_a.n_rows() == 8);
    CHECK(test_a.n_rows() == 2);
    CHECK(test_a.y.sum() == 1);
    CHECK(train_a.y.sum() == 4);

    auto [train_b, test_b] = split(d, 0.2, 11);
    CHECK(train_a.X == train_b.X);
    CHECK(test_a.X == test_b.X);

    std::vector<double> all;
    for (Eigen::Index i = 0; i < train_a.n_rows(); ++i) all.push_back(train_a.X(i, 0));
    for (Eigen::Index i = 0; i < test_a.n_rows(); ++i) all.push_back(test_a.X(i, 0));
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
}

TEST_CASE("split rejects fractions that empty a side") {
    const Dataset d = separable_1d();
    CHECK(code_of([&] { (void)split(d, 0.0, 1); }) == ErrorCode::bad_input);
    CHECK(code_of([&] { (void)split(d, 1.0, 1); }) == ErrorCode::bad_input);
    CHECK(code_of([&] { (void)split(d, 0.01, 1); }) == ErrorCode::size);
}

TEST_CASE("tune prefers the grid entry that wins cross-validation") {
    const Dataset d = xor_data(10);
    const ModelSpec best = tune(ModelFamily::decision_tree,
                                {{{"max_depth", 1}}, {{"max_depth", 3}}}, d, 5, 2);
    CHECK(best.hyperparameters.at("max_depth") == 3);
}

TEST_CASE("tune breaks ties toward the earliest grid entry") {
    const Dataset d = separable_1d();
    const ModelSpec best = tune(ModelFamily::logistic_regression,
                                {{{"C", 0.5}}, {{"C", 5.0}}}, d, 2, 9);
    CHECK(best.hyperparameters.at("C") == 0.5);
    CHECK(best.family == ModelFamily::logistic_regression);
}

TEST_CASE("tune rejects folds the class counts cannot fill") {
    const Dataset d = make_data({"x"}, {{1}, {2}, {3}, {4}, {5}, {6}}, {0, 0, 0, 0, 0, 1});
    CHECK(code_of([&] { (void)tune(ModelFamily::decision_tree, {{{"max_depth", 2}}}, d, 3, 1); }) ==
          ErrorCode::stratification);
}

TEST_CASE("logistic gradient matches central finite differences") {
    Rng rng(99);
    const Eigen::Index n = 20, p = 3;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXi y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
        y[i] = (rng.uniform() < 0.5) ? 0 : 1;
    }
    const double l2 = 0.37;
    const double h = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd theta(p + 1);
        for (Eigen::Index j = 0; j <= p; ++j) theta[j] = 2.0 * rng.normal();
        const Eigen::VectorXd g = logistic_gradient(theta, X, y, l2);
        for (Eigen::Index j = 0; j <= p; ++j) {
            Eigen::VectorXd up = theta, down = theta;
            up[j] += h;
            down[j] -= h;
            const double fd = (logistic_loss(up, X, y, l2) - logistic_loss(down, X, y, l2)) / (2 * h);
            CHECK(std::abs(g[j] - fd) <= 1e-4 * std::max(1.0, std::abs(g[j])));
        }
    }
}

TEST_CASE("tree predictions ignore row order") {
    const Dataset d = noisy_blobs(25, 13);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(d.n_rows()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Eigen::Index>(i);
    Rng rng(5);
    rng.shuffle(perm);
    const Dataset shuffled = d.take_rows(perm);

    const ModelSpec spec{ModelFamily::decision_tree, {{"max_depth", 5}}};
    const FittedModel a = train(spec, d, 1);
    const FittedModel b = train(spec, shuffled, 1);
    CHECK(a.parameters() == b.parameters());
}

TEST_CASE("a deep tree drives training error to zero") {
    const Dataset d = noisy_blobs(30, 21);
    const FittedModel m = train({ModelFamily::decision_tree, {{"max_depth", 30}}}, d, 1);
    CHECK(accuracy(m, d) == 1.0);
}

TEST_CASE("a single unbagged full-mtry forest tree equals the decision tree") {
    const Dataset d = noisy_blobs(30, 17);
    const FittedModel tree =
        train({ModelFamily::decision_tree, {{"max_depth", 4}}}, d, 3);
    const FittedModel forest = train({ModelFamily::random_forest,
                                      {{"trees", 1}, {"bootstrap", 0}, {"mtry", 3}, {"max_depth", 4}}},
                                     d, 3);
    for (Eigen::Index i = 0; i < d.n_rows(); ++i) {
        CHECK(forest.explained_output(d.X.row(i)) ==
              doctest::Approx(tree.explained_output(d.X.row(i))).epsilon(1e-12));
        CHECK(forest.predict(d.X.row(i)) == tree.predict(d.X.row(i)));
    }
}

TEST_CASE("native importances find the informative feature") {
    const Dataset d = noisy_blobs(60, 29);
    for (ModelFamily family : {ModelFamily::logistic_regression, ModelFamily::decision_tree,
                               ModelFamily::random_forest, ModelFamily::linear_svc,
                               ModelFamily::boosted_stumps}) {
        const std::string family_name = to_string(family);
        CAPTURE(family_name);
        const FittedModel m = train({family, {}}, d, 8);
        const auto imp = m.native_importances();
        REQUIRE(imp.size() == 3);
        CHECK(imp[0].first.name == "signal");
        CHECK(imp[0].second > imp[1].second);
        CHECK(imp[0].second > imp[2].second);
        for (const auto& [feature, value] : imp) {
            (void)feature;
            CHECK(value >= 0.0);
        }
    }
}

TEST_CASE("unknown hyperparameters are rejected by name") {
    const Dataset d = separable_1d();
    CHECK(code_of([&] { (void)train({ModelFamily::logistic_regression, {{"alpha", 1.0}}}, d, 1); }) ==
          ErrorCode::bad_input);
    CHECK(code_of([&] { (void)train({ModelFamily::random_forest, {{"shrinkage", 0.1}}}, d, 1); }) ==
          ErrorCode::bad_input);
    CHECK(code_of([&] { (void)train({ModelFamily::boosted_stumps, {{"C", 1.0}}}, d, 1); }) ==
          ErrorCode::bad_input);
}

TEST_CASE("single-class data cannot be fit") {
    Dataset d = make_data({"x"}, {{1}, {2}, {3}}, {1, 1, 1});
    CHECK(code_of([&] { (void)train({ModelFamily::decision_tree, {}}, d, 1); }) == ErrorCode::unfit);
}

TEST_CASE("evaluation enforces the fit-time feature set") {
    const Dataset d = separable_1d();
    const FittedModel m = train({ModelFamily::logistic_regression, {}}, d, 1);
    Dataset renamed = d;
    renamed.feature_names[0].name = "other";
    CHECK(code_of([&] { (void)accuracy(m, renamed); }) == ErrorCode::structure_mismatch);

    Eigen::RowVectorXd wide(2);
    wide << 1.0, 2.0;
    CHECK(code_of([&] { (void)m.decision(wide); }) == ErrorCode::structure_mismatch);

    const FittedModel blank;
    Eigen::RowVectorXd row(1);
    row << 1.0;
    CHECK(code_of([&] { (void)blank.predict(row); }) == ErrorCode::unfit);
}

TEST_CASE("family names round-trip") {
    for (ModelFamily family : {ModelFamily::logistic_regression, ModelFamily::decision_tree,
                               ModelFamily::random_forest, ModelFamily::linear_svc,
                               ModelFamily::boosted_stumps}) {
        CHECK(model_family_from_string(to_string(family)) == family);
    }
    CHECK(code_of([] { (void)model_family_from_string("perceptron"); }) == ErrorCode::bad_input);
}

TEST_CASE("default grids carry the documented shapes") {
    CHECK(default_grid(ModelFamily::logistic_regression).size() == 4);
    CHECK(default_grid(ModelFamily::linear_svc).size() == 4);
    CHECK(default_grid(ModelFamily::decision_tree).size() == 5);
    const auto forest = default_grid(ModelFamily::random_forest);
    CHECK(forest.size() == 4);
    for (const auto& entry : forest) {
        CHECK(entry.contains("trees"));
        CHECK(entry.contains("max_depth"));
    }
    const auto stumps = default_grid(ModelFamily::boosted_stumps);
    CHECK(stumps.size() == 4);
    for (const auto& entry : stumps) {
        CHECK(entry.contains("rounds"));
        CHECK(entry.contains("shrinkage"));
    }
}

TEST_CASE("dataset select reorders columns and rejects unknown features") {
    const Dataset d = noisy_blobs(5, 1);
    const Dataset flipped = d.select({d.feature_names[2], d.feature_names[0]});
    CHECK(flipped.n_features() == 2);
    CHECK(flipped.X.col(0) == d.X.col(2));
    CHECK(flipped.X.col(1) == d.X.col(0));
    CHECK(code_of([&] { (void)d.select({{"ghost", 9}}); }) == ErrorCode::structure_mismatch);
}

}
