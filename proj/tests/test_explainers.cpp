#include <doctest.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mipstab/dataset.hpp"
#include "mipstab/errors.hpp"
#include "mipstab/explainers.hpp"
#include "mipstab/models.hpp"
#include "mipstab/rng.hpp"

using namespace mipstab;

namespace {

Dataset random_dataset(int n_rows, int d, std::uint64_t seed, double signal = 1.5) {
    Rng rng(seed);
    Dataset out;
    for (int j = 0; j < d; ++j) out.feature_names.push_back({"f" + std::to_string(j + 1), j});
    out.X.resize(n_rows, d);
    out.y.resize(n_rows);
    for (int i = 0; i < n_rows; ++i) {
        const int label = i % 2;
        for (int j = 0; j < d; ++j) {
            out.X(i, j) = rng.normal() + (j == 0 ? signal * (2 * label - 1) : 0.0);
        }
        out.y[i] = label;
    }
    return out;
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

TEST_SUITE("explainers") {

TEST_CASE("a constant model earns zero attributions") {
    const Dataset d = random_dataset(20, 3, 2);
    // min_samples_split above n forces a single root leaf.
    const FittedModel m =
        train({ModelFamily::decision_tree, {{"min_samples_split", 1000}}}, d, 1);
    const double c = m.explained_output(d.X.row(0));

    auto [phi_exact, base_exact] = exact_shap_row(m, d, d.X.row(4));
    CHECK(base_exact == doctest::Approx(c).epsilon(1e-12));
    for (int j = 0; j < 3; ++j) CHECK(phi_exact[j] == doctest::Approx(0.0).epsilon(1e-12));

    auto [phi_kernel, base_kernel] = kernel_shap_row(m, d, d.X.row(4), {});
    CHECK(base_kernel == doctest::Approx(c).epsilon(1e-12));
    for (int j = 0; j < 3; ++j) CHECK(std::abs(phi_kernel[j]) <= 1e-9);
}

TEST_CASE("affine models get their closed-form attribution") {
    const Dataset d = random_dataset(40, 3, 5);
    const FittedModel m = train({ModelFamily::linear_svc, {{"C", 1.0}}}, d, 1);
    const Eigen::RowVectorXd x = d.X.row(7);

    // The margin is affine in x, so phi_j = w_j * (x_j - mean(background_j))
    // with w_j recovered by a unit finite difference.
    Eigen::VectorXd expected(3);
    for (int j = 0; j < 3; ++j) {
        Eigen::RowVectorXd bumped = x;
        bumped[j] += 1.0;
        const double w = m.explained_output(bumped) - m.explained_output(x);
        expected[j] = w * (x[j] - d.X.col(j).mean());
    }

    auto [phi_exact, base_exact] = exact_shap_row(m, d, x);
    auto [phi_kernel, base_kernel] = kernel_shap_row(m, d, x, {});
    for (int j = 0; j < 3; ++j) {
        CHECK(phi_exact[j] == doctest::Approx(expected[j]).epsilon(1e-6));
        CHECK(phi_kernel[j] == doctest::Approx(expected[j]).epsilon(1e-6));
    }
    CHECK(base_kernel == doctest::Approx(base_exact).epsilon(1e-12));
}

TEST_CASE("full coalition coverage reproduces exact shapley values") {
    const Dataset d = random_dataset(30, 5, 11);
    const FittedModel m = train({ModelFamily::random_forest, {{"trees", 15}, {"max_depth", 3}}}, d, 4);
    const Dataset bg = background_sample(d, 12, 1);

    for (Eigen::Index row : {0, 3, 9}) {
        auto [phi_exact, base_exact] = exact_shap_row(m, bg, d.X.row(row));
        ExplainerSpec spec;
        spec.n_coalition_samples = 30;  // 2^5 - 2, the whole proper lattice
        auto [phi_kernel, base_kernel] = kernel_shap_row(m, bg, d.X.row(row), spec);
        CHECK(base_kernel == doctest::Approx(base_exact).epsilon(1e-12));
        for (int j = 0; j < 5; ++j)
            CHECK(phi_kernel[j] == doctest::Approx(phi_exact[j]).epsilon(1e-6));
    }
}

TEST_CASE("single-feature attribution is the full output shift") {
    const Dataset d = random_dataset(16, 1, 3);
    const FittedModel m = train({ModelFamily::logistic_regression, {}}, d, 1);
    const Eigen::RowVectorXd x = d.X.row(2);
    auto [phi, base] = exact_shap_row(m, d, x);
    CHECK(phi[0] == doctest::Approx(m.explained_output(x) - base).epsilon(1e-12));
    auto [phi_k, base_k] = kernel_shap_row(m, d, x, {});
    CHECK(phi_k[0] == doctest::Approx(m.explained_output(x) - base_k).epsilon(1e-12));
}

TEST_CASE("identical features with identical values share credit") {
    Rng rng(31);
    Dataset d;
    d.feature_names = {{"a", 0}, {"b", 1}, {"c", 2}};
    d.X.resize(30, 3);
    d.y.resize(30);
    for (int i = 0; i < 30; ++i) {
        const int label = i % 2;
        const double v = rng.normal() + 1.2 * (2 * label - 1);
        d.X(i, 0) = v;
        d.X(i, 1) = v;  // exact duplicate of column 0
        d.X(i, 2) = rng.normal();
        d.y[i] = label;
    }
    const FittedModel m = train({ModelFamily::logistic_regression, {}}, d, 1);
    auto [phi, base] = exact_shap_row(m, d, d.X.row(5));
    (void)base;
    CHECK(phi[0] == doctest::Approx(phi[1]).epsilon(1e-7));
}

TEST_CASE("features the model never touches get exactly zero") {
    const Dataset d = random_dataset(40, 3, 19, 3.0);
    // Depth-1 tree: one split on the informative feature, others untouched.
    const FittedModel m = train({ModelFamily::decision_tree, {{"max_depth", 1}}}, d, 1);
    REQUIRE(m.native_importances()[0].second > 0.0);

    auto [phi, base] = exact_shap_row(m, d, d.X.row(6));
    (void)base;
    CHECK(phi[1] == 0.0);
    CHECK(phi[2] == 0.0);

    auto [phi_k, base_k] = kernel_shap_row(m, d, d.X.row(6), {});
    (void)base_k;
    CHECK(std::abs(phi_k[1]) <= 1e-9);
    CHECK(std::abs(phi_k[2]) <= 1e-9);
}

TEST_CASE("sampled kernel shap keeps local accuracy to the last bit") {
    const Dataset d = random_dataset(60, 8, 23);
    const FittedModel m = train({ModelFamily::random_forest, {{"trees", 10}, {"max_depth", 3}}}, d, 2);
    const Dataset bg = background_sample(d, 20, 7);
    ExplainerSpec spec;
    spec.n_coalition_samples = 64;  // well below 2^8 - 2: the sampling path
    spec.seed = 5;
    for (Eigen::Index row : {1, 8, 17}) {
        auto [phi, base] = kernel_shap_row(m, bg, d.X.row(row), spec);
        CHECK(phi.sum() + base == doctest::Approx(m.explained_output(d.X.row(row))).epsilon(1e-9));
    }
}

TEST_CASE("exact shapley values satisfy additivity") {
    const Dataset d = random_dataset(25, 4, 41);
    const FittedModel m = train({ModelFamily::boosted_stumps, {{"rounds", 40}}}, d, 1);
    auto [phi, base] = exact_shap_row(m, d, d.X.row(3));
    CHECK(phi.sum() + base == doctest::Approx(m.explained_output(d.X.row(3))).epsilon(1e-9));
}

TEST_CASE("attribution error shrinks as the sample budget grows") {
    const Dataset d = random_dataset(40, 5, 53);
    const FittedModel m = train({ModelFamily::random_forest, {{"trees", 12}, {"max_depth", 4}}}, d, 6);
    const Dataset bg = background_sample(d, 10, 3);

    auto mae_at = [&](int samples) {
        double total = 0.0;
        int count = 0;
        for (Eigen::Index row : {0, 5, 11, 20}) {
            auto [phi_exact, b1] = exact_shap_row(m, bg, d.X.row(row));
            (void)b1;
            ExplainerSpec spec;
            spec.n_coalition_samples = samples;
            spec.seed = 71;
            auto [phi, b2] = kernel_shap_row(m, bg, d.X.row(row), spec);
            (void)b2;
            total += (phi - phi_exact).cwiseAbs().sum();
            count += 5;
        }
        return total / count;
    };

    const double coarse = mae_at(16);
    const double fine = mae_at(32);  // >= 2^5 - 2 means full enumeration
    CHECK(fine <= 1e-6);
    CHECK(coarse >= fine);
}

TEST_CASE("attribute_rows is indifferent to the thread count") {
    const Dataset d = random_dataset(12, 4, 61);
    const FittedModel m = train({ModelFamily::boosted_stumps, {{"rounds", 30}}}, d, 1);
    ExplainerSpec spec;
    spec.n_coalition_samples = 8;
    spec.seed = 17;
    const Attribution serial = attribute_rows(m, d, d, spec, 1);
    const Attribution threaded = attribute_rows(m, d, d, spec, 4);
    CHECK(serial.per_row == threaded.per_row);
    CHECK(serial.base_value == threaded.base_value);
    CHECK(serial.per_row.rows() == 12);
    CHECK(serial.per_row.cols() == 4);
}

TEST_CASE("global shap importances ignore test row order under enumeration") {
    const Dataset d = random_dataset(14, 4, 67);
    const FittedModel m = train({ModelFamily::decision_tree, {{"max_depth", 3}}}, d, 1);
    ExplainerSpec spec;
    spec.n_coalition_samples = 14;  // 2^4 - 2: enumeration, seed-independent
    const auto forward = explain_global(m, d, d, spec);

    std::vector<Eigen::Index> reversed(static_cast<std::size_t>(d.n_rows()));
    for (std::size_t i = 0; i < reversed.size(); ++i)
        reversed[i] = d.n_rows() - 1 - static_cast<Eigen::Index>(i);
    const auto backward = explain_global(m, d, d.take_rows(reversed), spec);

    REQUIRE(forward.size() == backward.size());
    for (std::size_t j = 0; j < forward.size(); ++j) {
        CHECK(forward[j].first == backward[j].first);
        CHECK(forward[j].second == doctest::Approx(backward[j].second).epsilon(1e-12));
    }
}

TEST_CASE("permutation importance exposes useful and useless features") {
    const Dataset d = random_dataset(200, 3, 73, 2.5);
    const FittedModel m = train({ModelFamily::decision_tree, {{"max_depth", 1}}}, d, 1);
    const auto imp = permutation_importance(m, d, 20, 9);
    REQUIRE(imp.size() == 3);
    CHECK(imp[0].second > 0.1);
    CHECK(std::abs(imp[1].second) <= 0.02);
    CHECK(std::abs(imp[2].second) <= 0.02);
}

TEST_CASE("correlated duplicates mask each other under permutation") {
    Rng rng(83);
    auto build = [&](bool duplicate) {
        Dataset d;
        d.feature_names = {{"s1", 0}, {"s2", 1}};
        d.X.resize(300, 2);
        d.y.resize(300);
        for (int i = 0; i < 300; ++i) {
            const int label = i % 2;
            const double v = rng.normal() + 1.6 * (2 * label - 1);
            d.X(i, 0) = v;
            d.X(i, 1) = duplicate ? v : rng.normal();
            d.y[i] = label;
        }
        return d;
    };
    const Dataset solo = build(false);
    const Dataset dup = build(true);
    const FittedModel m_solo = train({ModelFamily::logistic_regression, {}}, solo, 1);
    const FittedModel m_dup = train({ModelFamily::logistic_regression, {}}, dup, 1);
    const double drop_solo = permutation_importance(m_solo, solo, 15, 3)[0].second;
    const double drop_dup = permutation_importance(m_dup, dup, 15, 3)[0].second;
    CHECK(drop_dup < drop_solo);
}

TEST_CASE("global explainers cover the permutation and native kinds") {
    const Dataset d = random_dataset(80, 3, 89);
    const FittedModel m = train({ModelFamily::logistic_regression, {}}, d, 1);

    ExplainerSpec native_spec;
    native_spec.kind = ExplainerKind::native;
    const auto native = explain_global(m, d, d, native_spec);
    const auto direct = m.native_importances();
    REQUIRE(native.size() == direct.size());
    for (std::size_t j = 0; j < native.size(); ++j) {
        CHECK(native[j].first == direct[j].first);
        CHECK(native[j].second == direct[j].second);
    }

    ExplainerSpec perm_spec;
    perm_spec.kind = ExplainerKind::permutation;
    perm_spec.n_permutation_repeats = 5;
    const auto perm = explain_global(m, d, d, perm_spec);
    REQUIRE(perm.size() == 3);
    CHECK(perm[0].second > perm[1].second);
}

TEST_CASE("background sampling is deterministic and bounded") {
    const Dataset d = random_dataset(50, 3, 97);
    CHECK(background_sample(d, 100, 1).n_rows() == 50);
    const Dataset a = background_sample(d, 10, 5);
    const Dataset b = background_sample(d, 10, 5);
    CHECK(a.n_rows() == 10);
    CHECK(a.X == b.X);
    CHECK(code_of([&] { (void)background_sample(d, 0, 1); }) == ErrorCode::bad_input);
}

TEST_CASE("cost guards cap the feature count") {
    const Dataset wide = random_dataset(40, 16, 101);
    const FittedModel m = train({ModelFamily::logistic_regression, {}}, wide, 1);
    CHECK(code_of([&] { (void)exact_shap_row(m, wide, wide.X.row(0)); }) == ErrorCode::cost_guard);

    const Dataset wider = random_dataset(40, 31, 103);
    const FittedModel m31 = train({ModelFamily::logistic_regression, {}}, wider, 1);
    CHECK(code_of([&] { (void)kernel_shap_row(m31, wider, wider.X.row(0), {}); }) ==
          ErrorCode::cost_guard);
}

TEST_CASE("structure mismatches are rejected up front") {
    const Dataset d = random_dataset(20, 3, 107);
    const FittedModel m = train({ModelFamily::logistic_regression, {}}, d, 1);
    const Dataset narrow = random_dataset(20, 2, 109);
    CHECK(code_of([&] { (void)exact_shap_row(m, narrow, narrow.X.row(0)); }) ==
          ErrorCode::structure_mismatch);
    Eigen::RowVectorXd short_row(2);
    short_row << 0.0, 0.0;
    CHECK(code_of([&] { (void)kernel_shap_row(m, d, short_row, {}); }) ==
          ErrorCode::structure_mismatch);

    ExplainerSpec perm_spec;
    perm_spec.kind = ExplainerKind::permutation;
    CHECK(code_of([&] { (void)attribute_rows(m, d, d, perm_spec); }) == ErrorCode::capability);
}

TEST_CASE("explainer kind names round-trip") {
    for (ExplainerKind kind : {ExplainerKind::kernel_shap, ExplainerKind::exact_shap,
                               ExplainerKind::permutation, ExplainerKind::native}) {
        CHECK(explainer_kind_from_string(to_string(kind)) == kind);
    }
    CHECK(code_of([] { (void)explainer_kind_from_string("lime"); }) == ErrorCode::bad_input);
}

}
