#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "mipstab/cli_io.hpp"
#include "mipstab/explainers.hpp"
#include "mipstab/mip.hpp"
#include "mipstab/pca.hpp"
#include "mipstab/rank_stats.hpp"
#include "mipstab/rng.hpp"
#include "mipstab/synth.hpp"

namespace py = pybind11;
using namespace mipstab;

namespace {

Dataset make_dataset(const std::vector<std::string>& names, const Eigen::MatrixXd& X,
                     const Eigen::VectorXi& y) {
    Dataset data;
    for (std::size_t j = 0; j < names.size(); ++j) {
        data.feature_names.push_back({names[j], static_cast<int>(j)});
    }
    data.X = X;
    data.y = y;
    data.validate();
    return data;
}

std::vector<std::string> ranking_names(const Ranking& ranking) {
    std::vector<std::string> names;
    names.reserve(ranking.size());
    for (const FeatureId& f : ranking.features()) names.push_back(f.name);
    return names;
}

py::dict score_table_dict(const ScoreTable& table) {
    py::dict mip, terms;
    for (const FeatureScore& entry : table.entries) {
        mip[py::str(entry.feature.name)] = entry.mip;
        py::list feature_terms;
        for (const auto& [n, x] : entry.terms) feature_terms.append(py::make_tuple(n, x));
        terms[py::str(entry.feature.name)] = feature_terms;
    }
    py::dict out;
    out["mip"] = mip;
    out["terms"] = terms;
    out["sd"] = table.sd;
    out["mip_ranking"] = ranking_names(table.mip_ranking);
    return out;
}

EliminationTrace trace_from_lists(const std::vector<std::vector<std::string>>& rankings) {
    EliminationTrace trace;
    std::vector<FeatureId> canonical;
    for (const auto& names : rankings) {
        std::vector<FeatureId> ordered;
        for (const std::string& name : names) {
            if (canonical.empty() ||
                std::none_of(canonical.begin(), canonical.end(),
                             [&](const FeatureId& f) { return f.name == name; })) {
                if (!trace.rankings.empty())
                    throw Error(ErrorCode::parse, "unknown feature " + name + " in later ranking");
                canonical.push_back({name, static_cast<int>(canonical.size())});
            }
            const auto it = std::find_if(canonical.begin(), canonical.end(),
                                         [&](const FeatureId& f) { return f.name == name; });
            ordered.push_back(*it);
        }
        trace.rankings.emplace_back(std::move(ordered));
    }
    for (std::size_t k = 0; k + 1 < trace.rankings.size(); ++k) {
        trace.removed.push_back(trace.rankings[k].head());
    }
    trace.validate();
    return trace;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Collinearity-aware re-ranking of feature importance lists";
    m.attr("__version__") = kToolVersion;

    py::register_exception<Error>(m, "MipstabError");

    py::class_<FittedModel>(m, "FittedModel")
        .def_property_readonly("family",
                               [](const FittedModel& model) { return to_string(model.spec().family); })
        .def_property_readonly("hyperparameters",
                               [](const FittedModel& model) { return model.spec().hyperparameters; })
        .def_property_readonly("converged", &FittedModel::converged)
        .def_property_readonly("feature_names",
                               [](const FittedModel& model) {
                                   std::vector<std::string> names;
                                   for (const FeatureId& f : model.feature_names())
                                       names.push_back(f.name);
                                   return names;
                               })
        .def("decision", &FittedModel::decision, py::arg("row"))
        .def("explained_output", &FittedModel::explained_output, py::arg("row"))
        .def("predict", &FittedModel::predict, py::arg("row"))
        .def("parameters", &FittedModel::parameters)
        .def("native_importances", [](const FittedModel& model) {
            py::dict out;
            for (const auto& [feature, value] : model.native_importances()) {
                out[py::str(feature.name)] = value;
            }
            return out;
        });

    m.def(
        "train",
        [](const std::string& family, const std::map<std::string, double>& hyperparameters,
           const std::vector<std::string>& names, const Eigen::MatrixXd& X,
           const Eigen::VectorXi& y, std::uint64_t seed) {
            const ModelSpec spec{model_family_from_string(family), hyperparameters};
            return train(spec, make_dataset(names, X, y), seed);
        },
        py::arg("family"), py::arg("hyperparameters"), py::arg("feature_names"), py::arg("X"),
        py::arg("y"), py::arg("seed") = 0);

    m.def(
        "accuracy",
        [](const FittedModel& model, const std::vector<std::string>& names,
           const Eigen::MatrixXd& X, const Eigen::VectorXi& y) {
            return accuracy(model, make_dataset(names, X, y));
        },
        py::arg("model"), py::arg("feature_names"), py::arg("X"), py::arg("y"));

    m.def(
        "kernel_shap",
        [](const FittedModel& model, const Eigen::MatrixXd& background,
           const Eigen::RowVectorXd& x, int n_coalition_samples, std::uint64_t seed) {
            Dataset bg;
            bg.feature_names = model.feature_names();
            bg.X = background;
            bg.y = Eigen::VectorXi::Zero(background.rows());
            ExplainerSpec spec;
            spec.kind = ExplainerKind::kernel_shap;
            spec.n_coalition_samples = n_coalition_samples;
            spec.seed = seed;
            const auto [phi, base] = kernel_shap_row(model, bg, x, spec);
            return py::make_tuple(phi, base);
        },
        py::arg("model"), py::arg("background"), py::arg("x"),
        py::arg("n_coalition_samples") = 128, py::arg("seed") = 0);

    m.def(
        "exact_shap",
        [](const FittedModel& model, const Eigen::MatrixXd& background,
           const Eigen::RowVectorXd& x) {
            Dataset bg;
            bg.feature_names = model.feature_names();
            bg.X = background;
            bg.y = Eigen::VectorXi::Zero(background.rows());
            const auto [phi, base] = exact_shap_row(model, bg, x);
            return py::make_tuple(phi, base);
        },
        py::arg("model"), py::arg("background"), py::arg("x"));

    m.def(
        "mip_scores",
        [](const std::vector<std::vector<std::string>>& rankings, const py::object& term_decimals) {
            const EliminationTrace trace = trace_from_lists(rankings);
            if (py::isinstance<py::int_>(term_decimals))
                return score_table_dict(mip_scores(trace, term_decimals.cast<int>()));
            return score_table_dict(mip_scores(trace, term_decimals.cast<std::vector<int>>()));
        },
        py::arg("rankings"), py::arg("term_decimals") = -1);

    m.def(
        "nmr",
        [](const std::vector<std::vector<std::string>>& rankings) {
            const auto [rate, movements] = nmr(trace_from_lists(rankings));
            py::list records;
            for (const MovementRecord& record : movements) {
                py::dict row;
                row["n_before"] = record.n_before;
                row["m"] = record.movement_m;
                row["mpm"] = record.mpm;
                row["rate"] = record.movement_rate;
                records.append(row);
            }
            return py::make_tuple(rate, records);
        },
        py::arg("rankings"));

    m.def(
        "kendall_tau_b",
        [](const std::vector<double>& x, const std::vector<double>& y,
           const std::string& alternative) {
            const TauResult result = kendall_tau_b(x, y, alternative_from_string(alternative));
            py::dict out;
            out["tau"] = result.tau;
            out["p"] = result.p;
            out["p_asymptotic"] = result.p_asymptotic;
            out["exact_available"] = result.exact_available;
            if (result.exact_available) out["p_exact"] = result.p_exact;
            return out;
        },
        py::arg("x"), py::arg("y"), py::arg("alternative") = "two_sided");

    m.def(
        "pearson_r",
        [](const std::vector<double>& x, const std::vector<double>& y,
           const std::string& alternative) {
            const CorrelationResult result = pearson_r(x, y, alternative_from_string(alternative));
            return py::make_tuple(result.r, result.p);
        },
        py::arg("x"), py::arg("y"), py::arg("alternative") = "two_sided");

    m.def(
        "fit_pca",
        [](const Eigen::MatrixXd& X, double variance_threshold) {
            const PcaModel model = fit_pca(X, variance_threshold);
            py::dict out;
            out["means"] = model.means;
            out["scales"] = model.scales;
            out["components"] = model.components;
            out["explained_variance_ratio"] = model.explained_variance_ratio;
            out["eigenvalues"] = model.eigenvalues;
            out["constant_columns"] = model.constant_columns;
            return out;
        },
        py::arg("X"), py::arg("variance_threshold") = 0.95);

    m.def(
        "generate",
        [](int n_rows, const Eigen::MatrixXd& correlation, const Eigen::VectorXd& weights,
           double intercept, std::uint64_t seed) {
            SynthSpec spec;
            spec.n_rows = n_rows;
            spec.correlation = correlation;
            spec.weights = weights;
            spec.intercept = intercept;
            spec.seed = seed;
            const Dataset data = generate(spec);
            std::vector<std::string> names;
            for (const FeatureId& f : data.feature_names) names.push_back(f.name);
            return py::make_tuple(names, data.X, data.y);
        },
        py::arg("n_rows"), py::arg("correlation"), py::arg("weights"), py::arg("intercept") = 0.0,
        py::arg("seed") = 0);

    m.def(
        "stability_report",
        [](const std::string& family, const std::vector<std::string>& names,
           const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const std::string& explainer,
           double test_fraction, int folds, std::uint64_t seed, int threads,
           int n_coalition_samples, int background_size) {
            ModelSpec spec{model_family_from_string(family), {}};
            ExplainerSpec explainer_spec;
            explainer_spec.kind = explainer_kind_from_string(explainer);
            explainer_spec.n_coalition_samples = n_coalition_samples;
            explainer_spec.background_size = background_size;
            explainer_spec.seed = mix_seed(seed, 0x65787031u);
            StabilitySettings settings;
            settings.test_fraction = test_fraction;
            settings.folds = folds;
            settings.seed = seed;
            settings.threads = threads;
            const StabilityReport report =
                stability_report(spec, explainer_spec, make_dataset(names, X, y), settings);
            py::dict out;
            out["base_ranking"] = ranking_names(report.base_ranking);
            py::list rankings;
            for (const Ranking& ranking : report.trace.rankings)
                rankings.append(ranking_names(ranking));
            out["rankings"] = rankings;
            out["scores"] = score_table_dict(report.scores);
            out["nmr"] = report.nmr;
            out["sd"] = report.sd;
            out["tuned_hyperparameters"] = report.tuned_spec.hyperparameters;
            out["test_accuracy"] = report.test_accuracy;
            return out;
        },
        py::arg("family"), py::arg("feature_names"), py::arg("X"), py::arg("y"),
        py::arg("explainer") = "kernel_shap", py::arg("test_fraction") = 0.2, py::arg("folds") = 10,
        py::arg("seed") = 0, py::arg("threads") = 1, py::arg("n_coalition_samples") = 128,
        py::arg("background_size") = 100);
}
