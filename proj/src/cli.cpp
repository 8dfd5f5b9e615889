#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>

#include "mipstab/cli_io.hpp"
#include "mipstab/pca.hpp"
#include "mipstab/rank_stats.hpp"
#include "mipstab/rng.hpp"

namespace mipstab {

namespace {

using nlohmann::json;

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open config " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, path + ": " + e.what());
    }
}

struct CommonFlags {
    std::string data_path, target, model = "logistic_regression", explainer = "kernel_shap";
    std::string config_path, out_path;
    double test_fraction = 0.2;
    int folds = 10;
    int threads = 1;
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd, bool with_model) {
        cmd->add_option("--data", data_path, "CSV dataset path");
        cmd->add_option("--target", target, "target column name");
        if (with_model) {
            cmd->add_option("--model", model,
                            "model family: logistic_regression, decision_tree, random_forest, "
                            "linear_svc, boosted_stumps");
            cmd->add_option("--explainer", explainer,
                            "explainer: kernel_shap, exact_shap, permutation, native");
        }
        cmd->add_option("--seed", seed, "RNG seed (omit for a non-deterministic run)");
        cmd->add_option("--test-fraction", test_fraction, "held-out fraction (0,1)");
        cmd->add_option("--folds", folds, "cross-validation folds");
        cmd->add_option("--threads", threads, "worker threads for per-row explanations");
        cmd->add_option("--out", out_path, "output file path");
        cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    }
};

RunConfig merge_config(const CommonFlags& flags, const CLI::App* cmd) {
    RunConfig config;
    bool config_has_seed = false;
    if (!flags.config_path.empty()) {
        const json j = load_config_file(flags.config_path);
        if (j.contains("data")) config.data_path = j.at("data").get<std::string>();
        if (j.contains("target")) config.target = j.at("target").get<std::string>();
        if (j.contains("model"))
            config.model.family = model_family_from_string(j.at("model").get<std::string>());
        if (j.contains("hyperparameters"))
            config.model.hyperparameters =
                j.at("hyperparameters").get<std::map<std::string, double>>();
        if (j.contains("grid")) {
            for (const auto& entry : j.at("grid"))
                config.grid.push_back(entry.get<std::map<std::string, double>>());
        }
        if (j.contains("explainer")) {
            const json& e = j.at("explainer");
            if (e.contains("kind"))
                config.explainer.kind =
                    explainer_kind_from_string(e.at("kind").get<std::string>());
            if (e.contains("n_coalition_samples"))
                config.explainer.n_coalition_samples = e.at("n_coalition_samples").get<int>();
            if (e.contains("n_permutation_repeats"))
                config.explainer.n_permutation_repeats = e.at("n_permutation_repeats").get<int>();
            if (e.contains("background_size"))
                config.explainer.background_size = e.at("background_size").get<int>();
        }
        if (j.contains("test_fraction")) config.test_fraction = j.at("test_fraction").get<double>();
        if (j.contains("folds")) config.folds = j.at("folds").get<int>();
        if (j.contains("seed")) {
            config.seed = j.at("seed").get<std::uint64_t>();
            config_has_seed = true;
        }
        if (j.contains("threads")) config.threads = j.at("threads").get<int>();
        if (j.contains("out")) config.out_path = j.at("out").get<std::string>();
    }

    auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };
    if (passed("--data")) config.data_path = flags.data_path;
    if (passed("--target")) config.target = flags.target;
    try {
        if (cmd->get_option_no_throw("--model") != nullptr && passed("--model"))
            config.model.family = model_family_from_string(flags.model);
        if (cmd->get_option_no_throw("--explainer") != nullptr && passed("--explainer"))
            config.explainer.kind = explainer_kind_from_string(flags.explainer);
    } catch (const Error& e) {
        throw Error(ErrorCode::usage, e.message());
    }
    if (passed("--test-fraction")) config.test_fraction = flags.test_fraction;
    if (passed("--folds")) config.folds = flags.folds;
    if (passed("--threads")) config.threads = flags.threads;
    if (passed("--out")) config.out_path = flags.out_path;

    if (passed("--seed")) {
        config.seed = flags.seed;
        config.seeded = true;
    } else if (config_has_seed) {
        config.seeded = true;
    } else {
        config.seed = std::random_device{}();
        config.seeded = false;
    }
    config.explainer.seed = mix_seed(config.seed, 0x65787031u);
    return config;
}

int run_rank(const CommonFlags& flags, const CLI::App* cmd, const std::string& rankings_csv) {
    RunConfig config = merge_config(flags, cmd);
    config.validate();
    const Dataset data = load_csv(config.data_path, config.target);

    StabilitySettings settings;
    settings.test_fraction = config.test_fraction;
    settings.folds = config.folds;
    settings.seed = config.seed;
    settings.threads = config.threads;
    settings.grid = config.grid;
    const StabilityReport report =
        stability_report(config.model, config.explainer, data, settings);

    const std::string text = report_to_string(report, config);
    std::cout << text;
    if (!config.out_path.empty()) write_report(report, config, config.out_path);
    if (!rankings_csv.empty()) write_rankings_csv(report.trace, rankings_csv);
    return 0;
}

std::vector<int> parse_term_decimals(const std::string& arg) {
    std::vector<int> decimals;
    std::size_t start = 0;
    while (start <= arg.size()) {
        const std::size_t comma = arg.find(',', start);
        const std::string token =
            arg.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        int value = 0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || ptr != token.data() + token.size() || value < -1 || value > 18)
            throw Error(ErrorCode::usage,
                        "--term-decimals expects integers in [-1, 18], got '" + token + "'");
        decimals.push_back(value);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return decimals;
}

int run_replay(const std::string& trace_path, const std::string& term_decimals_arg,
               const std::string& out_path, const std::string& rankings_csv) {
    const std::vector<int> decimals = parse_term_decimals(term_decimals_arg);
    const EliminationTrace trace = read_trace(trace_path);
    const ScoreTable table =
        decimals.size() == 1 ? mip_scores(trace, decimals.front()) : mip_scores(trace, decimals);
    const auto [rate, movements] = nmr(trace);

    json scores = json::object();
    for (const FeatureScore& entry : table.entries) {
        json terms = json::array();
        for (const auto& [n, x] : entry.terms) terms.push_back(json::array({n, x}));
        scores[entry.feature.name] = json{{"mip", entry.mip}, {"terms", terms}};
    }
    json ranking = json::array();
    for (const FeatureId& f : table.mip_ranking.features()) ranking.push_back(f.name);
    json movement_rows = json::array();
    for (const MovementRecord& record : movements) {
        movement_rows.push_back(json{{"n_before", record.n_before},
                                     {"m", record.movement_m},
                                     {"mpm", record.mpm},
                                     {"rate", record.movement_rate}});
    }
    const json doc{{"trace", trace_path},
                   {"term_decimals", decimals.size() == 1 ? json(decimals.front()) : json(decimals)},
                   {"scores", scores},
                   {"mip_ranking", ranking},
                   {"movements", movement_rows},
                   {"nmr", rate},
                   {"sd", table.sd}};
    const std::string text = doc.dump(2) + "\n";
    std::cout << text;
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw Error(ErrorCode::io, "cannot write " + out_path);
        out << text;
    }
    if (!rankings_csv.empty()) write_rankings_csv(trace, rankings_csv);
    return 0;
}

int run_compare(const std::string& path_a, const std::string& path_b,
                const std::string& coding_path, const std::string& alternative_name) {
    Alternative alternative = Alternative::two_sided;
    try {
        alternative = alternative_from_string(alternative_name);
    } catch (const Error& e) {
        throw Error(ErrorCode::usage, e.message());
    }
    const Ranking a = read_ranking_file(path_a);
    const Ranking b = read_ranking_file(path_b, &a.features());
    const Ranking coding = coding_path.empty() ? a : read_ranking_file(coding_path, &a.features());
    if (a.size() != b.size())
        throw Error(ErrorCode::structure_mismatch, "ranking files have different sizes");

    const std::vector<double> codes_a = coded_order(coding, a);
    const std::vector<double> codes_b = coded_order(coding, b);
    const TauResult tau = kendall_tau_b(codes_a, codes_b, alternative);
    const CorrelationResult pearson = pearson_r(codes_a, codes_b, alternative);

    json kendall{{"tau", tau.tau},
                 {"p", tau.p},
                 {"p_asymptotic", tau.p_asymptotic},
                 {"exact_available", tau.exact_available}};
    if (tau.exact_available) kendall["p_exact"] = tau.p_exact;
    const json doc{{"n", a.size()},
                   {"alternative", to_string(alternative)},
                   {"kendall", kendall},
                   {"pearson", json{{"r", pearson.r}, {"p", pearson.p}}}};
    std::cout << doc.dump(2) << "\n";
    return 0;
}

Dataset collinear_demo_dataset(int rows, int dim, double pair_corr, double intercept,
                               std::uint64_t seed) {
    if (dim < 3) throw Error(ErrorCode::usage, "--dim must be >= 3");
    SynthSpec spec;
    spec.n_rows = rows;
    spec.seed = seed;
    spec.intercept = intercept;
    spec.correlation = Eigen::MatrixXd::Identity(dim, dim);
    spec.weights.resize(dim);
    for (int j = 0; j < dim; ++j) {
        spec.weights[j] = 0.4 + 0.35 * static_cast<double>(j);
    }
    if (pair_corr != 0.0) {
        if (std::abs(pair_corr) >= 1.0)
            throw Error(ErrorCode::usage, "--pair-corr must be in (-1, 1)");
        spec.correlation(0, 1) = pair_corr;
        spec.correlation(1, 0) = pair_corr;
        // The correlated pair shares one signal: the motivating pathology.
        const double shared = spec.weights[dim - 1];
        spec.weights[0] = shared / 2.0;
        spec.weights[1] = shared / 2.0;
    }
    return generate(spec);
}

int run_synth(int rows, int dim, double pair_corr, double intercept, std::uint64_t seed,
              const std::string& out_path) {
    if (out_path.empty()) throw Error(ErrorCode::usage, "synth requires --out");
    if (rows < 2) throw Error(ErrorCode::usage, "--rows must be >= 2");
    const Dataset data = collinear_demo_dataset(rows, dim, pair_corr, intercept, seed);
    write_csv(data, "target", out_path);
    const json doc{{"written", out_path},
                   {"rows", data.n_rows()},
                   {"features", data.n_features()},
                   {"pair_corr", pair_corr},
                   {"seed", seed}};
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int run_corr_matrix(const std::string& data_path, const std::string& target,
                    const std::string& out_path) {
    if (data_path.empty()) throw Error(ErrorCode::usage, "corr-matrix requires --data");
    if (target.empty()) throw Error(ErrorCode::usage, "corr-matrix requires --target");
    if (out_path.empty()) throw Error(ErrorCode::usage, "corr-matrix requires --out");
    const Dataset data = load_csv(data_path, target);
    write_correlation_csv(correlation_matrix(data), data.feature_names, out_path);
    const json doc{{"written", out_path}, {"features", data.n_features()}};
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int run_pca_validate(const CommonFlags& flags, const CLI::App* cmd, int rows, int dim,
                     double pair_corr, double variance_threshold) {
    RunConfig config = merge_config(flags, cmd);
    Dataset data;
    if (!config.data_path.empty()) {
        if (config.target.empty()) throw Error(ErrorCode::usage, "missing --target");
        data = load_csv(config.data_path, config.target);
    } else {
        data = collinear_demo_dataset(rows, dim, pair_corr, 0.0, config.seed);
    }

    const PcaModel pca = fit_pca(data.X, variance_threshold);
    Dataset scores;
    scores.X = transform(pca, data.X);
    scores.y = data.y;
    for (Eigen::Index c = 0; c < pca.n_components(); ++c) {
        scores.feature_names.push_back({"PC" + std::to_string(c + 1), static_cast<int>(c)});
    }
    if (scores.n_features() < 3)
        throw Error(ErrorCode::domain,
                    "PCA kept fewer than 3 components; stability analysis needs at least 3");

    StabilitySettings settings;
    settings.test_fraction = config.test_fraction;
    settings.folds = config.folds;
    settings.seed = config.seed;
    settings.threads = config.threads;
    settings.grid = config.grid;
    const StabilityReport report =
        stability_report(config.model, config.explainer, scores, settings);

    json base = json::array(), mip = json::array(), ratios = json::array();
    for (const FeatureId& f : report.base_ranking.features()) base.push_back(f.name);
    for (const FeatureId& f : report.scores.mip_ranking.features()) mip.push_back(f.name);
    for (Eigen::Index c = 0; c < pca.explained_variance_ratio.size(); ++c) {
        ratios.push_back(pca.explained_variance_ratio[c]);
    }
    const json doc{{"components", pca.n_components()},
                   {"explained_variance_ratio", ratios},
                   {"base_ranking", base},
                   {"mip_ranking", mip},
                   {"agreement", report.base_ranking == report.scores.mip_ranking},
                   {"nmr", report.nmr},
                   {"sd", report.sd}};
    const std::string text = doc.dump(2) + "\n";
    std::cout << text;
    if (!config.out_path.empty()) {
        std::ofstream out(config.out_path);
        if (!out) throw Error(ErrorCode::io, "cannot write " + config.out_path);
        out << text;
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Collinearity-aware re-ranking of feature importance lists"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    CommonFlags rank_flags;
    std::string rank_rankings_csv;
    CLI::App* rank_cmd = app.add_subcommand("rank", "full pipeline: split, tune, eliminate, score");
    rank_flags.attach(rank_cmd, true);
    rank_cmd->add_option("--export-rankings", rank_rankings_csv, "also write the trace as CSV");

    std::string trace_path, replay_out, replay_rankings_csv;
    std::string term_decimals = "-1";
    CLI::App* replay_cmd =
        app.add_subcommand("replay", "compute MIP/NMR from a recorded trace file");
    replay_cmd->add_option("--trace", trace_path, "trace fixture path")->required();
    replay_cmd->add_option("--term-decimals", term_decimals,
                           "round each i/n term to this many decimals before summing; one value "
                           "or a comma list, one per iteration (-1 = full precision)");
    replay_cmd->add_option("--out", replay_out, "write the replay result JSON here");
    replay_cmd->add_option("--export-rankings", replay_rankings_csv,
                           "also write the trace as CSV");

    std::string compare_a, compare_b, coding_path, alternative_name = "two_sided";
    CLI::App* compare_cmd = app.add_subcommand("compare", "rank agreement between two rankings");
    compare_cmd->add_option("ranking_a", compare_a, "first ranking file")->required();
    compare_cmd->add_option("ranking_b", compare_b, "second ranking file")->required();
    compare_cmd->add_option("--coding", coding_path, "coding order file (default: first ranking)");
    compare_cmd->add_option("--alternative", alternative_name, "two_sided, greater or less");

    CommonFlags pca_flags;
    int pca_rows = 2000, pca_dim = 6;
    double pca_pair_corr = 0.95, variance_threshold = 0.95;
    CLI::App* pca_cmd =
        app.add_subcommand("pca-validate", "run the pipeline on PCA scores (independence control)");
    pca_flags.attach(pca_cmd, true);
    pca_cmd->add_option("--rows", pca_rows, "rows for the built-in synthetic dataset");
    pca_cmd->add_option("--dim", pca_dim, "columns for the built-in synthetic dataset");
    pca_cmd->add_option("--pair-corr", pca_pair_corr, "correlation of the synthetic pair");
    pca_cmd->add_option("--variance-threshold", variance_threshold, "retained variance ratio");

    int synth_rows = 2000, synth_dim = 6;
    double synth_pair_corr = 0.0, synth_intercept = 0.0;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    CLI::App* synth_cmd = app.add_subcommand("synth", "emit a synthetic correlated dataset as CSV");
    synth_cmd->add_option("--rows", synth_rows, "row count");
    synth_cmd->add_option("--dim", synth_dim, "feature count");
    synth_cmd->add_option("--pair-corr", synth_pair_corr,
                          "correlation between f1 and f2 (they then share one weight)");
    synth_cmd->add_option("--intercept", synth_intercept, "label logit intercept");
    synth_cmd->add_option("--seed", synth_seed, "RNG seed");
    synth_cmd->add_option("--out", synth_out, "output CSV path");

    std::string corr_data, corr_target, corr_out;
    CLI::App* corr_cmd = app.add_subcommand("corr-matrix", "feature correlation matrix as CSV");
    corr_cmd->add_option("--data", corr_data, "CSV dataset path");
    corr_cmd->add_option("--target", corr_target, "target column name");
    corr_cmd->add_option("--out", corr_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (rank_cmd->parsed()) return run_rank(rank_flags, rank_cmd, rank_rankings_csv);
        if (replay_cmd->parsed())
            return run_replay(trace_path, term_decimals, replay_out, replay_rankings_csv);
        if (compare_cmd->parsed())
            return run_compare(compare_a, compare_b, coding_path, alternative_name);
        if (pca_cmd->parsed())
            return run_pca_validate(pca_flags, pca_cmd, pca_rows, pca_dim, pca_pair_corr,
                                    variance_threshold);
        if (synth_cmd->parsed())
            return run_synth(synth_rows, synth_dim, synth_pair_corr, synth_intercept, synth_seed,
                             synth_out);
        if (corr_cmd->parsed()) return run_corr_matrix(corr_data, corr_target, corr_out);
        std::cerr << "error[usage]: no subcommand given\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error[" << to_string(e.code()) << "]: " << e.message() << "\n";
        return e.code() == ErrorCode::usage ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace mipstab
