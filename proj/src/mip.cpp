#include <algorithm>
#include <cmath>
#include <set>

#include "mipstab/mip.hpp"
#include "mipstab/rng.hpp"

namespace mipstab {

void EliminationTrace::validate() const {
    if (rankings.size() < 2)
        throw Error(ErrorCode::bad_input, "a trace needs rankings down to 2 surviving features");
    const std::size_t nf = rankings.front().size();
    if (nf < 3) throw Error(ErrorCode::bad_input, "a trace must start with at least 3 features");
    if (rankings.size() != nf - 1)
        throw Error(ErrorCode::structure_mismatch,
                    "trace must hold one ranking per size NF down to 2");
    if (rankings.back().size() != 2)
        throw Error(ErrorCode::structure_mismatch, "final trace ranking must have 2 features");

    for (std::size_t k = 0; k + 1 < rankings.size(); ++k) {
        if (rankings[k + 1].size() != rankings[k].size() - 1)
            throw Error(ErrorCode::structure_mismatch, "trace ranking sizes must descend by one");
        const FeatureId& head = rankings[k].head();
        if (rankings[k + 1].contains(head))
            throw Error(ErrorCode::structure_mismatch,
                        "removed feature " + head.name + " reappears later in the trace");
        for (const FeatureId& f : rankings[k + 1].features()) {
            if (!rankings[k].contains(f))
                throw Error(ErrorCode::structure_mismatch,
                            "feature " + f.name + " enters the trace mid-way");
        }
    }
    if (!removed.empty()) {
        if (removed.size() != rankings.size() - 1)
            throw Error(ErrorCode::structure_mismatch, "removed list length must be NF - 2");
        for (std::size_t k = 0; k < removed.size(); ++k) {
            if (removed[k] != rankings[k].head())
                throw Error(ErrorCode::structure_mismatch,
                            "removed[" + std::to_string(k) + "] is not that step's head");
        }
    }
    if (!per_step_accuracy.empty() && per_step_accuracy.size() != rankings.size())
        throw Error(ErrorCode::structure_mismatch,
                    "per-step accuracy length must match the ranking count");
}

const FeatureScore& ScoreTable::at(const FeatureId& feature) const {
    for (const FeatureScore& entry : entries) {
        if (entry.feature == feature) return entry;
    }
    throw Error(ErrorCode::bad_input, "feature " + feature.name + " is not in the score table");
}

EliminationTrace run_elimination(const ModelSpec& spec, const GlobalExplainer& explain,
                                 const Dataset& train_set, const Dataset& test_set,
                                 std::uint64_t seed) {
    train_set.validate();
    test_set.validate();
    if (train_set.feature_names != test_set.feature_names)
        throw Error(ErrorCode::structure_mismatch, "train and test feature sets differ");
    if (train_set.n_features() < 3)
        throw Error(ErrorCode::bad_input, "elimination needs at least 3 features");

    EliminationTrace trace;
    std::vector<FeatureId> surviving = train_set.feature_names;
    std::size_t step = 0;
    while (surviving.size() >= 2) {
        const Dataset train_view = train_set.select(surviving);
        const Dataset test_view = test_set.select(surviving);
        FittedModel model;
        std::vector<std::pair<FeatureId, double>> importances;
        try {
            model = train(spec, train_view, mix_seed(seed, 0x656c696du + step));
            importances = explain(model, train_view, test_view);
        } catch (const Error& e) {
            throw EliminationAborted("elimination step with " + std::to_string(surviving.size()) +
                                         " features failed: " + e.what(),
                                     std::move(trace));
        }
        trace.rankings.push_back(ranking_from_importances(importances));
        trace.per_step_accuracy.push_back(accuracy(model, test_view));
        if (surviving.size() == 2) break;

        const FeatureId head = trace.rankings.back().head();
        trace.removed.push_back(head);
        surviving.erase(std::find(surviving.begin(), surviving.end(), head));
        ++step;
    }
    trace.validate();
    return trace;
}

EliminationTrace run_elimination(const ModelSpec& spec, const ExplainerSpec& explainer_spec,
                                 const Dataset& train_set, const Dataset& test_set,
                                 std::uint64_t seed, int n_threads) {
    GlobalExplainer explain = [&](const FittedModel& model, const Dataset& step_train,
                                  const Dataset& step_test) {
        const Dataset background =
            background_sample(step_train, explainer_spec.background_size, explainer_spec.seed);
        return explain_global(model, background, step_test, explainer_spec, n_threads);
    };
    return run_elimination(spec, explain, train_set, test_set, seed);
}

ScoreTable mip_scores(const EliminationTrace& trace, int term_decimals) {
    trace.validate();
    return mip_scores(trace, std::vector<int>(trace.rankings.size(), term_decimals));
}

ScoreTable mip_scores(const EliminationTrace& trace, const std::vector<int>& term_decimals) {
    trace.validate();
    if (term_decimals.size() != trace.rankings.size())
        throw Error(ErrorCode::structure_mismatch,
                    "need one term_decimals entry per trace ranking, got " +
                        std::to_string(term_decimals.size()) + " for " +
                        std::to_string(trace.rankings.size()) + " rankings");

    ScoreTable table;
    for (const FeatureId& feature : trace.rankings.front().features()) {
        FeatureScore score;
        score.feature = feature;
        for (std::size_t k = 0; k < trace.rankings.size(); ++k) {
            const Ranking& ranking = trace.rankings[k];
            const std::size_t position = ranking.position_of(feature);
            if (position == 0) continue;
            double x = static_cast<double>(position) / static_cast<double>(ranking.size());
            if (term_decimals[k] >= 0) {
                const double rounding = std::pow(10.0, term_decimals[k]);
                x = std::round(x * rounding) / rounding;
            }
            score.terms.emplace_back(static_cast<int>(ranking.size()), x);
            score.mip += x;
        }
        table.entries.push_back(std::move(score));
    }
    std::sort(table.entries.begin(), table.entries.end(),
              [](const FeatureScore& a, const FeatureScore& b) {
                  return a.feature.ordinal < b.feature.ordinal;
              });

    std::vector<FeatureScore> by_mip = table.entries;
    std::sort(by_mip.begin(), by_mip.end(), [](const FeatureScore& a, const FeatureScore& b) {
        if (a.mip != b.mip) return a.mip < b.mip;
        return a.feature.ordinal < b.feature.ordinal;
    });
    std::vector<FeatureId> order;
    order.reserve(by_mip.size());
    for (const FeatureScore& entry : by_mip) order.push_back(entry.feature);
    table.mip_ranking = Ranking(std::move(order));
    table.sd = score_sd(table);
    return table;
}

std::pair<double, std::vector<MovementRecord>> nmr(const EliminationTrace& trace) {
    trace.validate();
    std::vector<MovementRecord> movements;
    movements.reserve(trace.rankings.size() - 1);
    double rate_sum = 0.0;
    for (std::size_t k = 0; k + 1 < trace.rankings.size(); ++k) {
        MovementRecord record;
        record.n_before = static_cast<int>(trace.rankings[k].size());
        record.movement_m = displacement(trace.rankings[k], trace.rankings[k + 1]);
        record.mpm = max_possible_movement(static_cast<int>(trace.rankings[k + 1].size()));
        record.movement_rate = static_cast<double>(record.movement_m) / static_cast<double>(record.mpm);
        rate_sum += record.movement_rate;
        movements.push_back(record);
    }
    return {rate_sum / static_cast<double>(movements.size()), movements};
}

double score_sd(const ScoreTable& table) {
    const std::size_t n = table.entries.size();
    if (n < 2) throw Error(ErrorCode::domain, "score SD needs at least 2 features");
    double mean = 0.0;
    for (const FeatureScore& entry : table.entries) mean += entry.mip;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const FeatureScore& entry : table.entries) {
        ss += (entry.mip - mean) * (entry.mip - mean);
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

StabilityReport stability_report(const ModelSpec& spec, const ExplainerSpec& explainer_spec,
                                 const Dataset& data, const StabilitySettings& settings) {
    data.validate();
    if (data.n_features() < 3)
        throw Error(ErrorCode::bad_input, "stability analysis needs at least 3 features");

    auto [train_set, test_set] = split(data, settings.test_fraction, settings.seed);

    std::vector<std::map<std::string, double>> grid;
    if (!spec.hyperparameters.empty()) {
        grid = {spec.hyperparameters};
    } else if (!settings.grid.empty()) {
        grid = settings.grid;
    } else {
        grid = default_grid(spec.family);
    }
    const ModelSpec tuned = tune(spec.family, grid, train_set, settings.folds, settings.seed);

    StabilityReport report;
    report.tuned_spec = tuned;
    report.trace = run_elimination(tuned, explainer_spec, train_set, test_set, settings.seed,
                                   settings.threads);
    report.base_ranking = report.trace.rankings.front();
    report.scores = mip_scores(report.trace);
    auto [rate, movements] = nmr(report.trace);
    report.nmr = rate;
    report.movements = std::move(movements);
    report.sd = report.scores.sd;
    report.test_accuracy = report.trace.per_step_accuracy.front();
    return report;
}

}  // namespace mipstab
