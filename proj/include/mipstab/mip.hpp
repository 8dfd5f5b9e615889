#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mipstab/core.hpp"
#include "mipstab/dataset.hpp"
#include "mipstab/errors.hpp"
#include "mipstab/explainers.hpp"
#include "mipstab/models.hpp"

namespace mipstab {

/// The rankings produced as the top feature is repeatedly removed and the
/// model retrained: one ranking per surviving-feature count n = NF .. 2.
struct EliminationTrace {
    std::vector<Ranking> rankings;
    std::vector<FeatureId> removed;
    std::vector<double> per_step_accuracy;  // empty for replayed traces

    /// Checks the chain structure (sizes NF..2, each ranking = previous
    /// minus its head, removed = heads in order).
    void validate() const;
};

/// One feature's MIP accumulation: terms are (n, i/n) per trace ranking of
/// size n where the feature sat at position i.
struct FeatureScore {
    FeatureId feature;
    double mip = 0.0;
    std::vector<std::pair<int, double>> terms;
};

/// MIP scores for every feature of a trace, ascending = more informative.
struct ScoreTable {
    std::vector<FeatureScore> entries;  // ordered by feature ordinal
    Ranking mip_ranking;                // ascending MIP, ties by ordinal
    double sd = 0.0;                    // sample SD of the MIP scores

    const FeatureScore& at(const FeatureId& feature) const;
};

struct StabilityReport {
    Ranking base_ranking;
    EliminationTrace trace;
    ScoreTable scores;
    std::vector<MovementRecord> movements;
    double nmr = 0.0;
    double sd = 0.0;
    ModelSpec tuned_spec;
    double test_accuracy = 0.0;
};

/// Carries the partial trace accumulated before a mid-loop failure.
class EliminationAborted : public Error {
  public:
    EliminationAborted(std::string message, EliminationTrace partial)
        : Error(ErrorCode::training_aborted, std::move(message)), partial_(std::move(partial)) {}
    const EliminationTrace& partial_trace() const { return partial_; }

  private:
    EliminationTrace partial_;
};

/// Importance producer seam: maps (trained model, surviving train columns,
/// surviving test columns) to per-feature importances. Lets tests drive the
/// loop with mock explainers.
using GlobalExplainer = std::function<std::vector<std::pair<FeatureId, double>>(
    const FittedModel&, const Dataset& train, const Dataset& test)>;

/// Eliminate/retrain/re-explain loop: rank the surviving features, record
/// the ranking, drop its head, retrain, until 2 features remain.
EliminationTrace run_elimination(const ModelSpec& spec, const GlobalExplainer& explain,
                                 const Dataset& train, const Dataset& test, std::uint64_t seed);

/// Same loop with the standard explainer stack (background subsample of the
/// training split, explainer per `explainer_spec`).
EliminationTrace run_elimination(const ModelSpec& spec, const ExplainerSpec& explainer_spec,
                                 const Dataset& train, const Dataset& test, std::uint64_t seed,
                                 int n_threads = 1);

/// MIP accumulation over all trace rankings. `term_decimals` >= 0 rounds
/// each i/n term (half away from zero) before summing, mirroring tables
/// printed at fixed precision; -1 keeps full precision.
ScoreTable mip_scores(const EliminationTrace& trace, int term_decimals = -1);

/// Same, with one decimals entry per trace ranking for replaying tables
/// whose iteration columns were printed at different precisions.
ScoreTable mip_scores(const EliminationTrace& trace, const std::vector<int>& term_decimals);

/// Movement rate per consecutive ranking pair and their mean.
std::pair<double, std::vector<MovementRecord>> nmr(const EliminationTrace& trace);

/// Sample standard deviation of the MIP scores (divisor NF - 1).
double score_sd(const ScoreTable& table);

struct StabilitySettings {
    double test_fraction = 0.2;
    int folds = 10;
    std::uint64_t seed = 0;
    int threads = 1;
    /// Tuning grid; empty means the family default. A single-entry grid
    /// pins the hyperparameters outright.
    std::vector<std::map<std::string, double>> grid;
};

/// Full pipeline: split, tune, eliminate, score. `spec.hyperparameters`
/// non-empty replaces the grid with that single entry.
StabilityReport stability_report(const ModelSpec& spec, const ExplainerSpec& explainer_spec,
                                 const Dataset& data, const StabilitySettings& settings);

}  // namespace mipstab
