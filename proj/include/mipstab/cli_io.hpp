#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mipstab/dataset.hpp"
#include "mipstab/explainers.hpp"
#include "mipstab/mip.hpp"
#include "mipstab/models.hpp"
#include "mipstab/synth.hpp"

namespace mipstab {

inline constexpr const char* kToolName = "mipstab";
inline constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
    std::string data_path;
    std::string target;
    ModelSpec model;
    std::vector<std::map<std::string, double>> grid;  // empty = family default
    ExplainerSpec explainer;
    double test_fraction = 0.2;
    int folds = 10;
    std::uint64_t seed = 0;
    bool seeded = true;  // false = seed drawn from entropy (non-deterministic mode)
    int threads = 1;
    std::string out_path;

    void validate() const;
};

/// Reads a header-first CSV. Non-target columns must parse as finite reals;
/// the target must take exactly two distinct values (the lexicographically
/// smaller one becomes 0). Feature ordinals follow file column order.
Dataset load_csv(const std::string& path, const std::string& target_column);

void write_csv(const Dataset& data, const std::string& target_column, const std::string& path);

/// Trace fixture: one ranking per line, comma-separated feature names, most
/// important first, longest ranking first. Names are matched case-sensitively
/// against the first line.
EliminationTrace read_trace(const std::string& path);
void write_trace(const EliminationTrace& trace, const std::string& path);

/// Ranking file: one feature name per line, most important first. When
/// `canonical` is given, names are resolved against it (same FeatureIds).
Ranking read_ranking_file(const std::string& path,
                          const std::vector<FeatureId>* canonical = nullptr);

/// Structured report document (JSON): config echo, base ranking, trace,
/// x terms, MIP scores at full precision, movements, NMR, SD, seed, version.
/// write/read round-trip losslessly.
void write_report(const StabilityReport& report, const RunConfig& config,
                  const std::string& path);
std::pair<StabilityReport, RunConfig> read_report(const std::string& path);
std::string report_to_string(const StabilityReport& report, const RunConfig& config);

/// Long-format CSV of every trace ranking: n,position,feature.
void write_rankings_csv(const EliminationTrace& trace, const std::string& path);

void write_correlation_csv(const Eigen::MatrixXd& correlation,
                           const std::vector<FeatureId>& features, const std::string& path);

/// Entry point behind the `mipstab` binary. Never throws; maps usage
/// problems to exit code 1 and data/domain errors to exit code 2.
int cli_main(int argc, const char* const* argv);

}  // namespace mipstab
