#include "mipstab/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "mipstab/errors.hpp"

namespace mipstab {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::bad_input: return "bad_input";
        case ErrorCode::structure_mismatch: return "structure_mismatch";
        case ErrorCode::domain: return "domain";
        case ErrorCode::unfit: return "unfit";
        case ErrorCode::stratification: return "stratification";
        case ErrorCode::size: return "size";
        case ErrorCode::parse: return "parse";
        case ErrorCode::label: return "label";
        case ErrorCode::capability: return "capability";
        case ErrorCode::cost_guard: return "cost_guard";
        case ErrorCode::degenerate_system: return "degenerate_system";
        case ErrorCode::matrix_domain: return "matrix_domain";
        case ErrorCode::undefined_statistic: return "undefined_statistic";
        case ErrorCode::training_aborted: return "training_aborted";
        case ErrorCode::io: return "io";
        case ErrorCode::usage: return "usage";
    }
    return "unknown";
}

Ranking::Ranking(std::vector<FeatureId> ordered) : ordered_(std::move(ordered)) {
    std::unordered_set<std::string> names;
    std::unordered_set<int> ordinals;
    for (const auto& f : ordered_) {
        if (!names.insert(f.name).second) {
            throw Error(ErrorCode::structure_mismatch, "duplicate feature name '" + f.name + "' in ranking");
        }
        if (!ordinals.insert(f.ordinal).second) {
            throw Error(ErrorCode::structure_mismatch,
                        "duplicate feature ordinal " + std::to_string(f.ordinal) + " in ranking");
        }
    }
}

std::size_t Ranking::position_of(const FeatureId& feature) const {
    for (std::size_t i = 0; i < ordered_.size(); ++i) {
        if (ordered_[i] == feature) return i + 1;
    }
    return 0;
}

Ranking Ranking::without_head() const {
    if (ordered_.empty()) throw Error(ErrorCode::domain, "cannot drop head of empty ranking");
    return Ranking(std::vector<FeatureId>(ordered_.begin() + 1, ordered_.end()));
}

Ranking ranking_from_importances(const std::vector<std::pair<FeatureId, double>>& scores) {
    if (scores.empty()) throw Error(ErrorCode::bad_input, "no importance scores given");
    for (const auto& [feature, score] : scores) {
        if (!std::isfinite(score)) {
            throw Error(ErrorCode::bad_input, "non-finite importance for feature '" + feature.name + "'");
        }
    }
    std::vector<std::pair<FeatureId, double>> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first.ordinal < b.first.ordinal;
    });
    std::vector<FeatureId> ordered;
    ordered.reserve(sorted.size());
    for (auto& [feature, score] : sorted) ordered.push_back(std::move(feature));
    return Ranking(std::move(ordered));
}

long displacement(const Ranking& prev, const Ranking& next) {
    if (prev.size() < 2) throw Error(ErrorCode::domain, "previous ranking needs at least 2 features");
    if (next.size() != prev.size() - 1) {
        throw Error(ErrorCode::structure_mismatch, "next ranking must have exactly one fewer feature");
    }
    const Ranking expected = prev.without_head();
    long sum = 0;
    for (std::size_t pos = 1; pos <= next.size(); ++pos) {
        const FeatureId& feature = next.at_position(pos);
        const std::size_t expected_pos = expected.position_of(feature);
        if (expected_pos == 0) {
            throw Error(ErrorCode::structure_mismatch,
                        "feature '" + feature.name + "' not among the expected survivors");
        }
        sum += std::labs(static_cast<long>(pos) - static_cast<long>(expected_pos));
    }
    return sum;
}

long max_possible_movement(int n) {
    if (n < 2) throw Error(ErrorCode::domain, "max_possible_movement requires n >= 2");
    return static_cast<long>(n) * n / 2;
}

}  // namespace mipstab
