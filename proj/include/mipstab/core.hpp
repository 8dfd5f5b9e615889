#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace mipstab {

/// A named feature. `ordinal` is the original column position in the source
/// dataset and is the tie-breaker everywhere rankings are built.
struct FeatureId {
    std::string name;
    int ordinal = 0;

    friend bool operator==(const FeatureId& a, const FeatureId& b) {
        return a.ordinal == b.ordinal && a.name == b.name;
    }
    friend bool operator!=(const FeatureId& a, const FeatureId& b) { return !(a == b); }
};

/// Strict ordering of features, position 1 = most important.
class Ranking {
  public:
    Ranking() = default;
    /// Validates uniqueness of names and ordinals.
    explicit Ranking(std::vector<FeatureId> ordered);

    std::size_t size() const { return ordered_.size(); }
    bool empty() const { return ordered_.empty(); }
    const std::vector<FeatureId>& features() const { return ordered_; }
    const FeatureId& at_position(std::size_t position) const { return ordered_[position - 1]; }
    const FeatureId& head() const { return ordered_.front(); }

    /// 1-based position of a feature, or 0 if absent.
    std::size_t position_of(const FeatureId& feature) const;
    bool contains(const FeatureId& feature) const { return position_of(feature) != 0; }

    /// This ranking with its head removed and positions renumbered.
    Ranking without_head() const;

    friend bool operator==(const Ranking& a, const Ranking& b) { return a.ordered_ == b.ordered_; }
    friend bool operator!=(const Ranking& a, const Ranking& b) { return !(a == b); }

  private:
    std::vector<FeatureId> ordered_;
};

/// One elimination step's rank churn. movement_rate = movement_m / mpm.
struct MovementRecord {
    int n_before = 0;       // features before the removal
    long movement_m = 0;    // summed position displacement
    long mpm = 0;           // maximum possible displacement
    double movement_rate = 0.0;
};

/// Sorts descending by score, ties broken by ascending ordinal. Rejects
/// non-finite scores and duplicate features.
Ranking ranking_from_importances(const std::vector<std::pair<FeatureId, double>>& scores);

/// Summed rank displacement between `next` and `prev` minus its head
/// (positions renumbered). `next` must contain exactly the features of
/// `prev` except prev's position-1 feature.
long displacement(const Ranking& prev, const Ranking& next);

/// Maximum achievable displacement sum over all permutations of n items,
/// attained by full reversal: floor(n^2 / 2). Requires n >= 2.
long max_possible_movement(int n);

}  // namespace mipstab
