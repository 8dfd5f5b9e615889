#include "mipstab/dataset.hpp"

#include <cmath>
#include <unordered_set>

#include "mipstab/errors.hpp"

namespace mipstab {

void Dataset::validate() const {
    if (X.rows() < 2) throw Error(ErrorCode::size, "dataset needs at least 2 rows");
    if (X.cols() != static_cast<Eigen::Index>(feature_names.size())) {
        throw Error(ErrorCode::structure_mismatch, "column count does not match feature name count");
    }
    if (y.size() != X.rows()) {
        throw Error(ErrorCode::structure_mismatch, "label count does not match row count");
    }
    std::unordered_set<std::string> names;
    std::unordered_set<int> ordinals;
    for (const auto& f : feature_names) {
        if (!names.insert(f.name).second) {
            throw Error(ErrorCode::structure_mismatch, "duplicate feature name '" + f.name + "'");
        }
        if (!ordinals.insert(f.ordinal).second) {
            throw Error(ErrorCode::structure_mismatch, "duplicate feature ordinal");
        }
    }
    if (!X.allFinite()) throw Error(ErrorCode::bad_input, "dataset contains non-finite values");
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) throw Error(ErrorCode::label, "labels must be 0 or 1");
    }
}

Dataset Dataset::select(const std::vector<FeatureId>& keep) const {
    Dataset out;
    out.feature_names = keep;
    out.X.resize(X.rows(), static_cast<Eigen::Index>(keep.size()));
    out.y = y;
    for (std::size_t j = 0; j < keep.size(); ++j) {
        Eigen::Index source = -1;
        for (std::size_t s = 0; s < feature_names.size(); ++s) {
            if (feature_names[s] == keep[j]) {
                source = static_cast<Eigen::Index>(s);
                break;
            }
        }
        if (source < 0) {
            throw Error(ErrorCode::structure_mismatch, "feature '" + keep[j].name + "' not in dataset");
        }
        out.X.col(static_cast<Eigen::Index>(j)) = X.col(source);
    }
    return out;
}

Dataset Dataset::take_rows(const std::vector<Eigen::Index>& rows) const {
    Dataset out;
    out.feature_names = feature_names;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
        out.y[static_cast<Eigen::Index>(i)] = y[rows[i]];
    }
    return out;
}

bool Dataset::both_classes_present() const {
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        (y[i] == 0 ? has0 : has1) = true;
    }
    return has0 && has1;
}

}  // namespace mipstab
