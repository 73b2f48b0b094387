#ifndef MSCOPE_PATCH_CLOUD_HPP
#define MSCOPE_PATCH_CLOUD_HPP

#include "mscope/common.hpp"

#include <string>
#include <utility>

namespace mscope {

/// N points in R^d, one per row. `provenance` is free text describing how the
/// cloud was produced (sources, patch size, seed, transform chain).
struct PatchCloud {
    RowMatrixXd points;
    std::string provenance;

    PatchCloud() = default;
    explicit PatchCloud(RowMatrixXd pts, std::string prov = {}) : points(std::move(pts)), provenance(std::move(prov))
    {
        if (points.rows() > 0 && points.cols() < 1) throw DimensionError("non-empty cloud needs d >= 1");
        if (!points.allFinite()) throw ConfigError("cloud contains non-finite coordinates");
    }

    Index size() const { return points.rows(); }
    Index dim() const { return points.cols(); }
    bool empty() const { return points.rows() == 0; }
};

}  // namespace mscope

#endif  // MSCOPE_PATCH_CLOUD_HPP
