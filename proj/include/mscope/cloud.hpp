#ifndef MSCOPE_CLOUD_HPP
#define MSCOPE_CLOUD_HPP

#include "mscope/exact_sum.hpp"
#include "mscope/patch_cloud.hpp"
#include "mscope/raster.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mscope {

/// A patch location: source index, top-left corner, and the channel it reads
/// (all channels when `channel` is negative).
struct Window {
    Index source = 0;
    Index y = 0;
    Index x = 0;
    Index channel = -1;

    bool operator==(const Window&) const = default;
};

struct Extent {
    Index rows = 0;
    Index cols = 0;
    Index channels = 1;
};

/// Draw `count` windows with replacement, uniformly over every valid
/// top-left corner of every source. With `aligned` false each window also
/// picks one channel uniformly. Throws if the patch fits in no source.
std::vector<Window> sample_windows(std::span<const Extent> sources, Index patch, Index count, std::uint64_t seed,
                                   bool aligned);

/// Multiply window corners by `factor` (maps a coarse grid onto a finer one).
std::vector<Window> scale_windows(std::vector<Window> windows, Index factor);

/// Flatten the windows into cloud rows. Aligned windows concatenate the same
/// spatial window across all planes (plane-major, row-major inside a plane),
/// so d = patch^2 * channels; single-channel windows give d = patch^2.
PatchCloud gather_patches(std::span<const TensorStack> sources, std::span<const Window> windows, Index patch,
                          std::string provenance = {});

/// Single-source sampling plus gathering.
PatchCloud extract_patches(const TensorStack& src, Index patch, Index count, std::uint64_t seed, bool aligned_subbands);

/// Euclidean distance, summed exactly so the value is independent of
/// coordinate order. With `normalized`, the result is divided by sqrt(d).
template <typename DerivedA, typename DerivedB>
double d2(const Eigen::DenseBase<DerivedA>& x, const Eigen::DenseBase<DerivedB>& y, bool normalized = false)
{
    if (x.size() != y.size()) throw DimensionError("d2: dimension mismatch");
    ExactAccumulator acc;
    for (Index i = 0; i < x.size(); ++i) {
        const double diff = static_cast<double>(x.derived().coeff(i)) - static_cast<double>(y.derived().coeff(i));
        acc.add(diff * diff);
    }
    const double dist = std::sqrt(acc.result());
    return normalized && x.size() > 0 ? dist / std::sqrt(static_cast<double>(x.size())) : dist;
}

/// Centred copy of a point and its exact sum of squares; the per-point half of
/// the Pearson correlation.
struct CentredPoint {
    Eigen::VectorXd centred;
    double sum_squares = 0.0;

    bool constant() const { return sum_squares == 0.0; }
};

template <typename Derived>
CentredPoint centre(const Eigen::DenseBase<Derived>& x)
{
    ExactAccumulator acc;
    for (Index i = 0; i < x.size(); ++i) acc.add(static_cast<double>(x.derived().coeff(i)));
    const double mean = x.size() > 0 ? acc.result() / static_cast<double>(x.size()) : 0.0;
    CentredPoint out;
    out.centred.resize(x.size());
    acc.clear();
    for (Index i = 0; i < x.size(); ++i) {
        const double v = static_cast<double>(x.derived().coeff(i)) - mean;
        out.centred[i] = v;
        acc.add(v * v);
    }
    out.sum_squares = acc.result();
    return out;
}

/// sqrt(1 - Pearson(x, y)) from centred points. A constant point has no
/// defined correlation; it is treated as corr = 0, giving distance 1.
double dcorr(const CentredPoint& x, const CentredPoint& y);

/// Correlation distance sqrt(1 - corr(x, y)), in [0, sqrt(2)]. Invariant under
/// x -> a*x + b for a > 0.
template <typename DerivedA, typename DerivedB>
double dcorr(const Eigen::DenseBase<DerivedA>& x, const Eigen::DenseBase<DerivedB>& y)
{
    if (x.size() != y.size()) throw DimensionError("dcorr: dimension mismatch");
    if (x.size() < 2) throw DimensionError("dcorr: needs at least two coordinates");
    return dcorr(centre(x), centre(y));
}

enum class Metric : std::uint8_t { L2 = 0, Corr = 1 };

std::string to_string(Metric m);
Metric parse_metric(const std::string& s);

struct DistanceMatrix {
    RowMatrixXd values;  ///< symmetric, zero diagonal
    Metric metric = Metric::L2;
    bool normalized = false;
    Index constant_points = 0;  ///< zero-variance points seen under Corr

    Index size() const { return values.rows(); }
    double operator()(Index i, Index j) const { return values(i, j); }
};

/// Full pairwise matrix. Rows are spread over `threads` workers (0 = default);
/// every entry is computed independently, so the result does not depend on
/// the thread count.
DistanceMatrix distance_matrix(const PatchCloud& cloud, Metric metric, bool normalized = false, unsigned threads = 0);

/// DMAT format: "DMAT", u32 version 1, u64 n, u8 metric, u8 normalized,
/// then the strict upper triangle row by row as f64 LE.
void save_distance_matrix(const DistanceMatrix& dm, const std::string& path);
DistanceMatrix load_distance_matrix(const std::string& path);

}  // namespace mscope

#endif  // MSCOPE_CLOUD_HPP
