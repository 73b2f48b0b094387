#ifndef MSCOPE_RASTER_HPP
#define MSCOPE_RASTER_HPP

#include "mscope/common.hpp"

#include <utility>
#include <vector>

namespace mscope {

struct ImageTag {};
struct StackTag {};

/// A stack of equally sized row-major planes.
///
/// Instantiated twice with distinct tags: Image (the raw signal; planes are
/// colour channels) and TensorStack (a feature-space mapping; planes are
/// subbands, shuffle offsets or channel copies). Keeping them as separate
/// types stops a transformed stack being fed where an image is expected.
template <typename Scalar, typename Tag>
class Planes {
public:
    using Plane = RowMatrix<Scalar>;

    Planes() = default;

    Planes(Index rows, Index cols, Index channels, Scalar fill = Scalar(0))
    {
        if (rows < 0 || cols < 0 || channels < 1)
            throw DimensionError("raster needs non-negative extent and at least one channel");
        planes_.assign(static_cast<std::size_t>(channels), Plane::Constant(rows, cols, fill));
    }

    explicit Planes(std::vector<Plane> planes) : planes_(std::move(planes))
    {
        if (planes_.empty()) throw DimensionError("raster needs at least one channel");
        for (const auto& p : planes_)
            if (p.rows() != planes_.front().rows() || p.cols() != planes_.front().cols())
                throw DimensionError("raster planes must share one shape");
    }

    Index rows() const { return planes_.empty() ? 0 : planes_.front().rows(); }
    Index cols() const { return planes_.empty() ? 0 : planes_.front().cols(); }
    Index channels() const { return static_cast<Index>(planes_.size()); }
    Index size() const { return rows() * cols() * channels(); }

    Plane& plane(Index c) { return planes_.at(static_cast<std::size_t>(c)); }
    const Plane& plane(Index c) const { return planes_.at(static_cast<std::size_t>(c)); }
    const std::vector<Plane>& planes() const { return planes_; }

    Scalar& operator()(Index y, Index x, Index c = 0) { return planes_[static_cast<std::size_t>(c)](y, x); }
    Scalar operator()(Index y, Index x, Index c = 0) const { return planes_[static_cast<std::size_t>(c)](y, x); }

    bool same_shape(const Planes& other) const
    {
        return rows() == other.rows() && cols() == other.cols() && channels() == other.channels();
    }

    bool all_finite() const
    {
        for (const auto& p : planes_)
            if (!p.allFinite()) return false;
        return true;
    }

    bool operator==(const Planes& other) const
    {
        if (!same_shape(other)) return false;
        for (std::size_t c = 0; c < planes_.size(); ++c)
            if (planes_[c] != other.planes_[c]) return false;
        return true;
    }

    template <typename Fn>
    Planes map_planes(Fn&& fn) const
    {
        std::vector<Plane> out;
        out.reserve(planes_.size());
        for (const auto& p : planes_) out.push_back(fn(p));
        return Planes(std::move(out));
    }

private:
    std::vector<Plane> planes_;
};

template <typename Scalar>
using ImageT = Planes<Scalar, ImageTag>;
template <typename Scalar>
using TensorStackT = Planes<Scalar, StackTag>;

using Image = ImageT<double>;
using TensorStack = TensorStackT<double>;

/// Reinterpret an image's channels as a tensor stack (identity mapping).
template <typename Scalar>
TensorStackT<Scalar> as_stack(const ImageT<Scalar>& img)
{
    return TensorStackT<Scalar>(img.planes());
}

template <typename Scalar>
ImageT<Scalar> as_image(const TensorStackT<Scalar>& t)
{
    return ImageT<Scalar>(t.planes());
}

/// Planewise a - b; shapes must agree.
template <typename Scalar, typename Tag>
Planes<Scalar, Tag> subtract(const Planes<Scalar, Tag>& a, const Planes<Scalar, Tag>& b)
{
    if (!a.same_shape(b)) throw DimensionError("subtract: shape mismatch");
    std::vector<typename Planes<Scalar, Tag>::Plane> out;
    out.reserve(static_cast<std::size_t>(a.channels()));
    for (Index c = 0; c < a.channels(); ++c) out.emplace_back(a.plane(c) - b.plane(c));
    return Planes<Scalar, Tag>(std::move(out));
}

}  // namespace mscope

#endif  // MSCOPE_RASTER_HPP
