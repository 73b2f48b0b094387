#ifndef MSCOPE_TRANSFORMS_HPP
#define MSCOPE_TRANSFORMS_HPP

#include "mscope/raster.hpp"

#include <string>
#include <vector>

namespace mscope {

/// One-level Haar subbands. Each member has half the height and width of the
/// source image and the same channel count.
template <typename Scalar>
struct SubbandSetT {
    ImageT<Scalar> LL, LH, HL, HH;

    void check() const
    {
        if (!LL.same_shape(LH) || !LL.same_shape(HL) || !LL.same_shape(HH))
            throw DimensionError("subbands must share one shape");
    }
};

using SubbandSet = SubbandSetT<double>;

/// Orthonormal one-level 2-D Haar transform. For each 2x2 block [[a,b],[c,d]]:
///   LL = (a+b+c+d)/2   HL = (a-b+c-d)/2   LH = (a+b-c-d)/2   HH = (a-b-c+d)/2
/// The map is an isometry on flattened vectors. Odd extents are rejected.
template <typename Scalar>
SubbandSetT<Scalar> haar_dwt2(const ImageT<Scalar>& img)
{
    if (img.rows() % 2 != 0 || img.cols() % 2 != 0)
        throw DimensionError("haar_dwt2: height and width must be even (got " + std::to_string(img.rows()) + "x" +
                             std::to_string(img.cols()) + ")");
    const Index r = img.rows() / 2;
    const Index c = img.cols() / 2;
    using Plane = typename ImageT<Scalar>::Plane;
    std::vector<Plane> ll, lh, hl, hh;
    for (const Plane& p : img.planes()) {
        const auto even_r = Eigen::seqN(0, r, 2), odd_r = Eigen::seqN(1, r, 2);
        const auto even_c = Eigen::seqN(0, c, 2), odd_c = Eigen::seqN(1, c, 2);
        const Plane a = p(even_r, even_c), b = p(even_r, odd_c);
        const Plane cc = p(odd_r, even_c), d = p(odd_r, odd_c);
        ll.emplace_back((a + b + cc + d) / Scalar(2));
        hl.emplace_back((a - b + cc - d) / Scalar(2));
        lh.emplace_back((a + b - cc - d) / Scalar(2));
        hh.emplace_back((a - b - cc + d) / Scalar(2));
    }
    return {ImageT<Scalar>(std::move(ll)), ImageT<Scalar>(std::move(lh)), ImageT<Scalar>(std::move(hl)),
            ImageT<Scalar>(std::move(hh))};
}

/// Exact inverse of haar_dwt2.
template <typename Scalar>
ImageT<Scalar> haar_idwt2(const SubbandSetT<Scalar>& sb)
{
    sb.check();
    const Index r = sb.LL.rows();
    const Index c = sb.LL.cols();
    using Plane = typename ImageT<Scalar>::Plane;
    std::vector<Plane> out;
    for (Index ch = 0; ch < sb.LL.channels(); ++ch) {
        const Plane& ll = sb.LL.plane(ch);
        const Plane& lh = sb.LH.plane(ch);
        const Plane& hl = sb.HL.plane(ch);
        const Plane& hh = sb.HH.plane(ch);
        Plane p(2 * r, 2 * c);
        const auto even_r = Eigen::seqN(0, r, 2), odd_r = Eigen::seqN(1, r, 2);
        const auto even_c = Eigen::seqN(0, c, 2), odd_c = Eigen::seqN(1, c, 2);
        p(even_r, even_c) = (ll + hl + lh + hh) / Scalar(2);
        p(even_r, odd_c) = (ll - hl + lh - hh) / Scalar(2);
        p(odd_r, even_c) = (ll + hl - lh - hh) / Scalar(2);
        p(odd_r, odd_c) = (ll - hl - lh + hh) / Scalar(2);
        out.push_back(std::move(p));
    }
    return ImageT<Scalar>(std::move(out));
}

/// Subbands as one stack, subband-major: LL planes, then LH, HL, HH.
template <typename Scalar>
TensorStackT<Scalar> to_stack(const SubbandSetT<Scalar>& sb)
{
    sb.check();
    std::vector<typename TensorStackT<Scalar>::Plane> planes;
    for (const auto* band : {&sb.LL, &sb.LH, &sb.HL, &sb.HH})
        for (const auto& p : band->planes()) planes.push_back(p);
    return TensorStackT<Scalar>(std::move(planes));
}

template <typename Scalar>
SubbandSetT<Scalar> to_subbands(const TensorStackT<Scalar>& t)
{
    if (t.channels() % 4 != 0) throw DimensionError("wavelet stack needs a multiple of four planes");
    const Index per = t.channels() / 4;
    auto band = [&](Index k) {
        std::vector<typename ImageT<Scalar>::Plane> planes;
        for (Index c = 0; c < per; ++c) planes.push_back(t.plane(k * per + c));
        return ImageT<Scalar>(std::move(planes));
    };
    return {band(0), band(1), band(2), band(3)};
}

/// WT: image -> four-subband stack.
template <typename Scalar>
TensorStackT<Scalar> wavelet_forward(const ImageT<Scalar>& img)
{
    return to_stack(haar_dwt2(img));
}

/// IWT: four-subband stack -> image.
template <typename Scalar>
ImageT<Scalar> wavelet_inverse(const TensorStackT<Scalar>& t)
{
    return haar_idwt2(to_subbands(t));
}

/// PS: split each channel into scale^2 planes of size (h/scale) x (w/scale).
/// Plane c*scale^2 + k holds pixels at offset (k / scale, k % scale) of channel c.
template <typename Scalar>
TensorStackT<Scalar> pixel_shuffle_decompose(const ImageT<Scalar>& img, Index scale)
{
    if (scale < 1) throw ConfigError("pixel shuffle scale must be >= 1");
    if (img.rows() % scale != 0 || img.cols() % scale != 0)
        throw DimensionError("pixel_shuffle_decompose: dimensions must be divisible by the scale");
    const Index r = img.rows() / scale;
    const Index c = img.cols() / scale;
    std::vector<typename TensorStackT<Scalar>::Plane> planes;
    planes.reserve(static_cast<std::size_t>(img.channels() * scale * scale));
    for (const auto& p : img.planes())
        for (Index k = 0; k < scale * scale; ++k)
            planes.emplace_back(p(Eigen::seqN(k / scale, r, scale), Eigen::seqN(k % scale, c, scale)));
    return TensorStackT<Scalar>(std::move(planes));
}

/// IPS: exact inverse of pixel_shuffle_decompose.
template <typename Scalar>
ImageT<Scalar> pixel_shuffle_compose(const TensorStackT<Scalar>& t, Index scale)
{
    if (scale < 1) throw ConfigError("pixel shuffle scale must be >= 1");
    const Index group = scale * scale;
    if (t.channels() % group != 0)
        throw DimensionError("pixel_shuffle_compose: plane count " + std::to_string(t.channels()) +
                             " is not a multiple of scale^2 = " + std::to_string(group));
    const Index r = t.rows();
    const Index c = t.cols();
    std::vector<typename ImageT<Scalar>::Plane> planes;
    for (Index ch = 0; ch < t.channels() / group; ++ch) {
        typename ImageT<Scalar>::Plane p(r * scale, c * scale);
        for (Index k = 0; k < group; ++k)
            p(Eigen::seqN(k / scale, r, scale), Eigen::seqN(k % scale, c, scale)) = t.plane(ch * group + k);
        planes.push_back(std::move(p));
    }
    return ImageT<Scalar>(std::move(planes));
}

/// COPY_ch: scale^2 copies of every channel, laid out like pixel_shuffle_decompose.
template <typename Scalar>
TensorStackT<Scalar> copy_ch(const ImageT<Scalar>& img, Index scale)
{
    if (scale < 1) throw ConfigError("copy_ch scale must be >= 1");
    std::vector<typename TensorStackT<Scalar>::Plane> planes;
    for (const auto& p : img.planes())
        for (Index k = 0; k < scale * scale; ++k) planes.push_back(p);
    return TensorStackT<Scalar>(std::move(planes));
}

/// Residual label: input_t - mapped_label, elementwise.
template <typename Scalar>
TensorStackT<Scalar> residual(const TensorStackT<Scalar>& input_t, const TensorStackT<Scalar>& mapped_label)
{
    if (!input_t.same_shape(mapped_label))
        throw DimensionError("residual: input and label stacks differ in shape");
    return subtract(input_t, mapped_label);
}

}  // namespace mscope

#endif  // MSCOPE_TRANSFORMS_HPP
