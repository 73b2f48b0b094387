#ifndef MSCOPE_IMGIO_HPP
#define MSCOPE_IMGIO_HPP

#include "mscope/patch_cloud.hpp"
#include "mscope/raster.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <string>

namespace mscope {

/// Read an 8-bit grayscale or RGB image (PNG, or binary PGM/PPM). Byte v maps to v/255.
Image load_image(const std::string& path);

/// Write an 8-bit image. Values are clamped to [0,1] and rounded half-up.
/// The format follows the extension: .pgm/.ppm write netpbm, anything else PNG.
void save_image(const Image& img, const std::string& path);

/// 8-bit quantisation used by save_image.
std::uint8_t quantize8(double v);

struct NoiseSpec {
    double sigma8bit = 0.0;  ///< standard deviation in 8-bit units
    std::uint64_t seed = 0;
    bool clamp = false;      ///< clip the result to [0,1]; off by default
};

/// img + n with n ~ N(0, (sigma8bit/255)^2) i.i.d., drawn plane by plane in
/// row-major order from a mt19937_64 seeded with spec.seed.
Image add_gaussian_noise(const Image& img, const NoiseSpec& spec);

/// Positive rational scale factor num/den.
struct Ratio {
    std::int64_t num = 1;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Keys cubic convolution kernel with a = -0.5.
double keys_cubic(double x);

/// Output extent round(scale * n), rounding half up, at least 1.
Index scaled_extent(Index n, Ratio scale);

/// 1-D resampling operator (out x in) for the Keys kernel with replicated
/// borders. Pixel centres map as src = (dst + 0.5) / scale - 0.5; rows are
/// normalised to sum to one. When downscaling with antialias, the kernel is
/// stretched by 1/scale.
Eigen::SparseMatrix<double, Eigen::RowMajor> resample_operator(Index in, Ratio scale, bool antialias);

/// Separable bicubic resampling: R_rows * plane * R_cols^T for every plane.
Image bicubic_resample(const Image& img, Ratio scale, bool antialias = true);

/// Average over non-overlapping factor x factor blocks (area decimation).
Image box_downsample(const Image& img, Index factor);

/// PCLD binary format: "PCLD", u32 version 1, u64 N, u64 d, N*d f64 LE.
void save_cloud(const PatchCloud& cloud, const std::string& path);
PatchCloud load_cloud(const std::string& path);

}  // namespace mscope

#endif  // MSCOPE_IMGIO_HPP
