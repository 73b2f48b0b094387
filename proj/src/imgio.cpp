#include "mscope/imgio.hpp"

#include "binary_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

namespace mscope {

namespace {

bool has_extension(const std::string& path, std::initializer_list<const char*> exts)
{
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return false;
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return std::any_of(exts.begin(), exts.end(), [&](const char* e) { return ext == e; });
}

Image from_interleaved(const std::vector<std::uint8_t>& bytes, Index rows, Index cols, Index channels)
{
    Image img(rows, cols, channels);
    for (Index y = 0; y < rows; ++y)
        for (Index x = 0; x < cols; ++x)
            for (Index c = 0; c < channels; ++c)
                img(y, x, c) = bytes[static_cast<std::size_t>((y * cols + x) * channels + c)] / 255.0;
    return img;
}

std::vector<std::uint8_t> to_interleaved(const Image& img)
{
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(img.size()));
    const Index ch = img.channels();
    for (Index y = 0; y < img.rows(); ++y)
        for (Index x = 0; x < img.cols(); ++x)
            for (Index c = 0; c < ch; ++c)
                bytes[static_cast<std::size_t>((y * img.cols() + x) * ch + c)] = quantize8(img(y, x, c));
    return bytes;
}

// libpng reports errors through longjmp; nothing with a destructor lives in
// this frame across setjmp except the caller-owned output vector.
struct PngHeader {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;
};

bool read_png_raw(std::FILE* fp, PngHeader& hdr, std::vector<std::uint8_t>& out, char* err, std::size_t errlen)
{
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        std::snprintf(err, errlen, "libpng decode error");
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_get_IHDR(png, info, &hdr.width, &hdr.height, &hdr.bit_depth, &hdr.color_type, nullptr, nullptr, nullptr);
    const bool supported = hdr.bit_depth == 8 && (hdr.color_type == PNG_COLOR_TYPE_GRAY || hdr.color_type == PNG_COLOR_TYPE_RGB);
    if (!supported) {
        std::snprintf(err, errlen, "unsupported PNG (bit depth %d, colour type %d); need 8-bit gray or RGB",
                      hdr.bit_depth, hdr.color_type);
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    const std::size_t stride = png_get_rowbytes(png, info);
    out.resize(stride * hdr.height);
    std::vector<png_bytep> rows(hdr.height);
    for (png_uint_32 y = 0; y < hdr.height; ++y) rows[y] = out.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

Image load_png(const std::string& path)
{
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open '" + path + "'");
    unsigned char sig[8] = {};
    const bool is_png = std::fread(sig, 1, 8, fp) == 8 && png_sig_cmp(sig, 0, 8) == 0;
    if (!is_png) {
        std::fclose(fp);
        throw FormatError("'" + path + "' is not a PNG file");
    }
    std::rewind(fp);
    PngHeader hdr;
    std::vector<std::uint8_t> bytes;
    char err[160] = "cannot decode PNG";
    const bool ok = read_png_raw(fp, hdr, bytes, err, sizeof err);
    std::fclose(fp);
    if (!ok) throw FormatError("'" + path + "': " + err);
    const Index ch = hdr.color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    return from_interleaved(bytes, hdr.height, hdr.width, ch);
}

// Binary netpbm: P5 (gray) or P6 (RGB), maxval 255.
Image load_netpbm(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    auto token = [&]() {
        std::string t;
        int c = in.get();
        while (c != EOF) {
            if (c == '#') {
                while (c != EOF && c != '\n') c = in.get();
            } else if (!std::isspace(c)) {
                break;
            }
            c = in.get();
        }
        while (c != EOF && !std::isspace(c)) {
            t.push_back(static_cast<char>(c));
            c = in.get();
        }
        return t;
    };
    const std::string magic = token();
    if (magic != "P5" && magic != "P6") throw FormatError("'" + path + "': unsupported netpbm type '" + magic + "'");
    long w = 0, h = 0, maxval = 0;
    try {
        w = std::stol(token());
        h = std::stol(token());
        maxval = std::stol(token());
    } catch (const std::exception&) {
        throw FormatError("'" + path + "': malformed netpbm header");
    }
    if (w <= 0 || h <= 0) throw FormatError("'" + path + "': bad dimensions");
    if (maxval != 255) throw FormatError("'" + path + "': only 8-bit (maxval 255) netpbm is supported");
    const Index ch = magic == "P6" ? 3 : 1;
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w * h * ch));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw FormatError("'" + path + "' is truncated");
    return from_interleaved(bytes, h, w, ch);
}

void save_netpbm(const Image& img, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << (img.channels() == 3 ? "P6" : "P5") << '\n' << img.cols() << ' ' << img.rows() << "\n255\n";
    const auto bytes = to_interleaved(img);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path + "' failed");
}

void save_png(const Image& img, const std::string& path)
{
    const auto bytes = to_interleaved(img);
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.cols());
    image.height = static_cast<png_uint_32>(img.rows());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot write PNG '" + path + "': " + msg);
    }
}

}  // namespace

Image load_image(const std::string& path)
{
    if (has_extension(path, {"pgm", "ppm", "pnm"})) return load_netpbm(path);
    return load_png(path);
}

std::uint8_t quantize8(double v)
{
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

void save_image(const Image& img, const std::string& path)
{
    if (img.channels() != 1 && img.channels() != 3)
        throw ConfigError("save_image: only 1- or 3-channel images can be written");
    if (img.rows() == 0 || img.cols() == 0) throw ConfigError("save_image: empty image");
    if (has_extension(path, {"pgm", "ppm", "pnm"}))
        save_netpbm(img, path);
    else
        save_png(img, path);
}

Image add_gaussian_noise(const Image& img, const NoiseSpec& spec)
{
    if (!(spec.sigma8bit >= 0.0)) throw ConfigError("noise sigma must be non-negative");
    if (spec.sigma8bit == 0.0 && !spec.clamp) return img;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, spec.sigma8bit / 255.0);
    return img.map_planes([&](const Image::Plane& p) {
        Image::Plane out = p;
        if (spec.sigma8bit > 0.0)
            for (Index i = 0; i < out.size(); ++i) out.data()[i] += normal(rng);
        if (spec.clamp) out = out.cwiseMax(0.0).cwiseMin(1.0);
        return out;
    });
}

double keys_cubic(double x)
{
    constexpr double a = -0.5;
    const double t = std::fabs(x);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

Index scaled_extent(Index n, Ratio scale)
{
    // round half up of n*num/den in integer arithmetic
    const std::int64_t twice = 2 * static_cast<std::int64_t>(n) * scale.num;
    const Index out = static_cast<Index>((twice + scale.den) / (2 * scale.den));
    return std::max<Index>(out, 1);
}

Eigen::SparseMatrix<double, Eigen::RowMajor> resample_operator(Index in, Ratio scale, bool antialias)
{
    if (scale.num <= 0 || scale.den <= 0) throw ConfigError("resample scale must be positive");
    if (in < 1) throw DimensionError("resample: empty input");
    const double s = scale.value();
    const Index out = scaled_extent(in, scale);
    const double stretch = (antialias && s < 1.0) ? 1.0 / s : 1.0;
    const double support = 2.0 * stretch;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(out) * static_cast<std::size_t>(std::ceil(2 * support) + 1));
    std::vector<double> w;
    std::vector<Index> idx;
    for (Index i = 0; i < out; ++i) {
        const double centre = (static_cast<double>(i) + 0.5) / s - 0.5;
        const auto first = static_cast<Index>(std::floor(centre - support)) + 1;
        const auto last = static_cast<Index>(std::floor(centre + support));
        w.clear();
        idx.clear();
        double total = 0.0;
        for (Index j = first; j <= last; ++j) {
            const double k = keys_cubic((centre - static_cast<double>(j)) / stretch);
            if (k == 0.0) continue;
            w.push_back(k);
            idx.push_back(std::clamp<Index>(j, 0, in - 1));
            total += k;
        }
        for (std::size_t t = 0; t < w.size(); ++t) trips.emplace_back(i, idx[t], w[t] / total);
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> op(out, in);
    op.setFromTriplets(trips.begin(), trips.end());  // duplicates from clamped taps are summed
    return op;
}

Image bicubic_resample(const Image& img, Ratio scale, bool antialias)
{
    const auto rows_op = resample_operator(img.rows(), scale, antialias);
    const auto cols_op = resample_operator(img.cols(), scale, antialias);
    const Eigen::SparseMatrix<double, Eigen::RowMajor> cols_t = cols_op.transpose();
    return img.map_planes([&](const Image::Plane& p) -> Image::Plane {
        const RowMatrixXd tmp = rows_op * p;
        return tmp * cols_t;
    });
}

Image box_downsample(const Image& img, Index factor)
{
    if (factor < 1) throw ConfigError("box_downsample: factor must be >= 1");
    if (img.rows() % factor != 0 || img.cols() % factor != 0)
        throw DimensionError("box_downsample: dimensions must be divisible by the factor");
    const Index r = img.rows() / factor;
    const Index c = img.cols() / factor;
    const double inv = 1.0 / static_cast<double>(factor * factor);
    return img.map_planes([&](const Image::Plane& p) {
        Image::Plane out(r, c);
        for (Index y = 0; y < r; ++y)
            for (Index x = 0; x < c; ++x) out(y, x) = p.block(y * factor, x * factor, factor, factor).sum() * inv;
        return out;
    });
}

void save_cloud(const PatchCloud& cloud, const std::string& path)
{
    detail::LeWriter w(path);
    w.bytes("PCLD");
    w.put<std::uint32_t>(1);
    w.put<std::uint64_t>(static_cast<std::uint64_t>(cloud.size()));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(cloud.dim()));
    for (Index i = 0; i < cloud.points.size(); ++i) w.put<double>(cloud.points.data()[i]);
    w.finish();
}

PatchCloud load_cloud(const std::string& path)
{
    detail::LeReader r(path);
    if (r.file_size() < 4 || r.bytes(4) != "PCLD") throw FormatError("'" + path + "': bad magic, expected PCLD");
    const auto version = r.get<std::uint32_t>();
    if (version != 1) throw FormatError("'" + path + "': unsupported PCLD version " + std::to_string(version));
    const auto n = r.get<std::uint64_t>();
    const auto d = r.get<std::uint64_t>();
    if (d != 0 && n > r.remaining() / 8 / d) throw FormatError("'" + path + "' is truncated");
    if (r.remaining() != n * d * 8) throw FormatError("'" + path + "': payload size does not match header");
    RowMatrixXd pts(static_cast<Index>(n), static_cast<Index>(d));
    for (Index i = 0; i < pts.size(); ++i) pts.data()[i] = r.get<double>();
    return PatchCloud(std::move(pts), "loaded from " + path);
}

}  // namespace mscope
