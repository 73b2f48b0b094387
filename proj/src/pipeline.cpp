#include "mscope/pipeline.hpp"

#include "mscope/transforms.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace mscope {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- enums

namespace {

std::string normalise_key(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return c == '-' ? '_' : std::tolower(c); });
    return s;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v)
{
    const std::string s = normalise_key(v);
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("'" + key + "': expected a boolean, got '" + v + "'");
}

Index parse_index(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<Index>(x);
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "': expected an integer, got '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
    }
}

}  // namespace

std::string to_string(Task t)
{
    switch (t) {
    case Task::Denoise: return "denoise";
    case Task::SrBicubic: return "sr_bicubic";
    case Task::SrUnknown: return "sr_unknown";
    }
    return "?";
}

std::string to_string(Domain d)
{
    switch (d) {
    case Domain::Image: return "image";
    case Domain::Wavelet: return "wavelet";
    case Domain::PixelShuffle: return "pixelshuffle";
    }
    return "?";
}

std::string to_string(Target t)
{
    switch (t) {
    case Target::InputManifold: return "input_manifold";
    case Target::LabelOriginal: return "label_original";
    case Target::LabelResidual: return "label_residual";
    }
    return "?";
}

Task parse_task(const std::string& s)
{
    const std::string k = normalise_key(s);
    if (k == "denoise") return Task::Denoise;
    if (k == "sr_bicubic") return Task::SrBicubic;
    if (k == "sr_unknown") return Task::SrUnknown;
    throw ConfigError("unknown task '" + s + "' (denoise, sr_bicubic, sr_unknown)");
}

Domain parse_domain(const std::string& s)
{
    const std::string k = normalise_key(s);
    if (k == "image") return Domain::Image;
    if (k == "wavelet") return Domain::Wavelet;
    if (k == "pixelshuffle" || k == "ps") return Domain::PixelShuffle;
    throw ConfigError("unknown domain '" + s + "' (image, wavelet, pixelshuffle)");
}

Target parse_target(const std::string& s)
{
    const std::string k = normalise_key(s);
    if (k == "input_manifold" || k == "input") return Target::InputManifold;
    if (k == "label_original" || k == "original") return Target::LabelOriginal;
    if (k == "label_residual" || k == "residual") return Target::LabelResidual;
    throw ConfigError("unknown target '" + s + "' (input_manifold, label_original, label_residual)");
}

// ---------------------------------------------------------------- config

ExperimentConfig ExperimentConfig::resolved() const
{
    ExperimentConfig r = *this;
    if (!r.metric) r.metric = target == Target::InputManifold ? Metric::Corr : Metric::L2;
    if (!r.patch) r.patch = task == Task::Denoise ? 40 : 20;
    if (!r.count) r.count = homology >= 1 ? 300 : 4500;
    if (*r.patch < 1) throw ConfigError("patch must be >= 1");
    if (*r.count < 0) throw ConfigError("count must be >= 0");
    if (r.scale < 1) throw ConfigError("scale must be >= 1");
    if ((task == Task::SrBicubic || task == Task::SrUnknown) && r.scale < 2)
        throw ConfigError("super-resolution tasks need scale >= 2");
    if (r.image_factor < 1) throw ConfigError("image_factor must be >= 1");
    if (r.sigma8bit < 0.0) throw ConfigError("sigma must be >= 0");
    if (r.homology < 0 || r.homology > 1) throw ConfigError("homology must be 0 or 1");
    if (r.grid_points < 1) throw ConfigError("grid must have at least one point");
    if (r.normalized && *r.metric != Metric::L2) throw ConfigError("normalized applies to the L2 metric only");
    if (r.images.empty() && (r.synthetic_images < 1 || r.synthetic_size < 8))
        throw ConfigError("no images: give images or a positive synthetic_images count");
    return r;
}

Index ExperimentConfig::grid_factor() const
{
    switch (domain) {
    case Domain::Wavelet: return 2;
    case Domain::PixelShuffle: return scale;
    case Domain::Image: return image_factor;
    }
    return 1;
}

Index ExperimentConfig::domain_patch() const
{
    const Index p = patch.value_or(task == Task::Denoise ? 40 : 20);
    return domain == Domain::Image ? image_factor * p : p;
}

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw_value)
{
    const std::string key = normalise_key(trim(raw_key));
    const std::string value = trim(raw_value);
    const bool is_auto = normalise_key(value) == "auto";
    if (key == "task") cfg.task = parse_task(value);
    else if (key == "domain") cfg.domain = parse_domain(value);
    else if (key == "target") cfg.target = parse_target(value);
    else if (key == "patch") cfg.patch = is_auto ? std::nullopt : std::optional<Index>(parse_index(key, value));
    else if (key == "image_factor") cfg.image_factor = parse_index(key, value);
    else if (key == "count") cfg.count = is_auto ? std::nullopt : std::optional<Index>(parse_index(key, value));
    else if (key == "sigma" || key == "sigma8bit") cfg.sigma8bit = parse_double(key, value);
    else if (key == "scale") cfg.scale = parse_index(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_index(key, value));
    else if (key == "metric") cfg.metric = is_auto ? std::nullopt : std::optional<Metric>(parse_metric(value));
    else if (key == "normalized") cfg.normalized = parse_bool(key, value);
    else if (key == "eps_max") cfg.eps_max = is_auto ? 0.0 : parse_double(key, value);
    else if (key == "grid" || key == "grid_points") cfg.grid_points = parse_index(key, value);
    else if (key == "homology") cfg.homology = static_cast<int>(parse_index(key, value));
    else if (key == "max_simplices") cfg.max_simplices = static_cast<std::uint64_t>(parse_index(key, value));
    else if (key == "clamp_noise") cfg.clamp_noise = parse_bool(key, value);
    else if (key == "synthetic_images") cfg.synthetic_images = parse_index(key, value);
    else if (key == "synthetic_size") cfg.synthetic_size = parse_index(key, value);
    else if (key == "images") {
        cfg.images.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!trim(item).empty()) cfg.images.push_back(trim(item));
    } else {
        throw ConfigError("unknown configuration key '" + raw_key + "'");
    }
}

ExperimentConfig parse_config(const std::string& text)
{
    ExperimentConfig cfg;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& cfg)
{
    std::ostringstream out;
    auto opt = [](const auto& o) { return o ? std::to_string(*o) : std::string("auto"); };
    std::string images;
    for (const auto& p : cfg.images) images += (images.empty() ? "" : ",") + p;
    out << "[experiment]\n"
        << "task = " << to_string(cfg.task) << "\n"
        << "domain = " << to_string(cfg.domain) << "\n"
        << "target = " << to_string(cfg.target) << "\n"
        << "\n[sampling]\n"
        << "patch = " << opt(cfg.patch) << "\n"
        << "image_factor = " << cfg.image_factor << "\n"
        << "count = " << opt(cfg.count) << "\n"
        << "seed = " << cfg.seed << "\n"
        << "sigma = " << format_real(cfg.sigma8bit) << "\n"
        << "scale = " << cfg.scale << "\n"
        << "clamp_noise = " << (cfg.clamp_noise ? "true" : "false") << "\n"
        << "images = " << images << "\n"
        << "synthetic_images = " << cfg.synthetic_images << "\n"
        << "synthetic_size = " << cfg.synthetic_size << "\n"
        << "\n[homology]\n"
        << "metric = " << (cfg.metric ? to_string(*cfg.metric) : std::string("auto")) << "\n"
        << "normalized = " << (cfg.normalized ? "true" : "false") << "\n"
        << "eps_max = " << (cfg.eps_max > 0.0 ? format_real(cfg.eps_max) : std::string("auto")) << "\n"
        << "grid_points = " << cfg.grid_points << "\n"
        << "homology = " << cfg.homology << "\n"
        << "max_simplices = " << cfg.max_simplices << "\n";
    return out.str();
}

// ---------------------------------------------------------------- synthetic data

SynthShape parse_shape(const std::string& s)
{
    const std::string k = normalise_key(s);
    if (k == "circle") return SynthShape::Circle;
    if (k == "sphere") return SynthShape::Sphere;
    if (k == "blob") return SynthShape::Blob;
    if (k == "two_blobs") return SynthShape::TwoBlobs;
    throw ConfigError("unknown shape '" + s + "' (circle, sphere, blob, two_blobs)");
}

PatchCloud synth_cloud(SynthShape shape, Index n, double noise, std::uint64_t seed)
{
    if (n < 1) throw ConfigError("synth_cloud: n must be >= 1");
    if (noise < 0.0) throw ConfigError("synth_cloud: noise must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const Index dim = shape == SynthShape::Sphere ? 3 : 2;
    RowMatrixXd pts(n, dim);
    std::string name;
    for (Index i = 0; i < n; ++i) {
        switch (shape) {
        case SynthShape::Circle: {
            const double t = angle(rng);
            pts.row(i) << std::cos(t), std::sin(t);
            name = "circle";
            break;
        }
        case SynthShape::Sphere: {
            Eigen::Vector3d v;
            do {
                v << normal(rng), normal(rng), normal(rng);
            } while (v.norm() == 0.0);
            pts.row(i) = v.normalized().transpose();
            name = "sphere";
            break;
        }
        case SynthShape::Blob:
            pts.row(i) << normal(rng), normal(rng);
            name = "blob";
            break;
        case SynthShape::TwoBlobs: {
            const double cx = (i % 2 == 0) ? -5.0 : 5.0;
            pts.row(i) << cx + normal(rng), normal(rng);
            name = "two_blobs";
            break;
        }
        }
    }
    if (noise > 0.0)
        for (Index k = 0; k < pts.size(); ++k) pts.data()[k] += noise * normal(rng);
    return PatchCloud(std::move(pts), "synth " + name + " n=" + std::to_string(n) + " noise=" + format_real(noise) +
                                          " seed=" + std::to_string(seed));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

RowMatrixXd gaussian_blur(const RowMatrixXd& p, double sigma)
{
    const Index radius = static_cast<Index>(std::ceil(3.0 * sigma));
    Eigen::VectorXd k(2 * radius + 1);
    for (Index t = -radius; t <= radius; ++t) k[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    k /= k.sum();
    auto pass = [&](const RowMatrixXd& in) {
        RowMatrixXd out = RowMatrixXd::Zero(in.rows(), in.cols());
        for (Index y = 0; y < in.rows(); ++y)
            for (Index x = 0; x < in.cols(); ++x)
                for (Index t = -radius; t <= radius; ++t)
                    out(y, x) += k[t + radius] * in(y, std::clamp<Index>(x + t, 0, in.cols() - 1));
        return out;
    };
    const RowMatrixXd h = pass(p);
    return pass(h.transpose()).transpose();
}

}  // namespace

std::vector<Image> synth_texture_images(Index count, Index size, std::uint64_t seed)
{
    if (count < 1 || size < 8) throw ConfigError("synthetic images need count >= 1 and size >= 8");
    std::vector<Image> out;
    for (Index k = 0; k < count; ++k) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> uni(0.0, 1.0);

        RowMatrixXd img(size, size);
        const double base = 0.35 + 0.3 * uni(rng);
        const double gx = (uni(rng) - 0.5) * 0.3, gy = (uni(rng) - 0.5) * 0.3;
        for (Index y = 0; y < size; ++y)
            for (Index x = 0; x < size; ++x)
                img(y, x) = base + gx * (static_cast<double>(x) / size - 0.5) + gy * (static_cast<double>(y) / size - 0.5);

        // band-limited texture: blurred white noise, unit variance, modulated contrast
        RowMatrixXd white(size, size);
        for (Index i = 0; i < white.size(); ++i) white.data()[i] = normal(rng);
        RowMatrixXd texture = gaussian_blur(white, 1.0);
        texture /= std::sqrt(texture.array().square().mean());
        RowMatrixXd contrast_noise(size, size);
        for (Index i = 0; i < contrast_noise.size(); ++i) contrast_noise.data()[i] = normal(rng);
        RowMatrixXd contrast = gaussian_blur(contrast_noise, size / 16.0);
        contrast /= std::max(1e-12, contrast.cwiseAbs().maxCoeff());
        img.array() += texture.array() * (0.16 + 0.08 * contrast.array());

        // hard-edged rectangles and discs
        const int shapes = 6;
        for (int s = 0; s < shapes; ++s) {
            const double cy = uni(rng) * size, cx = uni(rng) * size;
            const double r = (0.05 + 0.15 * uni(rng)) * size;
            const double step = (uni(rng) < 0.5 ? -1.0 : 1.0) * (0.1 + 0.15 * uni(rng));
            const bool disc = uni(rng) < 0.5;
            for (Index y = 0; y < size; ++y)
                for (Index x = 0; x < size; ++x) {
                    const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
                    const bool inside = disc ? dy * dy + dx * dx < r * r : std::abs(dy) < r && std::abs(dx) < 0.7 * r;
                    if (inside) img(y, x) += step;
                }
        }
        out.emplace_back(std::vector<RowMatrixXd>{img.cwiseMax(0.0).cwiseMin(1.0)});
    }
    return out;
}

// ---------------------------------------------------------------- chains

Image crop_to_multiple(const Image& img, Index modulus)
{
    const Index r = img.rows() - img.rows() % modulus;
    const Index c = img.cols() - img.cols() % modulus;
    if (r == 0 || c == 0)
        throw DimensionError("image " + std::to_string(img.rows()) + "x" + std::to_string(img.cols()) +
                             " is smaller than the required multiple " + std::to_string(modulus));
    if (r == img.rows() && c == img.cols()) return img;
    return img.map_planes([&](const Image::Plane& p) -> Image::Plane { return p.topLeftCorner(r, c); });
}

namespace {

Index crop_modulus(const ExperimentConfig& cfg)
{
    return std::lcm(std::lcm(Index(2), cfg.scale), cfg.image_factor);
}

}  // namespace

TensorStack build_stack(const ExperimentConfig& cfg, const Image& image, std::uint64_t image_index)
{
    const Image hr = crop_to_multiple(image, crop_modulus(cfg));
    const Index s = cfg.scale;

    // input image X (spatial, HR-sized unless the chain says otherwise)
    Image input;
    std::optional<Image> low_res;
    switch (cfg.task) {
    case Task::Denoise:
        input = add_gaussian_noise(hr, {cfg.sigma8bit, derive_seed(cfg.seed, 1000 + image_index), cfg.clamp_noise});
        break;
    case Task::SrBicubic:
        low_res = bicubic_resample(hr, {1, s}, true);
        input = bicubic_resample(*low_res, {s, 1}, true);
        break;
    case Task::SrUnknown:
        low_res = box_downsample(hr, s);
        input = bicubic_resample(*low_res, {s, 1}, true);
        break;
    }

    auto map_input = [&]() -> TensorStack {
        switch (cfg.domain) {
        case Domain::Image: return as_stack(input);
        case Domain::Wavelet: return wavelet_forward(input);
        case Domain::PixelShuffle:
            return cfg.task == Task::SrUnknown ? copy_ch(*low_res, s) : pixel_shuffle_decompose(input, s);
        }
        throw ConfigError("bad domain");
    };
    auto map_label = [&]() -> TensorStack {
        switch (cfg.domain) {
        case Domain::Image: return as_stack(hr);
        case Domain::Wavelet: return wavelet_forward(hr);
        case Domain::PixelShuffle: return pixel_shuffle_decompose(hr, s);
        }
        throw ConfigError("bad domain");
    };

    switch (cfg.target) {
    case Target::InputManifold: return map_input();
    case Target::LabelOriginal: return map_label();
    case Target::LabelResidual: return residual(map_input(), map_label());
    }
    throw ConfigError("bad target");
}

namespace {

std::string chain_description(const ExperimentConfig& cfg)
{
    const std::string in_img = cfg.task == Task::Denoise ? "(HR+N)" : cfg.task == Task::SrBicubic ? "BU(bicubic_down(HR))" : "BU(box_down(HR))";
    std::string in, label;
    switch (cfg.domain) {
    case Domain::Image: in = in_img; label = "HR"; break;
    case Domain::Wavelet: in = "WT(" + in_img + ")"; label = "WT(HR)"; break;
    case Domain::PixelShuffle:
        in = cfg.task == Task::SrUnknown ? "COPY_ch(box_down(HR))" : "PS(" + in_img + ")";
        label = "PS(HR)";
        break;
    }
    switch (cfg.target) {
    case Target::InputManifold: return in;
    case Target::LabelOriginal: return label;
    case Target::LabelResidual: return in + " - " + label;
    }
    return {};
}

}  // namespace

PatchCloud build_manifold(const ExperimentConfig& raw, const std::vector<Image>& images)
{
    if (images.empty()) throw ConfigError("build_manifold: empty image list");
    const ExperimentConfig cfg = raw.resolved();
    const Index factor = cfg.grid_factor();
    std::vector<TensorStack> stacks;
    std::vector<Extent> coarse;
    for (std::size_t k = 0; k < images.size(); ++k) {
        stacks.push_back(build_stack(cfg, images[k], k));
        const Index shrink = cfg.domain == Domain::Image ? factor : 1;
        coarse.push_back({stacks.back().rows() / shrink, stacks.back().cols() / shrink, stacks.back().channels()});
    }
    auto windows = sample_windows(coarse, *cfg.patch, *cfg.count, derive_seed(cfg.seed, 0), true);
    if (cfg.domain == Domain::Image) windows = scale_windows(std::move(windows), factor);
    std::ostringstream prov;
    prov << to_string(cfg.task) << '/' << to_string(cfg.domain) << '/' << to_string(cfg.target) << ": "
         << chain_description(cfg) << "; patch " << cfg.domain_patch() << " x " << stacks.front().channels()
         << " planes; count " << *cfg.count << "; seed " << cfg.seed << "; images " << images.size();
    return gather_patches(stacks, windows, cfg.domain_patch(), prov.str());
}

// ---------------------------------------------------------------- reports

Summary summarize(const PersistenceDiagram& diag, double eps_max)
{
    Summary s;
    std::vector<double> deaths;
    Index h0 = 0;
    double area = 0.0;
    for (const Bar& b : diag.bars) {
        if (b.dim != 0) continue;
        ++h0;
        area += std::min(b.death, eps_max) - b.birth;
        if (!b.essential()) deaths.push_back(b.death);
    }
    // dropped zero-length H0 bars are merges at eps = 0
    const Index zeros = std::max<Index>(0, diag.n_points - h0);
    deaths.insert(deaths.end(), static_cast<std::size_t>(zeros), 0.0);
    std::sort(deaths.begin(), deaths.end());
    const Index n = diag.n_points;
    s.n_points = n;
    s.auc_beta0 = n > 0 ? area / static_cast<double>(n) : 0.0;

    // first eps where beta0 = n - #{deaths <= eps} drops to `level`
    auto first_eps = [&](Index level) {
        const Index need = n - level;
        if (need <= 0) return 0.0;
        if (need > static_cast<Index>(deaths.size())) return kInfinity;
        return deaths[static_cast<std::size_t>(need - 1)];
    };
    auto level = [&](double q) { return std::max<Index>(1, static_cast<Index>(std::floor(q * n + 1e-9))); };
    s.merge_eps_50 = first_eps(level(0.5));
    s.merge_eps_10 = first_eps(level(0.1));
    s.full_merge_eps = first_eps(1);
    return s;
}

namespace {

json real_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double real_from(const json& j)
{
    return j.is_null() ? kInfinity : j.get<double>();
}

json config_json(const ExperimentConfig& cfg)
{
    json c = json::object();
    std::stringstream ss(format_config(cfg));
    std::string line;
    while (std::getline(ss, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        c[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return c;
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace

std::vector<Image> load_experiment_images(const ExperimentConfig& cfg)
{
    if (cfg.images.empty()) return synth_texture_images(cfg.synthetic_images, cfg.synthetic_size, cfg.seed);
    std::vector<Image> out;
    for (const auto& p : cfg.images) out.push_back(load_image(p));
    return out;
}

ReportBundle run_experiment(const ExperimentConfig& raw, const std::vector<Image>& images, const std::string& outdir)
{
    const ExperimentConfig cfg = raw.resolved();
    if (images.empty()) throw ConfigError("run_experiment: empty image list");
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw IoError("cannot create output directory '" + outdir + "': " + ec.message());

    const PatchCloud cloud = build_manifold(cfg, images);
    const DistanceMatrix dm = distance_matrix(cloud, *cfg.metric, cfg.normalized);

    double eps_max = cfg.eps_max;
    if (!(eps_max > 0.0)) {
        eps_max = dm.size() > 1 ? dm.values.maxCoeff() : 0.0;
        if (!(eps_max > 0.0)) eps_max = 1.0;
    }

    ReportBundle bundle;
    bundle.config = cfg;
    bundle.eps_max = eps_max;
    bundle.constant_points = dm.constant_points;
    bundle.diagram = cfg.homology == 0 ? h0_barcode(dm, eps_max) : rips_diagram(dm, eps_max, cfg.max_simplices);
    bundle.summary = summarize(bundle.diagram, eps_max);
    const BettiCurve curve = betti_curve(bundle.diagram, uniform_grid(eps_max, cfg.grid_points));

    const fs::path dir(outdir);
    bundle.barcode_csv = (dir / "barcode.csv").string();
    bundle.betti_csv = (dir / "betti.csv").string();
    bundle.barcode_svg = (dir / "barcode.svg").string();
    bundle.summary_json = (dir / "summary.json").string();
    bundle.manifest_path = (dir / "manifest.ini").string();

    write_barcode_csv(bundle.diagram, bundle.barcode_csv);
    write_betti_csv(curve, bundle.betti_csv);
    write_barcode_svg(bundle.diagram, eps_max, bundle.barcode_svg);

    json j;
    j["config"] = config_json(cfg);
    j["eps_max"] = eps_max;
    j["n_points"] = bundle.summary.n_points;
    j["dimension"] = cloud.dim();
    j["summary"] = {{"auc_beta0", bundle.summary.auc_beta0},
                    {"merge_eps_50", real_or_null(bundle.summary.merge_eps_50)},
                    {"merge_eps_10", real_or_null(bundle.summary.merge_eps_10)},
                    {"full_merge_eps", real_or_null(bundle.summary.full_merge_eps)}};
    j["diagnostics"] = {{"zero_length_bars", bundle.diagram.zero_length_bars},
                        {"constant_points", dm.constant_points},
                        {"h1_bars", bundle.diagram.bars_of(1).size()},
                        {"h1_loop_ratio", real_or_null(loop_ratio(bundle.diagram))}};
    j["provenance"] = cloud.provenance;
    j["files"] = {{"barcode_csv", "barcode.csv"}, {"betti_csv", "betti.csv"}, {"barcode_svg", "barcode.svg"},
                  {"manifest", "manifest.ini"}};
    write_text(bundle.summary_json, j.dump(2) + "\n");

    std::ostringstream man;
    man << format_config(cfg) << "\n[run]\n"
        << "eps_max = " << format_real(eps_max) << "\n"
        << "n_points = " << cloud.size() << "\n"
        << "dimension = " << cloud.dim() << "\n"
        << "window_seed = " << derive_seed(cfg.seed, 0) << "\n"
        << "constant_points = " << dm.constant_points << "\n"
        << "zero_length_bars = " << bundle.diagram.zero_length_bars << "\n"
        << "provenance = " << cloud.provenance << "\n\n[inputs]\n";
    bundle.manifest["eps_max"] = format_real(eps_max);
    for (std::size_t k = 0; k < images.size(); ++k) {
        std::string src = cfg.images.size() == images.size()
                              ? cfg.images[k] + " fnv1a64:" + file_digest(cfg.images[k])
                              : "in-memory " + std::to_string(images[k].rows()) + "x" + std::to_string(images[k].cols());
        if (cfg.task == Task::Denoise) src += " noise_seed:" + std::to_string(derive_seed(cfg.seed, 1000 + k));
        man << "image_" << k << " = " << src << "\n";
        bundle.manifest["image_" + std::to_string(k)] = src;
    }
    man << "\n[outputs]\n";
    for (const char* name : {"barcode.csv", "betti.csv", "barcode.svg", "summary.json"}) {
        const std::string digest = file_digest((dir / name).string());
        man << name << " = fnv1a64:" << digest << "\n";
        bundle.manifest[name] = digest;
    }
    write_text(bundle.manifest_path, man.str());
    return bundle;
}

ReportBundle load_report(const std::string& summary_json)
{
    std::ifstream in(summary_json);
    if (!in) throw IoError("cannot open '" + summary_json + "'");
    json j;
    try {
        in >> j;
        ReportBundle b;
        ExperimentConfig cfg;
        for (const auto& [k, v] : j.at("config").items()) apply_setting(cfg, k, v.get<std::string>());
        b.config = cfg;
        b.eps_max = j.at("eps_max").get<double>();
        const auto& s = j.at("summary");
        b.summary.auc_beta0 = s.at("auc_beta0").get<double>();
        b.summary.merge_eps_50 = real_from(s.at("merge_eps_50"));
        b.summary.merge_eps_10 = real_from(s.at("merge_eps_10"));
        b.summary.full_merge_eps = real_from(s.at("full_merge_eps"));
        b.summary.n_points = j.at("n_points").get<Index>();
        b.summary_json = summary_json;
        return b;
    } catch (const json::exception& e) {
        throw FormatError("'" + summary_json + "': " + e.what());
    }
}

std::string ComparisonVerdict::describe() const
{
    std::ostringstream out;
    out << (verdict == Verdict::SimplerFirst ? "SIMPLER(a)" : "MIXED") << " auc_beta0 a=" << format_real(auc_a)
        << " b=" << format_real(auc_b) << " merge_eps_50 a=" << format_real(merge50_a) << " b=" << format_real(merge50_b);
    return out.str();
}

ComparisonVerdict compare_manifolds(const ReportBundle& a, const ReportBundle& b)
{
    const auto& ca = a.config;
    const auto& cb = b.config;
    if (ca.metric != cb.metric || ca.normalized != cb.normalized)
        throw ConfigError("compare: bundles use different metrics or normalisation");
    if (a.eps_max != b.eps_max || ca.grid_points != cb.grid_points)
        throw ConfigError("compare: bundles use different eps_max or grid; rerun both with the same --eps-max");
    ComparisonVerdict v;
    v.auc_a = a.summary.auc_beta0;
    v.auc_b = b.summary.auc_beta0;
    v.merge50_a = a.summary.merge_eps_50;
    v.merge50_b = b.summary.merge_eps_50;
    v.verdict = (v.auc_a < v.auc_b && v.merge50_a < v.merge50_b) ? Verdict::SimplerFirst : Verdict::Mixed;
    return v;
}

void write_barcode_svg(const PersistenceDiagram& diag, double eps_max, const std::string& path)
{
    constexpr double left = 50.0, width = 700.0, bar_h = 2.0, gap = 1.0, top = 30.0;
    std::vector<Bar> bars = diag.bars;
    std::stable_sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) {
        if (a.dim != b.dim) return a.dim < b.dim;
        return a.death > b.death;
    });
    const double height = top + static_cast<double>(bars.size()) * (bar_h + gap) + 40.0;
    auto xpos = [&](double e) { return left + width * std::min(e, eps_max) / eps_max; };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(left + width + 30) << "\" height=\"" << num(height)
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    double y = top;
    for (const Bar& b : bars) {
        const char* colour = b.dim == 0 ? "#1f77b4" : "#d62728";
        svg << "<line x1=\"" << num(xpos(b.birth)) << "\" x2=\"" << num(xpos(b.death)) << "\" y1=\"" << num(y)
            << "\" y2=\"" << num(y) << "\" stroke=\"" << colour << "\" stroke-width=\"" << num(bar_h) << "\"/>\n";
        y += bar_h + gap;
    }
    const double axis_y = y + 8.0;
    svg << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + width) << "\" y1=\"" << num(axis_y) << "\" y2=\""
        << num(axis_y) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double e = eps_max * t / 5.0;
        svg << "<text x=\"" << num(xpos(e)) << "\" y=\"" << num(axis_y + 14) << "\" font-size=\"10\" text-anchor=\"middle\">"
            << num(e) << "</text>\n";
    }
    svg << "<text x=\"" << num(left) << "\" y=\"18\" font-size=\"12\">barcode (H0 blue, H1 red), eps in [0, " << num(eps_max)
        << "]</text>\n</svg>\n";
    write_text(path, svg.str());
}

}  // namespace mscope
