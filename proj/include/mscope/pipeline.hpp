#ifndef MSCOPE_PIPELINE_HPP
#define MSCOPE_PIPELINE_HPP

#include "mscope/cloud.hpp"
#include "mscope/imgio.hpp"
#include "mscope/persistence.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mscope {

enum class Task { Denoise, SrBicubic, SrUnknown };
enum class Domain { Image, Wavelet, PixelShuffle };
enum class Target { InputManifold, LabelOriginal, LabelResidual };

std::string to_string(Task t);
std::string to_string(Domain d);
std::string to_string(Target t);
Task parse_task(const std::string& s);
Domain parse_domain(const std::string& s);
Target parse_target(const std::string& s);

/// One experiment of the (task x domain x target) matrix.
///
/// Unset optionals are resolved by resolved(): the metric follows the target
/// (CORR for the input manifold, L2 for labels), the patch follows the task
/// (40 for denoising, 20 for super-resolution) and the count follows the
/// homology degree (4500 for H0 only, 300 with H1). `patch` is the patch size
/// in the feature domain; the image domain uses image_factor * patch so both
/// cover the same receptive field.
struct ExperimentConfig {
    Task task = Task::Denoise;
    Domain domain = Domain::Wavelet;
    Target target = Target::LabelResidual;
    std::optional<Index> patch;
    Index image_factor = 2;
    std::optional<Index> count;
    double sigma8bit = 30.0;
    Index scale = 2;  ///< SR factor; also the pixel-shuffle factor for denoising
    std::uint64_t seed = 1;
    std::optional<Metric> metric;
    bool normalized = false;
    double eps_max = 0.0;  ///< <= 0 means: use the largest pairwise distance
    Index grid_points = 101;
    int homology = 0;      ///< highest homology degree computed (0 or 1)
    std::uint64_t max_simplices = kDefaultSimplexBudget;
    bool clamp_noise = false;

    std::vector<std::string> images;  ///< input files; empty -> synthetic set
    Index synthetic_images = 4;
    Index synthetic_size = 256;

    ExperimentConfig resolved() const;
    /// Patch side actually used in the chosen domain.
    Index domain_patch() const;
    /// Coarse-grid factor on which window corners are drawn.
    Index grid_factor() const;
};

/// key = value text; '#' starts a comment and [section] headers are allowed
/// for grouping but do not scope keys.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string format_config(const ExperimentConfig& cfg);
/// Apply one key/value (shared by the config parser and CLI overrides).
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

enum class SynthShape { Circle, Sphere, Blob, TwoBlobs };
SynthShape parse_shape(const std::string& s);

/// Seeded samples: unit circle in R^2, unit sphere in R^3, standard Gaussian
/// blob in R^2, or two such blobs centred at (+-5, 0). `noise` adds isotropic
/// Gaussian jitter with that standard deviation.
PatchCloud synth_cloud(SynthShape shape, Index n, double noise, std::uint64_t seed);

/// Deterministic grayscale test images: a smooth shading ramp, band-limited
/// random texture with spatially varying contrast, and a few hard-edged
/// shapes, clipped to [0,1].
std::vector<Image> synth_texture_images(Index count, Index size, std::uint64_t seed);

/// Per-source seed derivation (splitmix64 of seed and index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Crop bottom/right so both extents are multiples of `modulus`.
Image crop_to_multiple(const Image& img, Index modulus);

/// The feature stack of one image for (task, domain, target), after cropping.
TensorStack build_stack(const ExperimentConfig& cfg, const Image& image, std::uint64_t image_index);

/// Patch cloud for the configuration. Window corners are drawn on a coarse
/// grid shared by every domain with the same grid_factor(), so image- and
/// wavelet-domain clouds of one seed cover identical pixels.
PatchCloud build_manifold(const ExperimentConfig& cfg, const std::vector<Image>& images);

struct Summary {
    double auc_beta0 = 0.0;       ///< integral of beta0/n over [0, eps_max]
    double merge_eps_50 = 0.0;    ///< first eps with beta0 <= max(1, 0.5 n)
    double merge_eps_10 = 0.0;    ///< first eps with beta0 <= max(1, 0.1 n)
    double full_merge_eps = 0.0;  ///< first eps with beta0 == 1
    Index n_points = 0;
};

/// Summary scalars computed exactly from the H0 bars.
Summary summarize(const PersistenceDiagram& diag, double eps_max);

struct ReportBundle {
    ExperimentConfig config;  ///< resolved
    double eps_max = 0.0;
    std::string barcode_csv;
    std::string betti_csv;
    std::string barcode_svg;
    std::string summary_json;
    std::string manifest_path;
    Summary summary;
    std::map<std::string, std::string> manifest;
    PersistenceDiagram diagram;
    Index constant_points = 0;
};

/// Build the cloud, compute distances and barcodes, and write barcode.csv,
/// betti.csv, barcode.svg, summary.json and manifest.ini into outdir.
ReportBundle run_experiment(const ExperimentConfig& cfg, const std::vector<Image>& images, const std::string& outdir);

/// Images named by the config, or the synthetic set when none are named.
std::vector<Image> load_experiment_images(const ExperimentConfig& cfg);

/// Reload a bundle from its summary.json (diagram not included).
ReportBundle load_report(const std::string& summary_json);

enum class Verdict { SimplerFirst, Mixed };

struct ComparisonVerdict {
    Verdict verdict = Verdict::Mixed;
    double auc_a = 0.0, auc_b = 0.0;
    double merge50_a = 0.0, merge50_b = 0.0;

    std::string describe() const;
};

/// SIMPLER(a) iff a has both the smaller beta0 area and the earlier 50% merge.
/// Requires equal metric, normalisation, eps_max and grid.
ComparisonVerdict compare_manifolds(const ReportBundle& a, const ReportBundle& b);

/// Horizontal segments per bar, sorted by death, eps on the x axis.
void write_barcode_svg(const PersistenceDiagram& diag, double eps_max, const std::string& path);

}  // namespace mscope

#endif  // MSCOPE_PIPELINE_HPP
