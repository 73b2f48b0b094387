// mscope: topology of image-patch manifolds from the command line.
//
// Exit codes: 0 ok, 2 configuration error, 3 capacity error, 4 I/O error.

#include "mscope/cloud.hpp"
#include "mscope/imgio.hpp"
#include "mscope/persistence.hpp"
#include "mscope/pipeline.hpp"
#include "mscope/transforms.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <new>
#include <string>

namespace {

using namespace mscope;

// Experiment flags shared by `patches` and `report`; only flags the user
// actually passed override the config file.
struct ExperimentFlags {
    std::string config_path;
    std::map<std::string, std::string> values;

    void attach(CLI::App* app)
    {
        app->add_option("--config", config_path, "key = value experiment file");
        for (const char* name : {"task", "domain", "target", "patch", "count", "sigma", "scale", "metric", "eps-max",
                                 "grid", "seed", "homology", "images", "synthetic-images", "synthetic-size",
                                 "image-factor", "max-simplices"})
            app->add_option(std::string("--") + name, values[name]);
        app->add_flag("--normalized", normalized, "divide L2 distances by sqrt(d)");
        app->add_flag("--clamp-noise", clamp_noise, "clip noisy images to [0,1]");
    }

    ExperimentConfig build(CLI::App* app) const
    {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        for (const auto& [name, value] : values)
            if (app->count(std::string("--") + name) > 0) apply_setting(cfg, name, value);
        if (normalized) cfg.normalized = true;
        if (clamp_noise) cfg.clamp_noise = true;
        return cfg;
    }

    bool normalized = false;
    bool clamp_noise = false;
};

Ratio parse_ratio(const std::string& s)
{
    Ratio r;
    const auto slash = s.find('/');
    try {
        if (slash == std::string::npos) {
            r.num = std::stoll(s);
        } else {
            r.num = std::stoll(s.substr(0, slash));
            r.den = std::stoll(s.substr(slash + 1));
        }
    } catch (const std::exception&) {
        throw ConfigError("scale must be an integer or a ratio like 1/2, got '" + s + "'");
    }
    if (r.num <= 0 || r.den <= 0) throw ConfigError("scale must be positive");
    return r;
}

// Stack planes tiled into a grid of `across` columns.
Image mosaic(const TensorStack& t, Index across, Index offset_from = 1, double offset = 0.0)
{
    const Index down = (t.channels() + across - 1) / across;
    Image out(t.rows() * down, t.cols() * across, 1, 0.0);
    for (Index k = 0; k < t.channels(); ++k) {
        RowMatrixXd p = t.plane(k);
        if (k >= offset_from) p.array() += offset;
        out.plane(0).block((k / across) * t.rows(), (k % across) * t.cols(), t.rows(), t.cols()) = p;
    }
    return out;
}

TensorStack unmosaic(const Image& img, Index across, Index down, Index offset_from = 1, double offset = 0.0)
{
    if (img.rows() % down != 0 || img.cols() % across != 0) throw DimensionError("mosaic does not split evenly");
    const Index r = img.rows() / down, c = img.cols() / across;
    std::vector<RowMatrixXd> planes;
    for (Index k = 0; k < across * down; ++k) {
        RowMatrixXd p = img.plane(0).block((k / across) * r, (k % across) * c, r, c);
        if (k >= offset_from) p.array() -= offset;
        planes.push_back(p);
    }
    return TensorStack(std::move(planes));
}

int run(int argc, char** argv)
{
    CLI::App app{"mscope: persistent-homology analysis of image patch manifolds"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "sample a synthetic point cloud");
    std::string shape = "circle", out;
    Index count = 100;
    double noise = 0.0;
    std::uint64_t seed = 1;
    synth->add_option("--shape", shape, "circle | sphere | blob | two_blobs")->capture_default_str();
    synth->add_option("--count", count)->capture_default_str();
    synth->add_option("--noise", noise)->capture_default_str();
    synth->add_option("--seed", seed)->capture_default_str();
    synth->add_option("--out", out, "output .pcld")->required();

    // patches
    auto* patches = app.add_subcommand("patches", "build an experiment's patch cloud");
    ExperimentFlags patch_flags;
    patch_flags.attach(patches);
    std::string patches_out;
    patches->add_option("--out", patches_out, "output .pcld")->required();

    // transform
    auto* transform = app.add_subcommand("transform", "apply an image transform");
    std::string op, in_path, scale_str = "2", t_out;
    double sigma = 0.0;
    transform->add_option("--op", op, "wt | iwt | ps | ips | copy | bu | down | noise")->required();
    transform->add_option("--in", in_path, "input image")->required();
    transform->add_option("--scale", scale_str, "integer factor, or ratio a/b for bu")->capture_default_str();
    transform->add_option("--sigma", sigma, "noise sigma in 8-bit units");
    transform->add_option("--seed", seed);
    transform->add_option("--out", t_out, "output image (PNG/PGM) or .pcld for stacks")->required();

    // dist
    auto* dist = app.add_subcommand("dist", "pairwise distance matrix of a cloud");
    std::string metric = "L2";
    bool normalized = false;
    dist->add_option("--in", in_path, "input .pcld")->required();
    dist->add_option("--metric", metric, "L2 | CORR")->capture_default_str();
    dist->add_flag("--normalized", normalized);
    dist->add_option("--out", out, "output .dmat")->required();

    // ph
    auto* ph = app.add_subcommand("ph", "Vietoris-Rips barcodes of a distance matrix");
    double eps_max = 0.0;
    int homology = 0;
    std::uint64_t budget = kDefaultSimplexBudget;
    ph->add_option("--in", in_path, "input .dmat")->required();
    ph->add_option("--eps-max", eps_max, "filtration cap (default: diameter)");
    ph->add_option("--homology", homology, "0 = H0 only, 1 = H0 and H1")->capture_default_str();
    ph->add_option("--max-simplices", budget)->capture_default_str();
    ph->add_option("--out", out, "output barcode CSV")->required();

    // betti
    auto* betti = app.add_subcommand("betti", "Betti curves from a barcode CSV");
    Index grid = 101;
    betti->add_option("--in", in_path, "barcode CSV")->required();
    betti->add_option("--eps-max", eps_max, "upper end of the grid")->required();
    betti->add_option("--grid", grid, "number of grid points")->capture_default_str();
    betti->add_option("--out", out, "output Betti CSV")->required();

    // report
    auto* report = app.add_subcommand("report", "run one experiment end to end");
    ExperimentFlags report_flags;
    report_flags.attach(report);
    std::string outdir;
    report->add_option("--out", outdir, "output directory")->required();

    // compare
    auto* compare = app.add_subcommand("compare", "compare two experiment summaries");
    std::string summary_a, summary_b;
    compare->add_option("a", summary_a, "summary.json of the candidate")->required();
    compare->add_option("b", summary_b, "summary.json of the reference")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*synth) {
        save_cloud(synth_cloud(parse_shape(shape), count, noise, seed), out);
    } else if (*patches) {
        const ExperimentConfig cfg = patch_flags.build(patches).resolved();
        const PatchCloud cloud = build_manifold(cfg, load_experiment_images(cfg));
        save_cloud(cloud, patches_out);
        std::cout << cloud.provenance << "\n" << cloud.size() << " points in R^" << cloud.dim() << "\n";
    } else if (*transform) {
        const Image img = load_image(in_path);
        auto integer_scale = [&]() {
            const Ratio r = parse_ratio(scale_str);
            if (r.den != 1) throw ConfigError("--scale must be an integer for --op " + op);
            return static_cast<Index>(r.num);
        };
        auto write_stack = [&](const TensorStack& t, Index across, Index offset_from, double offset) {
            if (t_out.size() > 5 && t_out.substr(t_out.size() - 5) == ".pcld") {
                RowMatrixXd rows(t.channels(), t.rows() * t.cols());
                for (Index k = 0; k < t.channels(); ++k)
                    rows.row(k) = Eigen::Map<const Eigen::RowVectorXd>(t.plane(k).data(), t.rows() * t.cols());
                save_cloud(PatchCloud(std::move(rows), "planes"), t_out);
            } else {
                save_image(mosaic(t, across, offset_from, offset), t_out);
            }
        };
        if (img.channels() != 1 && (op == "wt" || op == "iwt" || op == "ps" || op == "ips" || op == "copy"))
            throw ConfigError("--op " + op + " writes a grayscale mosaic; give a grayscale image");
        if (op == "wt") {
            // display mapping: LL halved, details shifted by 1/2
            TensorStack t = wavelet_forward(img);
            t.plane(0) /= 2.0;
            write_stack(t, 2, 1, 0.5);
        } else if (op == "iwt") {
            TensorStack t = unmosaic(img, 2, 2, 1, 0.5);
            t.plane(0) *= 2.0;
            save_image(wavelet_inverse(t), t_out);
        } else if (op == "ps") {
            const Index s = integer_scale();
            write_stack(pixel_shuffle_decompose(img, s), s, 1 << 30, 0.0);
        } else if (op == "ips") {
            const Index s = integer_scale();
            save_image(pixel_shuffle_compose(unmosaic(img, s, s), s), t_out);
        } else if (op == "copy") {
            const Index s = integer_scale();
            write_stack(copy_ch(img, s), s, 1 << 30, 0.0);
        } else if (op == "bu") {
            save_image(bicubic_resample(img, parse_ratio(scale_str), true), t_out);
        } else if (op == "down") {
            save_image(box_downsample(img, integer_scale()), t_out);
        } else if (op == "noise") {
            save_image(add_gaussian_noise(img, {sigma, seed, true}), t_out);
        } else {
            throw ConfigError("unknown --op '" + op + "'");
        }
    } else if (*dist) {
        save_distance_matrix(distance_matrix(load_cloud(in_path), parse_metric(metric), normalized), out);
    } else if (*ph) {
        const DistanceMatrix dm = load_distance_matrix(in_path);
        double cap = eps_max;
        if (!(cap > 0.0)) cap = dm.size() > 1 && dm.values.maxCoeff() > 0.0 ? dm.values.maxCoeff() : 1.0;
        if (homology != 0 && homology != 1) throw ConfigError("--homology must be 0 or 1");
        const PersistenceDiagram diag = homology == 0 ? h0_barcode(dm, cap) : rips_diagram(dm, cap, budget);
        write_barcode_csv(diag, out);
        std::cout << diag.bars.size() << " bars (" << diag.zero_length_bars << " zero-length dropped), eps_max "
                  << format_real(cap) << "\n";
    } else if (*betti) {
        PersistenceDiagram diag = read_barcode_csv(in_path);
        diag.eps_max = eps_max;
        write_betti_csv(betti_curve(diag, uniform_grid(eps_max, grid)), out);
    } else if (*report) {
        const ExperimentConfig cfg = report_flags.build(report).resolved();
        const ReportBundle b = run_experiment(cfg, load_experiment_images(cfg), outdir);
        std::cout << "n=" << b.summary.n_points << " eps_max=" << format_real(b.eps_max)
                  << " auc_beta0=" << format_real(b.summary.auc_beta0)
                  << " merge_eps_50=" << format_real(b.summary.merge_eps_50)
                  << " merge_eps_10=" << format_real(b.summary.merge_eps_10)
                  << " full_merge_eps=" << format_real(b.summary.full_merge_eps) << "\n"
                  << "wrote " << b.summary_json << "\n";
    } else if (*compare) {
        std::cout << compare_manifolds(load_report(summary_a), load_report(summary_b)).describe() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const mscope::Error& e) {
        std::cerr << "mscope: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::bad_alloc&) {
        std::cerr << "mscope: out of memory; lower --count or --eps-max\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "mscope: " << e.what() << "\n";
        return 1;
    }
}
