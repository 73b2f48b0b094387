#include "mscope/cloud.hpp"

#include "binary_io.hpp"

#include <algorithm>
#include <random>
#include <thread>

namespace mscope {

std::vector<Window> sample_windows(std::span<const Extent> sources, Index patch, Index count, std::uint64_t seed,
                                   bool aligned)
{
    if (patch < 1) throw ConfigError("patch size must be >= 1");
    if (count < 0) throw ConfigError("patch count must be >= 0");
    std::vector<std::uint64_t> cumulative;
    std::uint64_t total = 0;
    for (const Extent& e : sources) {
        const Index ny = e.rows - patch + 1;
        const Index nx = e.cols - patch + 1;
        if (ny > 0 && nx > 0)
            total += static_cast<std::uint64_t>(ny) * static_cast<std::uint64_t>(nx) *
                     static_cast<std::uint64_t>(aligned ? 1 : e.channels);
        cumulative.push_back(total);
    }
    std::vector<Window> out;
    if (count == 0) return out;
    if (total == 0) throw DimensionError("patch size " + std::to_string(patch) + " exceeds every source extent");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
    out.reserve(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k) {
        const std::uint64_t u = pick(rng);
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const auto s = static_cast<std::size_t>(it - cumulative.begin());
        std::uint64_t local = u - (s == 0 ? 0 : cumulative[s - 1]);
        const auto nx = static_cast<std::uint64_t>(sources[s].cols - patch + 1);
        const auto ny = static_cast<std::uint64_t>(sources[s].rows - patch + 1);
        Window w;
        w.source = static_cast<Index>(s);
        w.x = static_cast<Index>(local % nx);
        local /= nx;
        w.y = static_cast<Index>(local % ny);
        local /= ny;
        w.channel = aligned ? -1 : static_cast<Index>(local);
        out.push_back(w);
    }
    return out;
}

std::vector<Window> scale_windows(std::vector<Window> windows, Index factor)
{
    for (Window& w : windows) {
        w.y *= factor;
        w.x *= factor;
    }
    return windows;
}

PatchCloud gather_patches(std::span<const TensorStack> sources, std::span<const Window> windows, Index patch,
                          std::string provenance)
{
    if (windows.empty()) return PatchCloud(RowMatrixXd(0, 0), std::move(provenance));
    const bool aligned = windows.front().channel < 0;
    const Index channels = aligned ? sources[static_cast<std::size_t>(windows.front().source)].channels() : 1;
    const Index d = patch * patch * channels;
    RowMatrixXd pts(static_cast<Index>(windows.size()), d);
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const Window& w = windows[k];
        if (w.source < 0 || static_cast<std::size_t>(w.source) >= sources.size())
            throw ConfigError("window refers to a missing source");
        const TensorStack& src = sources[static_cast<std::size_t>(w.source)];
        if ((w.channel < 0) != aligned) throw ConfigError("cannot mix aligned and single-channel windows");
        if (aligned && src.channels() != channels) throw DimensionError("sources differ in channel count");
        if (w.y < 0 || w.x < 0 || w.y + patch > src.rows() || w.x + patch > src.cols())
            throw DimensionError("patch window falls outside its source");
        const Index first = aligned ? 0 : w.channel;
        const Index last = aligned ? channels : w.channel + 1;
        Index col = 0;
        for (Index c = first; c < last; ++c) {
            const auto block = src.plane(c).block(w.y, w.x, patch, patch);
            for (Index r = 0; r < patch; ++r) {
                pts.row(static_cast<Index>(k)).segment(col, patch) = block.row(r);
                col += patch;
            }
        }
    }
    return PatchCloud(std::move(pts), std::move(provenance));
}

PatchCloud extract_patches(const TensorStack& src, Index patch, Index count, std::uint64_t seed, bool aligned_subbands)
{
    if (patch > src.rows() || patch > src.cols())
        throw DimensionError("patch size " + std::to_string(patch) + " exceeds source extent " +
                             std::to_string(src.rows()) + "x" + std::to_string(src.cols()));
    const Extent e{src.rows(), src.cols(), src.channels()};
    const auto windows = sample_windows(std::span<const Extent>(&e, 1), patch, count, seed, aligned_subbands);
    return gather_patches(std::span<const TensorStack>(&src, 1), windows, patch,
                          "patches " + std::to_string(patch) + "x" + std::to_string(patch) + " count " +
                              std::to_string(count) + " seed " + std::to_string(seed) +
                              (aligned_subbands ? " aligned" : " single-channel"));
}

double dcorr(const CentredPoint& x, const CentredPoint& y)
{
    if (x.centred.size() != y.centred.size()) throw DimensionError("dcorr: dimension mismatch");
    if (x.constant() || y.constant()) return 1.0;
    ExactAccumulator acc;
    for (Index i = 0; i < x.centred.size(); ++i) acc.add(x.centred[i] * y.centred[i]);
    const double corr = std::clamp(acc.result() / std::sqrt(x.sum_squares * y.sum_squares), -1.0, 1.0);
    return std::sqrt(1.0 - corr);
}

std::string to_string(Metric m)
{
    return m == Metric::L2 ? "L2" : "CORR";
}

Metric parse_metric(const std::string& s)
{
    std::string u = s;
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
    if (u == "L2" || u == "D2") return Metric::L2;
    if (u == "CORR" || u == "DCORR") return Metric::Corr;
    throw ConfigError("unknown metric '" + s + "' (expected L2 or CORR)");
}

namespace {

template <typename PairFn>
void fill_upper(RowMatrixXd& out, unsigned threads, PairFn&& pair)
{
    const Index n = out.rows();
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<Index>(n, 1))));
    // Rows are dealt round-robin: row i costs n - i pairs.
    auto work = [&](unsigned w) {
        for (Index i = w; i < n; i += workers)
            for (Index j = i + 1; j < n; ++j) out(i, j) = pair(i, j);
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }
    for (Index i = 0; i < n; ++i) {
        out(i, i) = 0.0;
        for (Index j = i + 1; j < n; ++j) out(j, i) = out(i, j);
    }
}

}  // namespace

DistanceMatrix distance_matrix(const PatchCloud& cloud, Metric metric, bool normalized, unsigned threads)
{
    if (normalized && metric != Metric::L2) throw ConfigError("normalisation is only defined for the L2 metric");
    if (threads == 0) threads = default_thread_count();
    const Index n = cloud.size();
    DistanceMatrix dm;
    dm.metric = metric;
    dm.normalized = normalized;
    dm.values = RowMatrixXd::Zero(n, n);
    const auto& pts = cloud.points;
    if (metric == Metric::L2) {
        fill_upper(dm.values, threads, [&](Index i, Index j) { return d2(pts.row(i), pts.row(j), normalized); });
    } else {
        if (n > 0 && cloud.dim() < 2) throw DimensionError("CORR metric needs d >= 2");
        std::vector<CentredPoint> centred;
        centred.reserve(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            centred.push_back(centre(pts.row(i)));
            if (centred.back().constant()) ++dm.constant_points;
        }
        fill_upper(dm.values, threads, [&](Index i, Index j) {
            return dcorr(centred[static_cast<std::size_t>(i)], centred[static_cast<std::size_t>(j)]);
        });
    }
    return dm;
}

void save_distance_matrix(const DistanceMatrix& dm, const std::string& path)
{
    detail::LeWriter w(path);
    w.bytes("DMAT");
    w.put<std::uint32_t>(1);
    w.put<std::uint64_t>(static_cast<std::uint64_t>(dm.size()));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(dm.metric));
    w.put<std::uint8_t>(dm.normalized ? 1 : 0);
    for (Index i = 0; i < dm.size(); ++i)
        for (Index j = i + 1; j < dm.size(); ++j) w.put<double>(dm.values(i, j));
    w.finish();
}

DistanceMatrix load_distance_matrix(const std::string& path)
{
    detail::LeReader r(path);
    if (r.file_size() < 4 || r.bytes(4) != "DMAT") throw FormatError("'" + path + "': bad magic, expected DMAT");
    const auto version = r.get<std::uint32_t>();
    if (version != 1) throw FormatError("'" + path + "': unsupported DMAT version " + std::to_string(version));
    const auto n = r.get<std::uint64_t>();
    const auto tag = r.get<std::uint8_t>();
    const auto norm = r.get<std::uint8_t>();
    if (tag > 1) throw FormatError("'" + path + "': unknown metric tag " + std::to_string(tag));
    if (n > (1ULL << 32)) throw FormatError("'" + path + "': implausible size");
    const std::uint64_t entries = n * (n - (n > 0 ? 1 : 0)) / 2;
    if (r.remaining() != entries * 8) throw FormatError("'" + path + "': payload size does not match header");
    DistanceMatrix dm;
    dm.metric = static_cast<Metric>(tag);
    dm.normalized = norm != 0;
    dm.values = RowMatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(n));
    for (Index i = 0; i < dm.size(); ++i)
        for (Index j = i + 1; j < dm.size(); ++j) dm.values(i, j) = dm.values(j, i) = r.get<double>();
    return dm;
}

}  // namespace mscope
