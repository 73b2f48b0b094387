#include "mscope/persistence.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

namespace mscope {

bool filtration_less(const Simplex& a, const Simplex& b)
{
    return std::tie(a.value, a.dim, a.vertices) < std::tie(b.value, b.dim, b.vertices);
}

Index Filtration::count(int dim) const
{
    return std::count_if(simplices.begin(), simplices.end(), [&](const Simplex& s) { return s.dim == dim; });
}

std::vector<Bar> PersistenceDiagram::bars_of(int dim) const
{
    std::vector<Bar> out;
    std::copy_if(bars.begin(), bars.end(), std::back_inserter(out), [&](const Bar& b) { return b.dim == dim; });
    return out;
}

std::vector<double> PersistenceDiagram::finite_deaths(int dim) const
{
    std::vector<double> out;
    for (const Bar& b : bars)
        if (b.dim == dim && !b.essential()) out.push_back(b.death);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

class DisjointSets {
public:
    explicit DisjointSets(Index n) : parent_(static_cast<std::size_t>(n)), rank_(static_cast<std::size_t>(n), 0)
    {
        std::iota(parent_.begin(), parent_.end(), 0u);
    }

    std::uint32_t find(std::uint32_t x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::uint32_t a, std::uint32_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint8_t> rank_;
};

struct Edge {
    double value;
    std::uint32_t i;
    std::uint32_t j;

    bool operator<(const Edge& o) const { return std::tie(value, i, j) < std::tie(o.value, o.i, o.j); }
};

void finalize(PersistenceDiagram& diag)
{
    const auto zero = std::remove_if(diag.bars.begin(), diag.bars.end(), [](const Bar& b) { return b.death == b.birth; });
    diag.zero_length_bars += static_cast<Index>(diag.bars.end() - zero);
    diag.bars.erase(zero, diag.bars.end());
    std::sort(diag.bars.begin(), diag.bars.end());
}

void check_cap(double eps_max)
{
    if (!(eps_max > 0.0)) throw ConfigError("eps_max must be positive");
}

}  // namespace

PersistenceDiagram h0_barcode(const DistanceMatrix& dm, double eps_max)
{
    check_cap(eps_max);
    const Index n = dm.size();
    PersistenceDiagram diag;
    diag.eps_max = eps_max;
    diag.n_points = n;

    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (dm(i, j) <= eps_max)
                edges.push_back({dm(i, j), static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
    std::sort(edges.begin(), edges.end());

    DisjointSets sets(n);
    Index merges = 0;
    for (const Edge& e : edges) {
        if (merges + 1 >= n) break;
        if (sets.unite(e.i, e.j)) {
            diag.bars.push_back({0, 0.0, e.value});
            ++merges;
        }
    }
    for (Index k = merges; k < n; ++k) diag.bars.push_back({0, 0.0, kInfinity});
    finalize(diag);
    return diag;
}

Filtration rips_filtration(const DistanceMatrix& dm, double eps_max, int max_dim, std::uint64_t budget)
{
    check_cap(eps_max);
    if (max_dim < 0 || max_dim > 2) throw ConfigError("rips_filtration: max_dim must be 0, 1 or 2");
    const Index n = dm.size();
    if (n > std::numeric_limits<std::uint32_t>::max()) throw CapacityError("too many points for a filtration");
    Filtration f;
    f.eps_max = eps_max;
    f.n_points = n;

    auto over_budget = [&](std::uint64_t count, const char* what) {
        throw CapacityError("Rips filtration would exceed the budget of " + std::to_string(budget) + " simplices: " +
                            std::to_string(count) + " " + what + " at eps_max " + format_real(eps_max) +
                            "; lower eps_max or the point count");
    };

    std::uint64_t total = static_cast<std::uint64_t>(n);
    if (total > budget) over_budget(total, "vertices");
    for (Index v = 0; v < n; ++v) f.simplices.push_back({{static_cast<std::uint32_t>(v), 0, 0}, 0, 0.0});
    if (max_dim == 0) return f;

    // Upper neighbourhoods: k > i with d(i,k) <= eps_max.
    std::vector<std::vector<std::uint32_t>> upper(static_cast<std::size_t>(n));
    std::vector<char> adjacent(static_cast<std::size_t>(n * n), 0);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (dm(i, j) <= eps_max) {
                upper[static_cast<std::size_t>(i)].push_back(static_cast<std::uint32_t>(j));
                adjacent[static_cast<std::size_t>(i * n + j)] = 1;
                if (++total > budget) over_budget(total, "vertices+edges (at least)");
                f.simplices.push_back({{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 0}, 1, dm(i, j)});
            }

    if (max_dim == 2) {
        for (Index i = 0; i < n; ++i) {
            const auto& ni = upper[static_cast<std::size_t>(i)];
            for (std::size_t a = 0; a < ni.size(); ++a) {
                const std::uint32_t j = ni[a];
                for (std::size_t b = a + 1; b < ni.size(); ++b) {
                    const std::uint32_t k = ni[b];
                    if (!adjacent[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + k]) continue;
                    if (++total > budget) over_budget(total, "simplices (at least)");
                    const double v = std::max({dm(i, j), dm(i, k), dm(j, k)});
                    f.simplices.push_back({{static_cast<std::uint32_t>(i), j, k}, 2, v});
                }
            }
        }
    }
    std::sort(f.simplices.begin(), f.simplices.end(), filtration_less);
    return f;
}

namespace {

using Column = std::vector<std::uint32_t>;

// a <- a xor b on sorted index lists
void add_column(Column& a, const Column& b, Column& scratch)
{
    scratch.clear();
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(scratch));
    a.swap(scratch);
}

}  // namespace

PersistenceDiagram reduce(const Filtration& f)
{
    const auto& s = f.simplices;
    const Index n = f.n_points;
    const std::size_t m = s.size();
    if (m > std::numeric_limits<std::uint32_t>::max()) throw CapacityError("filtration too large to reduce");

    PersistenceDiagram diag;
    diag.eps_max = f.eps_max;
    diag.n_points = n;

    std::vector<std::uint32_t> vertex_pos(static_cast<std::size_t>(n), 0);
    std::vector<std::uint32_t> edge_pos(static_cast<std::size_t>(n * n), std::numeric_limits<std::uint32_t>::max());
    for (std::size_t p = 0; p < m; ++p) {
        const auto& v = s[p].vertices;
        if (s[p].dim == 0) vertex_pos[v[0]] = static_cast<std::uint32_t>(p);
        if (s[p].dim == 1) edge_pos[static_cast<std::size_t>(v[0]) * static_cast<std::size_t>(n) + v[1]] = static_cast<std::uint32_t>(p);
    }
    auto edge_index = [&](std::uint32_t a, std::uint32_t b) {
        return edge_pos[static_cast<std::size_t>(a) * static_cast<std::size_t>(n) + b];
    };

    constexpr std::uint32_t none = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> pivot_owner(m, none);  // row -> column whose reduced low it is
    std::vector<Column> reduced(m);
    std::vector<char> cleared(m, 0);
    std::vector<char> paired_row(m, 0);
    Column col, scratch;

    auto reduce_column = [&]() {
        while (!col.empty()) {
            const std::uint32_t owner = pivot_owner[col.back()];
            if (owner == none) return;
            add_column(col, reduced[owner], scratch);
        }
    };

    // Triangles first: each nonzero reduced column pairs an edge with a
    // triangle (an H1 bar) and the paired edge column is known to reduce to
    // zero, so it is cleared.
    for (std::size_t p = 0; p < m; ++p) {
        if (s[p].dim != 2) continue;
        const auto& v = s[p].vertices;
        col = {edge_index(v[0], v[1]), edge_index(v[0], v[2]), edge_index(v[1], v[2])};
        std::sort(col.begin(), col.end());
        reduce_column();
        if (col.empty()) continue;
        const std::uint32_t low = col.back();
        pivot_owner[low] = static_cast<std::uint32_t>(p);
        reduced[p] = col;
        cleared[low] = 1;
        paired_row[low] = 1;
        diag.bars.push_back({1, s[low].value, s[p].value});
    }

    for (std::size_t p = 0; p < m; ++p) {
        if (s[p].dim != 1 || cleared[p]) continue;
        const auto& v = s[p].vertices;
        col = {vertex_pos[v[0]], vertex_pos[v[1]]};
        std::sort(col.begin(), col.end());
        reduce_column();
        if (col.empty()) {
            // positive edge that no triangle kills before eps_max
            diag.bars.push_back({1, s[p].value, kInfinity});
            continue;
        }
        const std::uint32_t low = col.back();
        pivot_owner[low] = static_cast<std::uint32_t>(p);
        reduced[p] = col;
        paired_row[low] = 1;
        diag.bars.push_back({0, s[low].value, s[p].value});
    }

    for (std::size_t p = 0; p < m; ++p)
        if (s[p].dim == 0 && !paired_row[p]) diag.bars.push_back({0, s[p].value, kInfinity});

    finalize(diag);
    return diag;
}

PersistenceDiagram brute_force_diagram(const DistanceMatrix& dm, double eps_max)
{
    check_cap(eps_max);
    const Index n = dm.size();
    if (n > 10) throw ConfigError("brute_force_diagram is limited to 10 points (got " + std::to_string(n) + ")");

    struct Cell {
        std::vector<Index> verts;
        double value;
    };
    std::vector<Cell> cells;
    for (Index i = 0; i < n; ++i) cells.push_back({{i}, 0.0});
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (dm(i, j) <= eps_max) cells.push_back({{i, j}, dm(i, j)});
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            for (Index k = j + 1; k < n; ++k) {
                const double v = std::max({dm(i, j), dm(i, k), dm(j, k)});
                if (v <= eps_max) cells.push_back({{i, j, k}, v});
            }
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.verts.size() != b.verts.size()) return a.verts.size() < b.verts.size();
        return a.verts < b.verts;
    });

    const std::size_t m = cells.size();
    std::vector<std::vector<std::uint8_t>> boundary(m, std::vector<std::uint8_t>(m, 0));
    for (std::size_t j = 0; j < m; ++j) {
        const auto& vj = cells[j].verts;
        if (vj.size() < 2) continue;
        for (std::size_t drop = 0; drop < vj.size(); ++drop) {
            std::vector<Index> face;
            for (std::size_t t = 0; t < vj.size(); ++t)
                if (t != drop) face.push_back(vj[t]);
            for (std::size_t i = 0; i < m; ++i)
                if (cells[i].verts == face) boundary[i][j] = 1;
        }
    }

    auto low = [&](std::size_t j) -> long {
        for (std::size_t i = m; i-- > 0;)
            if (boundary[i][j]) return static_cast<long>(i);
        return -1;
    };
    std::vector<long> lows(m, -1);
    for (std::size_t j = 0; j < m; ++j) {
        bool changed = true;
        while (changed) {
            changed = false;
            const long l = low(j);
            if (l < 0) break;
            for (std::size_t k = 0; k < j; ++k)
                if (lows[k] == l) {
                    for (std::size_t i = 0; i < m; ++i) boundary[i][j] ^= boundary[i][k];
                    changed = true;
                    break;
                }
        }
        lows[j] = low(j);
    }

    PersistenceDiagram diag;
    diag.eps_max = eps_max;
    diag.n_points = n;
    std::vector<char> is_low(m, 0);
    for (std::size_t j = 0; j < m; ++j)
        if (lows[j] >= 0) is_low[static_cast<std::size_t>(lows[j])] = 1;
    for (std::size_t j = 0; j < m; ++j) {
        const auto dim_of = [&](std::size_t c) { return static_cast<int>(cells[c].verts.size()) - 1; };
        if (lows[j] >= 0) {
            const auto b = static_cast<std::size_t>(lows[j]);
            if (dim_of(b) <= 1) diag.bars.push_back({dim_of(b), cells[b].value, cells[j].value});
        } else if (!is_low[j] && dim_of(j) <= 1) {
            diag.bars.push_back({dim_of(j), cells[j].value, kInfinity});
        }
    }
    finalize(diag);
    return diag;
}

PersistenceDiagram rips_diagram(const DistanceMatrix& dm, double eps_max, std::uint64_t budget)
{
    return reduce(rips_filtration(dm, eps_max, 2, budget));
}

double loop_ratio(const PersistenceDiagram& diag)
{
    double h1 = 0.0;
    double h0 = 0.0;
    for (const Bar& b : diag.bars) {
        if (b.dim == 1) h1 = std::max(h1, b.persistence());
        if (b.dim == 0 && !b.essential()) h0 = std::max(h0, b.death);
    }
    if (h1 == 0.0) return 0.0;
    return h0 > 0.0 ? h1 / h0 : kInfinity;
}

bool has_significant_loop(const PersistenceDiagram& diag, double threshold)
{
    return loop_ratio(diag) > threshold;
}

BettiCurve betti_curve(const PersistenceDiagram& diag, const std::vector<double>& grid)
{
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (k > 0 && grid[k] < grid[k - 1]) throw ConfigError("betti_curve: grid must be ascending");
        if (grid[k] < 0.0 || grid[k] > diag.eps_max)
            throw ConfigError("betti_curve: grid value " + format_real(grid[k]) + " outside [0, eps_max]");
    }
    BettiCurve curve;
    curve.grid = grid;
    curve.beta0.assign(grid.size(), 0);
    curve.beta1.assign(grid.size(), 0);
    for (const Bar& b : diag.bars) {
        auto& beta = b.dim == 0 ? curve.beta0 : curve.beta1;
        if (b.dim > 1) continue;
        for (std::size_t k = 0; k < grid.size(); ++k)
            if (b.birth <= grid[k] && grid[k] < b.death) ++beta[k];
    }
    return curve;
}

std::vector<double> uniform_grid(double eps_max, Index points)
{
    if (!(eps_max > 0.0) || !std::isfinite(eps_max)) throw ConfigError("grid needs a finite positive eps_max");
    if (points < 1) throw ConfigError("grid needs at least one point");
    std::vector<double> g(static_cast<std::size_t>(points));
    if (points == 1) return {0.0};
    for (Index k = 0; k < points; ++k)
        g[static_cast<std::size_t>(k)] = k + 1 == points ? eps_max : eps_max * static_cast<double>(k) / static_cast<double>(points - 1);
    return g;
}

std::string format_real(double v)
{
    if (v == kInfinity) return "inf";
    if (v == -kInfinity) return "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_barcode_csv(const PersistenceDiagram& diag, std::ostream& out)
{
    out << "dim,birth,death\n";
    for (const Bar& b : diag.bars) out << b.dim << ',' << format_real(b.birth) << ',' << format_real(b.death) << '\n';
}

void write_barcode_csv(const PersistenceDiagram& diag, const std::string& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_barcode_csv(diag, out);
    if (!out) throw IoError("write to '" + path + "' failed");
}

PersistenceDiagram read_barcode_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("dim,birth,death", 0) != 0)
        throw FormatError("'" + path + "': missing 'dim,birth,death' header");
    PersistenceDiagram diag;
    Index row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string dim, birth, death;
        if (!std::getline(ss, dim, ',') || !std::getline(ss, birth, ',') || !std::getline(ss, death))
            throw FormatError("'" + path + "' line " + std::to_string(row) + ": expected three fields");
        try {
            Bar b;
            b.dim = std::stoi(dim);
            b.birth = std::stod(birth);
            b.death = (death == "inf") ? kInfinity : std::stod(death);
            diag.bars.push_back(b);
        } catch (const std::exception&) {
            throw FormatError("'" + path + "' line " + std::to_string(row) + ": malformed number");
        }
    }
    std::sort(diag.bars.begin(), diag.bars.end());
    diag.n_points = static_cast<Index>(std::count_if(diag.bars.begin(), diag.bars.end(), [](const Bar& b) { return b.dim == 0; }));
    return diag;
}

void write_betti_csv(const BettiCurve& curve, std::ostream& out)
{
    out << "epsilon,beta0,beta1\n";
    for (std::size_t k = 0; k < curve.grid.size(); ++k)
        out << format_real(curve.grid[k]) << ',' << curve.beta0[k] << ',' << curve.beta1[k] << '\n';
}

void write_betti_csv(const BettiCurve& curve, const std::string& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_betti_csv(curve, out);
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace mscope
