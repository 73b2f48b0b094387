#ifndef MSCOPE_PERSISTENCE_HPP
#define MSCOPE_PERSISTENCE_HPP

#include "mscope/cloud.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace mscope {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Vertex, edge or triangle of a Rips complex. Unused vertex slots are zero.
struct Simplex {
    std::array<std::uint32_t, 3> vertices{};
    std::uint8_t dim = 0;
    double value = 0.0;

    bool operator==(const Simplex&) const = default;
};

/// Filtration order: value, then dimension, then lexicographic vertices.
bool filtration_less(const Simplex& a, const Simplex& b);

/// Rips filtration up to triangles, sorted by filtration_less.
struct Filtration {
    std::vector<Simplex> simplices;
    double eps_max = kInfinity;
    Index n_points = 0;

    Index count(int dim) const;
};

struct Bar {
    int dim = 0;
    double birth = 0.0;
    double death = kInfinity;

    double persistence() const { return death - birth; }
    bool essential() const { return death == kInfinity; }

    auto operator<=>(const Bar&) const = default;
};

struct PersistenceDiagram {
    std::vector<Bar> bars;  ///< sorted by (dim, birth, death); zero-length bars removed
    double eps_max = kInfinity;
    Index n_points = 0;
    Index zero_length_bars = 0;  ///< birth == death pairs that were dropped

    std::vector<Bar> bars_of(int dim) const;
    /// Finite deaths of one dimension, ascending.
    std::vector<double> finite_deaths(int dim) const;

    bool operator==(const PersistenceDiagram&) const = default;
};

/// Default cap on filtration size.
inline constexpr std::uint64_t kDefaultSimplexBudget = 50'000'000;

/// H0 barcode by Kruskal/union-find over edges sorted by (value, i, j).
/// Finite deaths are the minimum spanning tree weights; deaths above eps_max
/// are censored to +inf.
PersistenceDiagram h0_barcode(const DistanceMatrix& dm, double eps_max = kInfinity);

/// Vertices, edges with value <= eps_max and (for max_dim == 2) triangles
/// whose longest edge is <= eps_max. Throws CapacityError when the total
/// exceeds `budget`.
Filtration rips_filtration(const DistanceMatrix& dm, double eps_max, int max_dim = 2,
                           std::uint64_t budget = kDefaultSimplexBudget);

/// Z/2 boundary-matrix reduction with clearing: triangle columns are reduced
/// first and every edge they pair with is skipped in the edge pass.
/// Produces H0 and H1 bars; classes alive at eps_max are reported as +inf.
PersistenceDiagram reduce(const Filtration& f);

/// Dense, unoptimised left-to-right reduction of the full boundary matrix.
/// Reference oracle for reduce(); limited to n <= 10.
PersistenceDiagram brute_force_diagram(const DistanceMatrix& dm, double eps_max);

/// Convenience: rips_filtration + reduce.
PersistenceDiagram rips_diagram(const DistanceMatrix& dm, double eps_max, std::uint64_t budget = kDefaultSimplexBudget);

/// Default cut for has_significant_loop.
inline constexpr double kLoopThreshold = 0.25;

/// Largest H1 persistence over the largest finite H0 death; 0 without H1 bars.
double loop_ratio(const PersistenceDiagram& diag);

/// True when some H1 bar persists longer than threshold * (largest finite H0 death).
bool has_significant_loop(const PersistenceDiagram& diag, double threshold = kLoopThreshold);

struct BettiCurve {
    std::vector<double> grid;
    std::vector<Index> beta0;
    std::vector<Index> beta1;
};

/// beta_m(eps) = #{bars of dim m : birth <= eps < death}. The grid must be
/// ascending and inside [0, eps_max].
BettiCurve betti_curve(const PersistenceDiagram& diag, const std::vector<double>& grid);

/// `points` values evenly spaced over [0, eps_max].
std::vector<double> uniform_grid(double eps_max, Index points);

/// Barcode CSV: "dim,birth,death", 17 significant digits, "inf" for essential bars.
void write_barcode_csv(const PersistenceDiagram& diag, std::ostream& out);
void write_barcode_csv(const PersistenceDiagram& diag, const std::string& path);
/// Reads bars back; eps_max and n_points are not part of the format.
PersistenceDiagram read_barcode_csv(const std::string& path);

/// Betti CSV: "epsilon,beta0,beta1".
void write_betti_csv(const BettiCurve& curve, std::ostream& out);
void write_betti_csv(const BettiCurve& curve, const std::string& path);

/// "%.17g" rendering with "inf" for +infinity, as used by the CSV writers.
std::string format_real(double v);

}  // namespace mscope

#endif  // MSCOPE_PERSISTENCE_HPP
