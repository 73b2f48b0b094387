#include "mscope/persistence.hpp"
#include "mscope/pipeline.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

using namespace mscope;
namespace fs = std::filesystem;

namespace {

DistanceMatrix from_points(const RowMatrixXd& p)
{
    return distance_matrix(PatchCloud(p), Metric::L2);
}

DistanceMatrix collinear_013()
{
    RowMatrixXd p(3, 2);
    p << 0, 0, 1, 0, 3, 0;
    return from_points(p);
}

DistanceMatrix unit_square()
{
    RowMatrixXd p(4, 2);
    p << 0, 0, 1, 0, 1, 1, 0, 1;
    return from_points(p);
}

DistanceMatrix permuted(const DistanceMatrix& dm, const std::vector<Index>& perm)
{
    DistanceMatrix out = dm;
    for (Index i = 0; i < dm.size(); ++i)
        for (Index j = 0; j < dm.size(); ++j)
            out.values(i, j) = dm(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    return out;
}

}  // namespace

TEST_CASE("h0 on three collinear points")
{
    const PersistenceDiagram d = h0_barcode(collinear_013());
    CHECK(d.finite_deaths(0) == std::vector<double>{1.0, 2.0});
    CHECK(d.bars.size() == 3);
    CHECK(std::count_if(d.bars.begin(), d.bars.end(), [](const Bar& b) { return b.essential(); }) == 1);
    for (const Bar& b : d.bars) CHECK(b.birth == 0.0);
}

TEST_CASE("h0 censors deaths above eps_max")
{
    RowMatrixXd p(4, 1);
    p << 0, 10, 20, 30;
    const DistanceMatrix dm = from_points(p);
    const PersistenceDiagram d = h0_barcode(dm, 5.0);
    CHECK(d.finite_deaths(0).empty());
    CHECK(d.bars_of(0).size() == 4);
    const BettiCurve bc = betti_curve(d, {0.0, 2.5, 5.0});
    for (Index b : bc.beta0) CHECK(b == 4);
}

TEST_CASE("h0 deaths are MST weights")
{
    for (std::uint64_t s = 0; s < 10; ++s) {
        const DistanceMatrix dm = from_points(oracle::random_points(200, 3, 300 + s));
        const auto deaths = h0_barcode(dm).finite_deaths(0);
        const auto mst = oracle::prim_mst_weights(dm.values);
        REQUIRE(deaths.size() == mst.size());
        for (std::size_t k = 0; k < mst.size(); ++k) CHECK(std::abs(deaths[k] - mst[k]) <= 1e-12);
    }
}

TEST_CASE("filtration counts")
{
    const Filtration tri = rips_filtration(collinear_013(), 3.0);
    CHECK(tri.count(0) == 3);
    CHECK(tri.count(1) == 3);
    CHECK(tri.count(2) == 1);

    const Filtration low = rips_filtration(collinear_013(), 0.5);
    CHECK(low.count(0) == 3);
    CHECK(low.count(1) == 0);
    CHECK(low.count(2) == 0);

    const Filtration sq = rips_filtration(unit_square(), 1.5);
    CHECK(sq.count(0) == 4);
    CHECK(sq.count(1) == 6);
    CHECK(sq.count(2) == 4);
    Index at_one = 0, at_diag = 0;
    for (const Simplex& s : sq.simplices) {
        if (s.dim == 1 && s.value == 1.0) ++at_one;
        if (s.dim == 1 && s.value == std::sqrt(2.0)) ++at_diag;
        if (s.dim == 2) CHECK(s.value == std::sqrt(2.0));
    }
    CHECK(at_one == 4);
    CHECK(at_diag == 2);
    CHECK(std::is_sorted(sq.simplices.begin(), sq.simplices.end(), filtration_less));

    CHECK_THROWS_AS(rips_filtration(unit_square(), 0.0), ConfigError);
}

TEST_CASE("filtration order puts faces first at equal value")
{
    const Filtration f = rips_filtration(unit_square(), 2.0);
    for (std::size_t k = 1; k < f.simplices.size(); ++k) {
        const Simplex& a = f.simplices[k - 1];
        const Simplex& b = f.simplices[k];
        CHECK((a.value < b.value || (a.value == b.value && a.dim <= b.dim)));
    }
}

TEST_CASE("capacity error names the count")
{
    const DistanceMatrix dm = from_points(oracle::random_points(30, 2, 5));
    try {
        rips_filtration(dm, 10.0, 2, 1000);
        FAIL("expected a capacity error");
    } catch (const CapacityError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("budget of 1000") != std::string::npos);
        CHECK(msg.find("eps_max") != std::string::npos);
    }
}

TEST_CASE("unit square has one H1 bar [1, sqrt 2)")
{
    const PersistenceDiagram d = rips_diagram(unit_square(), 1.5);
    const auto h1 = d.bars_of(1);
    REQUIRE(h1.size() == 1);
    CHECK(h1[0].birth == 1.0);
    CHECK(h1[0].death == std::sqrt(2.0));
    CHECK(brute_force_diagram(unit_square(), 1.5) == d);
}

TEST_CASE("loop ratio and threshold")
{
    const PersistenceDiagram d = rips_diagram(unit_square(), 1.5);
    CHECK(loop_ratio(d) == doctest::Approx(std::sqrt(2.0) - 1.0));
    CHECK(has_significant_loop(d));
    CHECK_FALSE(has_significant_loop(d, 0.5));
    CHECK(loop_ratio(h0_barcode(unit_square())) == 0.0);
}

TEST_CASE("H1 loop alive at eps_max is essential")
{
    const PersistenceDiagram d = rips_diagram(unit_square(), 1.2);
    const auto h1 = d.bars_of(1);
    REQUIRE(h1.size() == 1);
    CHECK(h1[0].essential());
    CHECK(brute_force_diagram(unit_square(), 1.2) == d);
}

TEST_CASE("reduce agrees with h0_barcode on H0")
{
    const DistanceMatrix dm = from_points(oracle::random_points(40, 2, 77));
    const PersistenceDiagram full = rips_diagram(dm, 0.6);
    const PersistenceDiagram h0 = h0_barcode(dm, 0.6);
    CHECK(full.bars_of(0) == h0.bars_of(0));
    CHECK(static_cast<Index>(full.bars_of(0).size()) == 40);
}

TEST_CASE("brute force examples")
{
    RowMatrixXd one(1, 2);
    one << 0.5, 0.5;
    const PersistenceDiagram d1 = brute_force_diagram(from_points(one), 1.0);
    REQUIRE(d1.bars.size() == 1);
    CHECK(d1.bars[0] == Bar{0, 0.0, kInfinity});

    RowMatrixXd two(2, 1);
    two << 0, 1;
    const PersistenceDiagram d2v = brute_force_diagram(from_points(two), 2.0);
    CHECK(d2v.finite_deaths(0) == std::vector<double>{1.0});
    CHECK(d2v.bars_of(0).size() == 2);
    CHECK(d2v.bars_of(1).empty());

    CHECK_THROWS_AS(brute_force_diagram(from_points(oracle::random_points(11, 2, 1)), 1.0), ConfigError);
}

TEST_CASE("reduce equals brute force on small random clouds")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const Index n = 1 + static_cast<Index>(rng() % 8);
        const Index dim = 1 + static_cast<Index>(rng() % 3);
        const DistanceMatrix dm = from_points(oracle::random_points(n, dim, rng()));
        const double eps = 0.2 + 3.0 * static_cast<double>(rng() % 1000) / 1000.0;
        CHECK(rips_diagram(dm, eps) == brute_force_diagram(dm, eps));
    }
}

TEST_CASE("reduce equals brute force with tied distances")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = 3 + static_cast<Index>(rng() % 6);
        RowMatrixXd p(n, 2);
        for (Index i = 0; i < p.size(); ++i) p.data()[i] = static_cast<double>(rng() % 4);
        const DistanceMatrix dm = from_points(p);
        CHECK(rips_diagram(dm, 3.5) == brute_force_diagram(dm, 3.5));
    }
}

TEST_CASE("diagram invariant under relabelling")
{
    const DistanceMatrix dm = from_points(oracle::random_points(30, 2, 8));
    std::vector<Index> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
    const PersistenceDiagram a = rips_diagram(dm, 0.8);
    const PersistenceDiagram b = rips_diagram(permuted(dm, perm), 0.8);
    CHECK(a.bars == b.bars);
}

TEST_CASE("scaling distances by a power of two scales bars exactly")
{
    const DistanceMatrix dm = from_points(oracle::random_points(25, 2, 9));
    DistanceMatrix scaled = dm;
    scaled.values *= 4.0;
    const PersistenceDiagram a = rips_diagram(dm, 0.9);
    const PersistenceDiagram b = rips_diagram(scaled, 3.6);
    REQUIRE(a.bars.size() == b.bars.size());
    for (std::size_t k = 0; k < a.bars.size(); ++k) {
        CHECK(b.bars[k].birth == 4.0 * a.bars[k].birth);
        CHECK(b.bars[k].death == 4.0 * a.bars[k].death);
    }

    DistanceMatrix odd = dm;
    odd.values *= 1.7;
    const PersistenceDiagram c = rips_diagram(odd, 0.9 * 1.7);
    REQUIRE(c.bars.size() == a.bars.size());
    for (std::size_t k = 0; k < a.bars.size(); ++k) CHECK(c.bars[k].death == 1.7 * a.bars[k].death);
}

TEST_CASE("count check and H1 births")
{
    const DistanceMatrix dm = from_points(oracle::random_points(35, 2, 10));
    const PersistenceDiagram d = rips_diagram(dm, 0.7);
    CHECK(static_cast<Index>(d.bars_of(0).size()) == 35);
    const auto mst = h0_barcode(dm, 0.7).finite_deaths(0);
    for (const Bar& b : d.bars_of(1)) {
        CHECK(b.birth > 0.0);
        CHECK(b.death > b.birth);
    }
    CHECK_FALSE(mst.empty());
}

TEST_CASE("circle has a beta0 = beta1 = 1 interval")
{
    const PatchCloud c = synth_cloud(SynthShape::Circle, 100, 0.0, 5);
    for (Index i = 0; i < c.size(); ++i) CHECK(std::abs(c.points.row(i).norm() - 1.0) < 1e-12);
    const DistanceMatrix dm = distance_matrix(c, Metric::L2);
    const PersistenceDiagram d = rips_diagram(dm, 2.0);
    const auto h1 = d.bars_of(1);
    REQUIRE_FALSE(h1.empty());
    const Bar loop = *std::max_element(h1.begin(), h1.end(), [](const Bar& a, const Bar& b) {
        return a.persistence() < b.persistence();
    });
    const double full = h0_barcode(dm).finite_deaths(0).back();
    CHECK(full < loop.death);
    const BettiCurve bc = betti_curve(d, {0.5 * (std::max(full, loop.birth) + loop.death)});
    CHECK(bc.beta0[0] == 1);
    CHECK(bc.beta1[0] == 1);
}

TEST_CASE("two separated blobs have a beta0 = 2 plateau")
{
    const PatchCloud c = synth_cloud(SynthShape::TwoBlobs, 200, 0.0, 6);
    const PersistenceDiagram d = h0_barcode(distance_matrix(c, Metric::L2));
    const auto deaths = d.finite_deaths(0);
    REQUIRE(deaths.size() == 199);
    CHECK(deaths.back() > 3.0 * deaths[197]);
}

TEST_CASE("sphere has no dominant loop")
{
    // Noise loops on a sampled sphere are as long as the largest H0 death,
    // so the check is that no single H1 bar stands out the way a circle's does.
    for (std::uint64_t seed : {7, 8, 9}) {
        const PatchCloud c = synth_cloud(SynthShape::Sphere, 200, 0.0, seed);
        const DistanceMatrix dm = distance_matrix(c, Metric::L2);
        const PersistenceDiagram d = rips_diagram(dm, 1.0);
        std::vector<double> pers;
        for (const Bar& b : d.bars_of(1)) pers.push_back(b.persistence());
        REQUIRE(pers.size() >= 2);
        std::sort(pers.rbegin(), pers.rend());
        CHECK(std::isfinite(pers[0]));
        CHECK(pers[0] <= 3.0 * pers[1]);
    }
}

TEST_CASE("betti curve examples and errors")
{
    const BettiCurve empty = betti_curve(PersistenceDiagram{}, {0.0, 1.0, 2.0});
    for (Index i = 0; i < 3; ++i) {
        CHECK(empty.beta0[static_cast<std::size_t>(i)] == 0);
        CHECK(empty.beta1[static_cast<std::size_t>(i)] == 0);
    }
    PersistenceDiagram one;
    one.bars.push_back({0, 0.0, kInfinity});
    for (Index b : betti_curve(one, uniform_grid(5.0, 11)).beta0) CHECK(b == 1);

    const PersistenceDiagram col = h0_barcode(collinear_013(), 3.0);
    CHECK(betti_curve(col, {1.5}).beta0[0] == 2);
    CHECK(betti_curve(col, {0.0}).beta0[0] == 3);

    CHECK_THROWS_AS(betti_curve(col, {1.0, 0.5}), ConfigError);
    CHECK_THROWS_AS(betti_curve(col, {4.0}), ConfigError);
}

TEST_CASE("beta0 is non-increasing")
{
    const DistanceMatrix dm = from_points(oracle::random_points(60, 3, 11));
    const PersistenceDiagram d = h0_barcode(dm, 2.0);
    const BettiCurve bc = betti_curve(d, uniform_grid(2.0, 101));
    CHECK(bc.beta0.front() == 60);
    CHECK(std::is_sorted(bc.beta0.rbegin(), bc.beta0.rend()));
}

TEST_CASE("uniform grid")
{
    const auto g = uniform_grid(2.0, 5);
    CHECK(g == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    CHECK_THROWS_AS(uniform_grid(kInfinity, 5), ConfigError);
}

TEST_CASE("barcode csv round trip")
{
    const DistanceMatrix dm = from_points(oracle::random_points(20, 2, 12));
    const PersistenceDiagram d = rips_diagram(dm, 0.9);
    const fs::path dir = fs::temp_directory_path() / "mscope_test_persistence";
    fs::create_directories(dir);
    const std::string path = (dir / "bars.csv").string();
    write_barcode_csv(d, path);
    const PersistenceDiagram back = read_barcode_csv(path);
    CHECK(back.bars == d.bars);

    std::ostringstream os;
    write_barcode_csv(h0_barcode(collinear_013()), os);
    CHECK(os.str() == "dim,birth,death\n0,0,1\n0,0,2\n0,0,inf\n");

    std::ostringstream bs;
    write_betti_csv(betti_curve(h0_barcode(collinear_013(), 3.0), {0.0, 1.5}), bs);
    CHECK(bs.str() == "epsilon,beta0,beta1\n0,3,0\n1.5,2,0\n");

    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK(format_real(kInfinity) == "inf");
}
