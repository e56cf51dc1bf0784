#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "stride/lisa.hpp"
#include "stride/rng.hpp"

using namespace stride;

namespace {

GridSpec make_spec(int rows, int cols) {
    GridSpec s;
    s.rows = rows;
    s.cols = cols;
    s.size_m = 200.0;
    return s;
}

std::vector<std::vector<double>> dense_w(const SpatialWeights& w) {
    size_t n = w.cell_ids.size();
    std::vector<std::vector<double>> W(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t k = 0; k < w.neighbors[i].size(); ++k)
            W[i][w.neighbors[i][k]] = w.weights[i][k];
    return W;
}

}  // namespace

TEST_CASE("build_weights queen and rook counts") {
    GridSpec spec = make_spec(5, 5);
    std::vector<uint8_t> all(spec.n_cells(), 1);

    SpatialWeights queen = build_weights(spec, all, WeightScheme::queen);
    // interior cell (2,2) has 8 neighbors at 1/8
    int interior = spec.cell_id(2, 2);
    int local = -1;
    for (size_t i = 0; i < queen.cell_ids.size(); ++i)
        if (queen.cell_ids[i] == interior) local = static_cast<int>(i);
    REQUIRE(local >= 0);
    CHECK(queen.neighbors[local].size() == 8);
    for (double w : queen.weights[local]) CHECK(w == doctest::Approx(1.0 / 8.0));
    // corner (0,0) has 3 at 1/3
    CHECK(queen.neighbors[0].size() == 3);
    for (double w : queen.weights[0]) CHECK(w == doctest::Approx(1.0 / 3.0));

    // 3x3 rook: total directed links = 24
    GridSpec spec3 = make_spec(3, 3);
    std::vector<uint8_t> all3(9, 1);
    SpatialWeights rook = build_weights(spec3, all3, WeightScheme::rook);
    size_t links = 0;
    for (const auto& nb : rook.neighbors) links += nb.size();
    CHECK(links == 24);

    // row sums are 0 or 1
    for (size_t i = 0; i < queen.cell_ids.size(); ++i) {
        double sum = std::accumulate(queen.weights[i].begin(), queen.weights[i].end(), 0.0);
        CHECK((sum == 0.0 || sum == doctest::Approx(1.0).epsilon(1e-12)));
    }
}

TEST_CASE("excluded cells do not participate; isolated cells are flagged") {
    GridSpec spec = make_spec(3, 3);
    std::vector<uint8_t> inc(9, 0);
    inc[spec.cell_id(0, 0)] = 1;
    inc[spec.cell_id(2, 2)] = 1;  // not adjacent to (0,0)
    SpatialWeights w = build_weights(spec, inc, WeightScheme::queen);
    CHECK(w.cell_ids.size() == 2);
    CHECK(w.isolated.size() == 2);

    CHECK_THROWS_AS(build_weights(GridSpec{}, {}, WeightScheme::queen), ConfigError);
}

TEST_CASE("constant supply collapses every I to zero with a warning") {
    GridSpec spec = make_spec(4, 4);
    std::vector<uint8_t> all(16, 1);
    SpatialWeights w = build_weights(spec, all, WeightScheme::queen);
    SplitMix64 rng(3);
    std::vector<double> x(16), y(16, 2.5);
    for (auto& v : x) v = rng.normal();
    LisaResult r = bivariate_lisa(x, y, w, 99, 7, 0.05);
    REQUIRE(!r.warnings.empty());
    for (size_t i = 0; i < 16; ++i) {
        CHECK(r.I[i] == 0.0);
        CHECK(r.cluster[i] == LisaCluster::NS);
    }
}

TEST_CASE("identical smooth fields produce only HH/LL significant cells") {
    GridSpec spec = make_spec(10, 10);
    std::vector<uint8_t> all(100, 1);
    SpatialWeights w = build_weights(spec, all, WeightScheme::queen);
    SplitMix64 rng(5);
    std::vector<double> v(100);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c)
            v[spec.cell_id(r, c)] = r + c + 0.01 * rng.normal();
    LisaResult res = bivariate_lisa(v, v, w, 199, 11, 0.05);
    size_t significant = 0;
    for (auto cl : res.cluster) {
        if (cl == LisaCluster::NS) continue;
        ++significant;
        CHECK((cl == LisaCluster::HH || cl == LisaCluster::LL));
    }
    CHECK(significant > 0);
}

TEST_CASE("local Moran matches the dense-matrix oracle, mean equals global") {
    SplitMix64 rng(2025);
    for (int trial = 0; trial < 5; ++trial) {
        GridSpec spec = make_spec(10, 10);
        std::vector<uint8_t> all(100, 1);
        SpatialWeights w = build_weights(spec, all, WeightScheme::queen);
        std::vector<double> x(100), y(100);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.uniform(0.0, 10.0);

        LisaResult r = bivariate_lisa(x, y, w, 99, 13, 0.05);
        auto oracle_i = oracle::dense_lisa(x, y, dense_w(w));
        for (size_t i = 0; i < 100; ++i)
            CHECK(r.I[i] == doctest::Approx(oracle_i[i]).epsilon(1e-9));

        double mean = std::accumulate(oracle_i.begin(), oracle_i.end(), 0.0) / 100.0;
        CHECK(r.global_moran == doctest::Approx(mean).epsilon(1e-9));
    }
}

TEST_CASE("seeded permutation p-values are bit-reproducible") {
    GridSpec spec = make_spec(8, 8);
    std::vector<uint8_t> all(64, 1);
    SpatialWeights w = build_weights(spec, all, WeightScheme::queen);
    SplitMix64 rng(77);
    std::vector<double> x(64), y(64);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    LisaResult a = bivariate_lisa(x, y, w, 499, 999, 0.05);
    LisaResult b = bivariate_lisa(x, y, w, 499, 999, 0.05);
    CHECK(a.pseudo_p == b.pseudo_p);
    CHECK(a.I == b.I);
    for (size_t i = 0; i < 64; ++i) CHECK(a.cluster[i] == b.cluster[i]);
    // pseudo p floor is 1/(perm+1)
    for (double p : a.pseudo_p) CHECK(p >= 1.0 / 500.0);
}

TEST_CASE("swapping x and y changes the statistic (bivariate asymmetry)") {
    GridSpec spec = make_spec(6, 6);
    std::vector<uint8_t> all(36, 1);
    SpatialWeights w = build_weights(spec, all, WeightScheme::queen);
    SplitMix64 rng(31);
    std::vector<double> x(36), y(36);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    LisaResult xy = bivariate_lisa(x, y, w, 99, 5, 0.05);
    LisaResult yx = bivariate_lisa(y, x, w, 99, 5, 0.05);
    bool any_differs = false;
    for (size_t i = 0; i < 36; ++i)
        if (std::abs(xy.I[i] - yx.I[i]) > 1e-12) any_differs = true;
    CHECK(any_differs);
}

TEST_CASE("mismatch_zones cross-tabulates typology by cluster") {
    GridSpec spec = make_spec(3, 3);
    std::vector<uint8_t> all(9, 1);
    SpatialWeights w = build_weights(spec, all, WeightScheme::queen);

    LisaResult lisa;
    size_t n = 9;
    lisa.I.assign(n, 0.0);
    lisa.pseudo_p.assign(n, 1.0);
    lisa.z_x.assign(n, 0.0);
    lisa.lag_y.assign(n, 0.0);
    lisa.cluster.assign(n, LisaCluster::NS);
    lisa.cluster[4] = LisaCluster::HL;  // center cell

    TypologyResult typ;
    typ.labels = {TypeLabel::CPL, TypeLabel::CPL, TypeLabel::None};
    std::vector<std::vector<int>> cell_segments(9);
    cell_segments[4] = {0, 1};  // only CPL segments intersect the HL cell
    cell_segments[0] = {2};

    MismatchReport report = mismatch_zones(lisa, w, typ, cell_segments);
    CHECK(report.hl_cells == std::vector<int>{4});
    CHECK(report.n_hl_segments == 2);
    CHECK(report.counts[int(LisaCluster::HL)][int(TypeLabel::CPL)] == 2);
    CHECK(report.counts[int(LisaCluster::HL)][int(TypeLabel::None)] == 0);
    CHECK(report.counts[int(LisaCluster::NS)][int(TypeLabel::None)] == 1);

    SUBCASE("zero significant cells give an empty mismatch set") {
        lisa.cluster[4] = LisaCluster::NS;
        MismatchReport empty = mismatch_zones(lisa, w, typ, cell_segments);
        CHECK(empty.hl_cells.empty());
        CHECK(empty.n_hl_segments == 0);
    }
}
