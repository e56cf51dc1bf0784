#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "oracles.hpp"
#include "stride/error.hpp"
#include "stride/model.hpp"

using namespace stride;

namespace {

Dataset random_dataset(SplitMix64& rng, size_t rows, size_t cols, const char* prefix = "x") {
    Dataset d;
    for (size_t c = 0; c < cols; ++c) {
        d.names.push_back(std::string(prefix) + std::to_string(c));
        std::vector<double> v(rows);
        for (auto& x : v) x = rng.normal();
        d.cols.push_back(std::move(v));
    }
    return d;
}

// exhaustive best split: every feature, every midpoint between distinct values
struct OracleSplit {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

OracleSplit best_split_oracle(const Dataset& X, const std::vector<double>& g,
                              const std::vector<double>& h, double lambda, double gamma,
                              double min_child_weight) {
    size_t n = X.n_rows();
    double G = std::accumulate(g.begin(), g.end(), 0.0);
    double H = std::accumulate(h.begin(), h.end(), 0.0);
    OracleSplit best;
    for (size_t f = 0; f < X.n_cols(); ++f) {
        std::vector<double> sorted = X.cols[f];
        std::sort(sorted.begin(), sorted.end());
        for (size_t i = 0; i + 1 < n; ++i) {
            if (sorted[i] == sorted[i + 1]) continue;
            double thr = 0.5 * (sorted[i] + sorted[i + 1]);
            double gl = 0.0, hl = 0.0;
            for (size_t r = 0; r < n; ++r)
                if (X.cols[f][r] < thr) {
                    gl += g[r];
                    hl += h[r];
                }
            double gr = G - gl, hr = H - hl;
            if (hl < min_child_weight || hr < min_child_weight) continue;
            double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                                 G * G / (H + lambda)) -
                          gamma;
            if (gain > best.gain) {
                best.gain = gain;
                best.feature = static_cast<int>(f);
                best.threshold = thr;
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("fit_tree splits a separable binary target into exact class means") {
    SplitMix64 rng(1);
    size_t n = 60;
    Dataset X = random_dataset(rng, n, 1);
    std::vector<double> y(n), g(n), h(n, 1.0);
    for (size_t i = 0; i < n; ++i) {
        y[i] = X.cols[0][i] > 0.0 ? 1.0 : 0.0;
        g[i] = -y[i];  // yhat = 0 under squared loss
    }
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    TreeFitConfig cfg;
    cfg.max_depth = 1;
    cfg.lambda_l2 = 0.0;
    cfg.gamma = 0.0;
    SplitMix64 tree_rng(2);
    Tree t = fit_tree(X, rows, g, h, cfg, tree_rng);

    REQUIRE(t.size() == 3);
    CHECK(t.feature[0] == 0);
    // threshold in the gap between the largest negative and smallest positive x
    double lo = -1e9, hi = 1e9;
    for (double v : X.cols[0]) {
        if (v <= 0.0) lo = std::max(lo, v);
        if (v > 0.0) hi = std::min(hi, v);
    }
    CHECK(t.threshold[0] > lo);
    CHECK(t.threshold[0] < hi);
    CHECK(t.value[t.left[0]] == doctest::Approx(0.0));   // mean of the 0 class
    CHECK(t.value[t.right[0]] == doctest::Approx(1.0));  // mean of the 1 class
}

TEST_CASE("gamma above the best gain prunes to a single leaf") {
    SplitMix64 rng(3);
    Dataset X = random_dataset(rng, 40, 3);
    std::vector<double> g(40), h(40, 1.0);
    for (auto& v : g) v = rng.normal();
    std::vector<int> rows(40);
    std::iota(rows.begin(), rows.end(), 0);

    OracleSplit best = best_split_oracle(X, g, h, 1.0, 0.0, 1.0);
    TreeFitConfig cfg;
    cfg.max_depth = 4;
    cfg.lambda_l2 = 1.0;
    cfg.gamma = best.gain + 1.0;
    SplitMix64 tree_rng(4);
    Tree t = fit_tree(X, rows, g, h, cfg, tree_rng);
    CHECK(t.size() == 1);
    CHECK(t.is_leaf(0));
}

TEST_CASE("root split agrees with the exhaustive-threshold oracle") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Dataset X = random_dataset(rng, 50, 4);
        std::vector<double> g(50), h(50);
        for (auto& v : g) v = rng.normal();
        for (auto& v : h) v = 0.5 + rng.uniform();
        std::vector<int> rows(50);
        std::iota(rows.begin(), rows.end(), 0);

        OracleSplit want = best_split_oracle(X, g, h, 1.0, 0.1, 1.0);
        TreeFitConfig cfg;
        cfg.max_depth = 1;
        cfg.lambda_l2 = 1.0;
        cfg.gamma = 0.1;
        cfg.min_child_weight = 1.0;
        SplitMix64 tree_rng(6);
        Tree t = fit_tree(X, rows, g, h, cfg, tree_rng);
        if (want.feature < 0) {
            CHECK(t.size() == 1);
        } else {
            REQUIRE(t.size() == 3);
            CHECK(t.feature[0] == want.feature);
            CHECK(t.threshold[0] == doctest::Approx(want.threshold).epsilon(1e-9));
        }
    }
}

TEST_CASE("fit_gbdt base cases") {
    SplitMix64 rng(7);
    Dataset X = random_dataset(rng, 30, 3);
    SUBCASE("constant target is reproduced by base_score alone") {
        std::vector<double> y(30, 4.2);
        Hyperparams p;
        p.n_estimators = 10;
        p.subsample = 1.0;
        GbdtModel m = fit_gbdt(X, y, p);
        CHECK(m.base_score == doctest::Approx(4.2));
        for (size_t r = 0; r < 30; ++r)
            CHECK(m.predict_row(X, r) == doctest::Approx(4.2).epsilon(1e-12));
        for (const auto& t : m.trees) {
            CHECK(t.size() == 1);
            CHECK(t.value[0] == doctest::Approx(0.0));
        }
    }
    SUBCASE("zero learning rate keeps predictions at base_score") {
        std::vector<double> y(30);
        for (auto& v : y) v = rng.normal();
        Hyperparams p;
        p.n_estimators = 8;
        p.learning_rate = 0.0;
        GbdtModel m = fit_gbdt(X, y, p);
        double base = std::accumulate(y.begin(), y.end(), 0.0) / 30.0;
        for (size_t r = 0; r < 30; ++r)
            CHECK(m.predict_row(X, r) == doctest::Approx(base).epsilon(1e-12));
    }
    SUBCASE("non-finite input is rejected") {
        std::vector<double> y(30, 1.0);
        Dataset bad = X;
        bad.cols[1][4] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(fit_gbdt(bad, y, Hyperparams{}), RuntimeError);
    }
}

TEST_CASE("fit_gbdt drives training R^2 to ~1 on a separable step target") {
    SplitMix64 rng(9);
    Dataset X = random_dataset(rng, 200, 1);
    std::vector<double> y(200);
    for (size_t i = 0; i < 200; ++i) y[i] = X.cols[0][i] > 0.3 ? 2.0 : -1.0;
    Hyperparams p;
    p.n_estimators = 200;
    p.max_depth = 3;
    p.learning_rate = 0.1;
    p.subsample = 1.0;
    p.colsample_bytree = 1.0;
    p.gamma = 0.0;
    GbdtModel m = fit_gbdt(X, y, p);
    CHECK(r2_score(y, m.predict_all(X)) >= 0.999);
}

TEST_CASE("prediction decomposition and cover bookkeeping") {
    SplitMix64 rng(11);
    Dataset X = random_dataset(rng, 120, 5);
    std::vector<double> y(120);
    for (size_t i = 0; i < 120; ++i) y[i] = std::sin(X.cols[0][i]) + 0.5 * X.cols[2][i];
    Hyperparams p;
    p.n_estimators = 25;
    p.max_depth = 4;
    p.subsample = 0.8;
    GbdtModel m = fit_gbdt(X, y, p);

    size_t expected_root_cover = static_cast<size_t>(std::llround(0.8 * 120));
    for (const auto& t : m.trees) {
        CHECK(static_cast<size_t>(std::llround(t.cover[0])) == expected_root_cover);
        for (size_t n = 0; n < t.size(); ++n) {
            if (t.is_leaf(static_cast<int>(n))) {
                CHECK(t.cover[n] > 0.0);
            } else {
                CHECK(t.cover[n] ==
                      doctest::Approx(t.cover[t.left[n]] + t.cover[t.right[n]]).epsilon(1e-12));
            }
        }
    }
    for (size_t r = 0; r < 20; ++r) {
        double acc = 0.0;
        for (const auto& t : m.trees) acc += t.predict_row(X, r);
        CHECK(m.predict_row(X, r) - m.base_score ==
              doctest::Approx(m.learning_rate * acc).epsilon(1e-12));
    }
}

TEST_CASE("fit_gbdt is row-order invariant given the permuted index streams") {
    SplitMix64 rng(13);
    size_t n = 80;
    Dataset X = random_dataset(rng, n, 5);
    std::vector<double> y(n);
    for (size_t i = 0; i < n; ++i) y[i] = X.cols[0][i] * X.cols[1][i] + rng.normal() * 0.1;

    Hyperparams p;
    p.n_estimators = 12;
    p.max_depth = 3;
    p.subsample = 0.75;
    p.colsample_bytree = 1.0;

    // explicit subsample streams
    size_t m = static_cast<size_t>(std::llround(p.subsample * n));
    std::vector<std::vector<int>> streams;
    SplitMix64 srng(14);
    for (int round = 0; round < p.n_estimators; ++round) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        srng.shuffle(idx);
        idx.resize(m);
        streams.push_back(idx);
    }
    GbdtModel a = fit_gbdt(X, y, p, &streams);

    // permute rows and push the permutation through the streams
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    srng.shuffle(perm);
    Dataset X2 = X;
    std::vector<double> y2(n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t c = 0; c < X.n_cols(); ++c) X2.cols[c][perm[i]] = X.cols[c][i];
        y2[perm[i]] = y[i];
    }
    std::vector<std::vector<int>> streams2 = streams;
    for (auto& s : streams2)
        for (auto& idx : s) idx = perm[idx];
    GbdtModel b = fit_gbdt(X2, y2, p, &streams2);

    for (size_t i = 0; i < n; ++i)
        CHECK(a.predict_row(X, i) ==
              doctest::Approx(b.predict_row(X2, perm[i])).epsilon(1e-9));
}

TEST_CASE("OLS recovers exact linear coefficients") {
    SplitMix64 rng(15);
    Dataset X = random_dataset(rng, 50, 1);
    std::vector<double> y(50);
    for (size_t i = 0; i < 50; ++i) y[i] = 2.0 * X.cols[0][i] + 1.0;
    OlsModel m = fit_ols(X, y);
    CHECK(m.coef[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(m.intercept == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.warnings.empty());
}

TEST_CASE("OLS matches a QR oracle on random well-conditioned data") {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        Dataset X = random_dataset(rng, 80, 6);
        std::vector<double> y(80);
        for (auto& v : y) v = rng.normal() * 3.0;
        OlsModel m = fit_ols(X, y);
        auto beta = oracle::qr_least_squares(X.cols, y);
        CHECK(m.intercept == doctest::Approx(beta[0]).epsilon(1e-8));
        for (size_t c = 0; c < 6; ++c)
            CHECK(m.coef[c] == doctest::Approx(beta[c + 1]).epsilon(1e-8));
    }
}

TEST_CASE("OLS falls back to ridge with a warning when underdetermined") {
    SplitMix64 rng(19);
    Dataset X = random_dataset(rng, 4, 6);
    std::vector<double> y{1.0, 2.0, 3.0, 4.0};
    OlsModel m = fit_ols(X, y);
    REQUIRE(!m.warnings.empty());
    for (double c : m.coef) CHECK(std::isfinite(c));
}

TEST_CASE("random forest predicts a constant target exactly") {
    SplitMix64 rng(21);
    Dataset X = random_dataset(rng, 40, 3);
    std::vector<double> y(40, -2.5);
    RfParams p;
    p.n_estimators = 10;
    RfModel m = fit_rf(X, y, p);
    auto pred = m.predict_all(X);
    for (double v : pred) CHECK(v == doctest::Approx(-2.5).epsilon(1e-12));
}

TEST_CASE("cross_validate") {
    SplitMix64 rng(23);
    SUBCASE("a perfectly linear target with OLS gives R^2 = 1, RMSE = 0 per fold") {
        Dataset X = random_dataset(rng, 60, 2);
        std::vector<double> y(60);
        for (size_t i = 0; i < 60; ++i) y[i] = 3.0 * X.cols[0][i] - X.cols[1][i] + 0.5;
        ModelSpec spec;
        spec.kind = ModelSpec::Kind::ols;
        CvReport cv = cross_validate(X, y, spec, 10, 42);
        for (double r2 : cv.fold_r2) CHECK(r2 == doctest::Approx(1.0).epsilon(1e-9));
        for (double e : cv.fold_rmse) CHECK(e <= 1e-9);
    }
    SUBCASE("a mean-only model scores about zero out of sample") {
        Dataset X = random_dataset(rng, 100, 2);
        std::vector<double> y(100);
        for (auto& v : y) v = rng.normal();
        ModelSpec spec;
        spec.kind = ModelSpec::Kind::gbdt;
        spec.gbdt.n_estimators = 0;  // prediction = training mean
        CvReport cv = cross_validate(X, y, spec, 10, 42);
        CHECK(cv.mean_r2 < 0.02);
        CHECK(cv.mean_r2 > -0.5);
    }
    SUBCASE("fixed seed reproduces the report bit for bit") {
        Dataset X = random_dataset(rng, 70, 3);
        std::vector<double> y(70);
        for (size_t i = 0; i < 70; ++i) y[i] = X.cols[0][i] + 0.2 * rng.normal();
        ModelSpec spec;
        spec.kind = ModelSpec::Kind::gbdt;
        spec.gbdt.n_estimators = 15;
        spec.gbdt.max_depth = 3;
        CvReport a = cross_validate(X, y, spec, 7, 99);
        CvReport b = cross_validate(X, y, spec, 7, 99);
        CHECK(a.fold_r2 == b.fold_r2);
        CHECK(a.fold_rmse == b.fold_rmse);
        CHECK(a.mean_r2 == b.mean_r2);
    }
    SUBCASE("constant target marks every fold R^2 undefined with warnings") {
        Dataset X = random_dataset(rng, 40, 2);
        std::vector<double> y(40, 1.0);
        ModelSpec spec;
        spec.kind = ModelSpec::Kind::ols;
        CvReport cv = cross_validate(X, y, spec, 5, 1);
        CHECK(cv.warnings.size() == 5);
        for (double r2 : cv.fold_r2) CHECK(std::isnan(r2));
    }
    SUBCASE("k below 2 or more folds than rows are rejected") {
        Dataset X = random_dataset(rng, 5, 1);
        std::vector<double> y(5, 0.0);
        ModelSpec spec;
        CHECK_THROWS_AS(cross_validate(X, y, spec, 1, 0), ConfigError);
        CHECK_THROWS_AS(cross_validate(X, y, spec, 6, 0), ConfigError);
    }
}

TEST_CASE("random_search") {
    SplitMix64 rng(29);
    Dataset X = random_dataset(rng, 50, 3);
    std::vector<double> y(50);
    for (size_t i = 0; i < 50; ++i) y[i] = X.cols[0][i] > 0 ? 1.0 : 0.0;

    SUBCASE("single-point space returns that point") {
        SearchSpace space;
        space.n_estimators = {20};
        space.max_depth = {3};
        space.learning_rate = {0.1};
        space.subsample = {1.0};
        space.colsample_bytree = {1.0};
        space.gamma = {0.0};
        SearchResult r = random_search(X, y, space, 4, 5, 123);
        CHECK(r.log.size() == 4);
        CHECK(r.best.max_depth == 3);
        CHECK(r.best.learning_rate == 0.1);
    }
    SUBCASE("seeded search reproduces draw for draw") {
        SearchSpace space;
        space.n_estimators = {10};
        SearchResult a = random_search(X, y, space, 6, 5, 7);
        SearchResult b = random_search(X, y, space, 6, 5, 7);
        REQUIRE(a.log.size() == b.log.size());
        for (size_t i = 0; i < a.log.size(); ++i) {
            CHECK(a.log[i].params.max_depth == b.log[i].params.max_depth);
            CHECK(a.log[i].params.learning_rate == b.log[i].params.learning_rate);
            CHECK(a.log[i].mean_r2 == b.log[i].mean_r2);
        }
    }
    SUBCASE("the classic tuned configuration is a point of the default space") {
        SearchSpace space;
        auto has = [](const auto& v, auto x) {
            return std::find(v.begin(), v.end(), x) != v.end();
        };
        CHECK(has(space.max_depth, 8));
        CHECK(has(space.learning_rate, 0.05));
        CHECK(has(space.subsample, 0.8));
        CHECK(has(space.colsample_bytree, 0.8));
        CHECK(has(space.gamma, 0.1));
        CHECK(has(space.n_estimators, 200));
        CHECK_THROWS_AS(random_search(X, y, SearchSpace{.max_depth = {}}, 3, 5, 1), ConfigError);
    }
}

TEST_CASE("model text serialization round trips exactly") {
    SplitMix64 rng(31);
    Dataset X = random_dataset(rng, 90, 4, "C_f");
    std::vector<double> y(90);
    for (size_t i = 0; i < 90; ++i)
        y[i] = std::tanh(X.cols[1][i]) + X.cols[3][i] * 0.25 + rng.normal() * 0.05;
    Hyperparams p;
    p.n_estimators = 18;
    p.max_depth = 4;
    GbdtModel m = fit_gbdt(X, y, p);

    auto path = (std::filesystem::temp_directory_path() / "stride_model_rt.txt").string();
    save_model(m, path);
    GbdtModel back = load_model(path);

    CHECK(back.base_score == m.base_score);
    CHECK(back.learning_rate == m.learning_rate);
    CHECK(back.feature_names == m.feature_names);
    REQUIRE(back.trees.size() == m.trees.size());
    for (size_t t = 0; t < m.trees.size(); ++t) {
        CHECK(back.trees[t].feature == m.trees[t].feature);
        CHECK(back.trees[t].threshold == m.trees[t].threshold);  // bit exact
        CHECK(back.trees[t].value == m.trees[t].value);
        CHECK(back.trees[t].cover == m.trees[t].cover);
    }
    for (size_t r = 0; r < 90; ++r) CHECK(back.predict_row(X, r) == m.predict_row(X, r));
    std::filesystem::remove(path);
}
