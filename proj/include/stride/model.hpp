// Regression model family: an exact-greedy gradient-boosted tree learner with
// second-order gain, plus random-forest and OLS baselines, k-fold cross
// validation and randomized hyperparameter search. Everything is driven by
// derived per-unit RNG streams so results are seed-reproducible regardless
// of execution order.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stride/rng.hpp"

namespace stride {

// Column-major numeric matrix with named columns.
struct Dataset {
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;

    size_t n_rows() const { return cols.empty() ? 0 : cols[0].size(); }
    size_t n_cols() const { return cols.size(); }
    double at(size_t row, size_t col) const { return cols[col][row]; }
    int col(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        return -1;
    }
    Dataset subset_rows(const std::vector<int>& rows) const;
    std::vector<double> row(size_t r) const;
};

// Binary regression tree in flat arrays; node 0 is the root. Internal nodes
// route x[feature] < threshold to left. cover is the training hessian mass
// through the node (sample count for squared loss).
struct Tree {
    std::vector<int> feature;  // -1 for leaves
    std::vector<double> threshold;
    std::vector<int> left, right;
    std::vector<double> value;
    std::vector<double> cover;

    size_t size() const { return feature.size(); }
    bool is_leaf(int n) const { return feature[n] < 0; }
    double predict(const std::vector<double>& x) const;
    double predict_row(const Dataset& X, size_t row) const;
    // Cover-weighted mean of leaf values: E[tree] over the training mass.
    double expected_value() const;
};

struct TreeFitConfig {
    int max_depth = 6;
    double lambda_l2 = 1.0;
    double gamma = 0.0;
    double min_child_weight = 1.0;
    std::vector<int> feature_pool;  // candidate features (empty = all): per-tree column sample
    int features_per_split = 0;     // >0: sample this many from the pool at every split (RF)
};

// Level-wise growth; split gain is the regularized second-order reduction
//   1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma
// taken only when positive and both children carry min_child_weight hessian
// mass. Leaf value is -G/(H+l). Thresholds enumerate midpoints of adjacent
// distinct values; rows keep their given order through partitions so the
// accumulation order is a function of the sample sequence, not storage order.
Tree fit_tree(const Dataset& X, const std::vector<int>& rows, const std::vector<double>& g,
              const std::vector<double>& h, const TreeFitConfig& cfg, SplitMix64& rng);

struct Hyperparams {
    int n_estimators = 200;
    int max_depth = 8;
    double learning_rate = 0.05;
    double subsample = 0.8;
    double colsample_bytree = 0.8;
    double gamma = 0.1;
    double lambda_l2 = 1.0;
    double min_child_weight = 1.0;
    uint64_t seed = 42;
};

struct GbdtModel {
    double base_score = 0.0;
    double learning_rate = 1.0;
    std::vector<Tree> trees;
    std::vector<std::string> feature_names;

    double predict(const std::vector<double>& x) const;
    double predict_row(const Dataset& X, size_t row) const;
    std::vector<double> predict_all(const Dataset& X) const;
};

// Squared-error boosting: per round g = yhat - y, h = 1 on a seeded row
// subsample. index_streams, when given, overrides the internal per-round
// subsample index sequences (used to assert row-order invariance).
GbdtModel fit_gbdt(const Dataset& X, const std::vector<double>& y, const Hyperparams& params,
                   const std::vector<std::vector<int>>* index_streams = nullptr);

struct OlsModel {
    double intercept = 0.0;
    std::vector<double> coef;
    std::vector<std::string> feature_names;
    std::vector<std::string> warnings;

    double predict(const std::vector<double>& x) const;
    std::vector<double> predict_all(const Dataset& X) const;
};

// Normal equations with intercept; near-singular systems fall back to a
// 1e-8 ridge with a warning.
OlsModel fit_ols(const Dataset& X, const std::vector<double>& y);

struct RfParams {
    int n_estimators = 100;
    int max_depth = 8;
    enum class MaxFeatures { all, sqrt, log2 } max_features = MaxFeatures::sqrt;
    uint64_t seed = 42;
};

struct RfModel {
    std::vector<Tree> trees;
    std::vector<std::string> feature_names;

    double predict(const std::vector<double>& x) const;
    std::vector<double> predict_all(const Dataset& X) const;
};

// Bagged variance-reduction trees on bootstrap samples with per-split
// feature sampling; prediction is the tree mean.
RfModel fit_rf(const Dataset& X, const std::vector<double>& y, const RfParams& params);

struct ModelSpec {
    enum class Kind { gbdt, rf, ols } kind = Kind::gbdt;
    Hyperparams gbdt;
    RfParams rf;
};

double r2_score(const std::vector<double>& y_true, const std::vector<double>& y_pred);
double rmse(const std::vector<double>& y_true, const std::vector<double>& y_pred);

struct CvReport {
    std::vector<double> fold_r2;    // NaN for folds with zero target variance
    std::vector<double> fold_rmse;
    double mean_r2 = 0.0, std_r2 = 0.0;
    double mean_rmse = 0.0, std_rmse = 0.0;
    uint64_t seed = 0;
    std::vector<std::string> warnings;
};

// Seeded shuffle, contiguous folds with sizes differing by at most one.
// R^2 uses the held-out fold's own mean for SS_tot.
CvReport cross_validate(const Dataset& X, const std::vector<double>& y, const ModelSpec& spec,
                        int k = 10, uint64_t seed = 42);

struct SearchSpace {
    std::vector<int> n_estimators{200};
    std::vector<int> max_depth{3, 4, 5, 6, 8};
    std::vector<double> learning_rate{0.01, 0.05, 0.1, 0.2};
    std::vector<double> subsample{0.6, 0.8, 1.0};
    std::vector<double> colsample_bytree{0.6, 0.8, 1.0};
    std::vector<double> gamma{0.0, 0.1, 0.5, 1.0};

    bool empty() const {
        return n_estimators.empty() || max_depth.empty() || learning_rate.empty() ||
               subsample.empty() || colsample_bytree.empty() || gamma.empty();
    }
};

struct SearchEntry {
    Hyperparams params;
    double mean_r2 = 0.0;
    double mean_rmse = 0.0;
};

struct SearchResult {
    Hyperparams best;
    std::vector<SearchEntry> log;
};

// Uniform draws from the grid; best = highest mean CV R^2, ties broken by
// lower RMSE then draw order. The same fold split is reused across draws.
SearchResult random_search(const Dataset& X, const std::vector<double>& y,
                           const SearchSpace& space, int n_draws = 30, int k = 10,
                           uint64_t seed = 42);

// Line-oriented text serialization; exact round trip for finite doubles.
void save_model(const GbdtModel& model, const std::string& path);
GbdtModel load_model(const std::string& path);

}  // namespace stride
