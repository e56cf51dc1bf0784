#include "stride/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "stride/csv.hpp"
#include "stride/error.hpp"

namespace stride {

Dataset Dataset::subset_rows(const std::vector<int>& rows) const {
    Dataset out;
    out.names = names;
    out.cols.resize(cols.size());
    for (size_t c = 0; c < cols.size(); ++c) {
        out.cols[c].reserve(rows.size());
        for (int r : rows) out.cols[c].push_back(cols[c][r]);
    }
    return out;
}

std::vector<double> Dataset::row(size_t r) const {
    std::vector<double> out(cols.size());
    for (size_t c = 0; c < cols.size(); ++c) out[c] = cols[c][r];
    return out;
}

double Tree::predict(const std::vector<double>& x) const {
    int n = 0;
    while (!is_leaf(n)) n = x[feature[n]] < threshold[n] ? left[n] : right[n];
    return value[n];
}

double Tree::predict_row(const Dataset& X, size_t row) const {
    int n = 0;
    while (!is_leaf(n)) n = X.cols[feature[n]][row] < threshold[n] ? left[n] : right[n];
    return value[n];
}

double Tree::expected_value() const {
    double acc = 0.0;
    for (size_t n = 0; n < size(); ++n)
        if (is_leaf(static_cast<int>(n))) acc += value[n] * cover[n];
    return cover.empty() || cover[0] <= 0.0 ? 0.0 : acc / cover[0];
}

namespace {

struct BestSplit {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

// Scan one feature over the node's samples; samples are sorted by value with
// the incoming order as tie-break, so partial sums do not depend on row
// storage order.
void scan_feature(const Dataset& X, const std::vector<int>& rows, const std::vector<double>& g,
                  const std::vector<double>& h, int feat, double sum_g, double sum_h,
                  double lambda, double gamma, double min_child_weight, BestSplit& best,
                  std::vector<std::pair<double, int>>& scratch) {
    scratch.clear();
    for (size_t k = 0; k < rows.size(); ++k)
        scratch.push_back({X.cols[feat][rows[k]], static_cast<int>(k)});
    std::sort(scratch.begin(), scratch.end());

    double parent_term = (sum_g * sum_g) / (sum_h + lambda);
    double gl = 0.0, hl = 0.0;
    for (size_t i = 0; i + 1 < scratch.size(); ++i) {
        int row = rows[scratch[i].second];
        gl += g[row];
        hl += h[row];
        if (scratch[i].first == scratch[i + 1].first) continue;  // no boundary here
        double gr = sum_g - gl, hr = sum_h - hl;
        if (hl < min_child_weight || hr < min_child_weight) continue;
        double gain =
            0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_term) - gamma;
        if (gain > best.gain) {
            best.gain = gain;
            best.feature = feat;
            best.threshold = 0.5 * (scratch[i].first + scratch[i + 1].first);
        }
    }
}

}  // namespace

Tree fit_tree(const Dataset& X, const std::vector<int>& rows, const std::vector<double>& g,
              const std::vector<double>& h, const TreeFitConfig& cfg, SplitMix64& rng) {
    if (rows.empty()) throw RuntimeError("fit_tree: empty training set");
    for (int r : rows)
        if (!(h[r] > 0.0)) throw RuntimeError("fit_tree: non-positive hessian");

    std::vector<int> pool = cfg.feature_pool;
    if (pool.empty()) {
        pool.resize(X.n_cols());
        std::iota(pool.begin(), pool.end(), 0);
    }

    Tree tree;
    auto add_node = [&]() {
        tree.feature.push_back(-1);
        tree.threshold.push_back(0.0);
        tree.left.push_back(-1);
        tree.right.push_back(-1);
        tree.value.push_back(0.0);
        tree.cover.push_back(0.0);
        return static_cast<int>(tree.size()) - 1;
    };

    struct Work {
        int node;
        int depth;
        std::vector<int> rows;
    };
    std::vector<Work> level;
    level.push_back({add_node(), 0, rows});

    std::vector<std::pair<double, int>> scratch;
    std::vector<int> split_pool;
    while (!level.empty()) {
        std::vector<Work> next;
        for (auto& work : level) {
            double sum_g = 0.0, sum_h = 0.0;
            for (int r : work.rows) {
                sum_g += g[r];
                sum_h += h[r];
            }
            tree.cover[work.node] = sum_h;
            tree.value[work.node] = -sum_g / (sum_h + cfg.lambda_l2);
            if (work.depth >= cfg.max_depth || work.rows.size() < 2) continue;

            const std::vector<int>* candidates = &pool;
            if (cfg.features_per_split > 0 &&
                cfg.features_per_split < static_cast<int>(pool.size())) {
                split_pool = pool;
                for (int i = 0; i < cfg.features_per_split; ++i) {
                    size_t j = i + static_cast<size_t>(rng.below(split_pool.size() - i));
                    std::swap(split_pool[i], split_pool[j]);
                }
                split_pool.resize(cfg.features_per_split);
                candidates = &split_pool;
            }

            BestSplit best;
            for (int feat : *candidates)
                scan_feature(X, work.rows, g, h, feat, sum_g, sum_h, cfg.lambda_l2, cfg.gamma,
                             cfg.min_child_weight, best, scratch);
            if (best.feature < 0 || !(best.gain > 0.0)) continue;

            std::vector<int> left_rows, right_rows;
            for (int r : work.rows)
                (X.cols[best.feature][r] < best.threshold ? left_rows : right_rows).push_back(r);

            tree.feature[work.node] = best.feature;
            tree.threshold[work.node] = best.threshold;
            tree.value[work.node] = 0.0;
            int l = add_node();
            int r = add_node();
            tree.left[work.node] = l;
            tree.right[work.node] = r;
            next.push_back({l, work.depth + 1, std::move(left_rows)});
            next.push_back({r, work.depth + 1, std::move(right_rows)});
        }
        level = std::move(next);
    }
    return tree;
}

double GbdtModel::predict(const std::vector<double>& x) const {
    double acc = base_score;
    for (const auto& t : trees) acc += learning_rate * t.predict(x);
    return acc;
}

double GbdtModel::predict_row(const Dataset& X, size_t row) const {
    double acc = base_score;
    for (const auto& t : trees) acc += learning_rate * t.predict_row(X, row);
    return acc;
}

std::vector<double> GbdtModel::predict_all(const Dataset& X) const {
    std::vector<double> out(X.n_rows());
    for (size_t r = 0; r < X.n_rows(); ++r) out[r] = predict_row(X, r);
    return out;
}

GbdtModel fit_gbdt(const Dataset& X, const std::vector<double>& y, const Hyperparams& params,
                   const std::vector<std::vector<int>>* index_streams) {
    size_t n = X.n_rows();
    if (n == 0 || y.size() != n) throw RuntimeError("fit_gbdt: bad training data shape");
    for (const auto& col : X.cols)
        for (double v : col)
            if (!std::isfinite(v)) throw RuntimeError("fit_gbdt: non-finite feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw RuntimeError("fit_gbdt: non-finite target value");

    GbdtModel model;
    model.feature_names = X.names;
    model.learning_rate = params.learning_rate;
    model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    std::vector<double> yhat(n, model.base_score);
    std::vector<double> g(n, 0.0), h(n, 1.0);

    size_t m = std::max<size_t>(1, static_cast<size_t>(std::llround(params.subsample * n)));
    size_t fsub = std::max<size_t>(
        1, static_cast<size_t>(std::llround(params.colsample_bytree * X.n_cols())));

    for (int round = 0; round < params.n_estimators; ++round) {
        SplitMix64 rng(derive_seed(params.seed, "gbdt_round", static_cast<uint64_t>(round)));

        std::vector<int> stream;
        if (index_streams) {
            stream = (*index_streams)[round];
        } else {
            stream.resize(n);
            std::iota(stream.begin(), stream.end(), 0);
            rng.shuffle(stream);
            stream.resize(m);
        }

        TreeFitConfig cfg;
        cfg.max_depth = params.max_depth;
        cfg.lambda_l2 = params.lambda_l2;
        cfg.gamma = params.gamma;
        cfg.min_child_weight = params.min_child_weight;
        if (fsub < X.n_cols()) {
            std::vector<int> all(X.n_cols());
            std::iota(all.begin(), all.end(), 0);
            for (size_t i = 0; i < fsub; ++i) {
                size_t j = i + static_cast<size_t>(rng.below(all.size() - i));
                std::swap(all[i], all[j]);
            }
            all.resize(fsub);
            cfg.feature_pool = std::move(all);
        }

        for (int r : stream) g[r] = yhat[r] - y[r];
        Tree tree = fit_tree(X, stream, g, h, cfg, rng);
        for (size_t r = 0; r < n; ++r)
            yhat[r] += params.learning_rate * tree.predict_row(X, r);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

double OlsModel::predict(const std::vector<double>& x) const {
    double acc = intercept;
    for (size_t i = 0; i < coef.size(); ++i) acc += coef[i] * x[i];
    return acc;
}

std::vector<double> OlsModel::predict_all(const Dataset& X) const {
    std::vector<double> out(X.n_rows(), intercept);
    for (size_t c = 0; c < coef.size(); ++c)
        for (size_t r = 0; r < X.n_rows(); ++r) out[r] += coef[c] * X.cols[c][r];
    return out;
}

OlsModel fit_ols(const Dataset& X, const std::vector<double>& y) {
    size_t n = X.n_rows();
    size_t f = X.n_cols();
    OlsModel model;
    model.feature_names = X.names;
    size_t d = f + 1;  // intercept first

    if (n < d) model.warnings.push_back("fewer rows than columns; ridge fallback applied");

    // normal equations A beta = b with A = Z'Z, Z = [1 | X]
    std::vector<std::vector<double>> A(d, std::vector<double>(d, 0.0));
    std::vector<double> b(d, 0.0);
    auto z = [&](size_t r, size_t j) { return j == 0 ? 1.0 : X.cols[j - 1][r]; };
    for (size_t r = 0; r < n; ++r) {
        for (size_t i = 0; i < d; ++i) {
            double zi = z(r, i);
            b[i] += zi * y[r];
            for (size_t j = i; j < d; ++j) A[i][j] += zi * z(r, j);
        }
    }
    for (size_t i = 0; i < d; ++i)
        for (size_t j = 0; j < i; ++j) A[i][j] = A[j][i];

    auto solve = [&](double ridge) -> std::vector<double> {
        std::vector<std::vector<double>> M = A;
        std::vector<double> rhs = b;
        for (size_t i = 0; i < d; ++i) M[i][i] += ridge;
        for (size_t col = 0; col < d; ++col) {
            size_t pivot = col;
            for (size_t r = col + 1; r < d; ++r)
                if (std::abs(M[r][col]) > std::abs(M[pivot][col])) pivot = r;
            if (std::abs(M[pivot][col]) < 1e-12) return {};  // singular
            std::swap(M[pivot], M[col]);
            std::swap(rhs[pivot], rhs[col]);
            for (size_t r = 0; r < d; ++r) {
                if (r == col) continue;
                double factor = M[r][col] / M[col][col];
                for (size_t c = col; c < d; ++c) M[r][c] -= factor * M[col][c];
                rhs[r] -= factor * rhs[col];
            }
        }
        for (size_t i = 0; i < d; ++i) rhs[i] /= M[i][i];
        return rhs;
    };

    std::vector<double> beta = n < d ? std::vector<double>{} : solve(0.0);
    if (beta.empty()) {
        if (model.warnings.empty())
            model.warnings.push_back("collinear columns; ridge jitter 1e-8 applied");
        beta = solve(1e-8);
        if (beta.empty()) throw RuntimeError("fit_ols: singular system even with ridge");
    }
    model.intercept = beta[0];
    model.coef.assign(beta.begin() + 1, beta.end());
    return model;
}

double RfModel::predict(const std::vector<double>& x) const {
    double acc = 0.0;
    for (const auto& t : trees) acc += t.predict(x);
    return trees.empty() ? 0.0 : acc / static_cast<double>(trees.size());
}

std::vector<double> RfModel::predict_all(const Dataset& X) const {
    std::vector<double> out(X.n_rows(), 0.0);
    for (const auto& t : trees)
        for (size_t r = 0; r < X.n_rows(); ++r) out[r] += t.predict_row(X, r);
    if (!trees.empty())
        for (auto& v : out) v /= static_cast<double>(trees.size());
    return out;
}

RfModel fit_rf(const Dataset& X, const std::vector<double>& y, const RfParams& params) {
    size_t n = X.n_rows();
    if (n == 0) throw RuntimeError("fit_rf: empty training set");
    RfModel model;
    model.feature_names = X.names;

    int k;
    switch (params.max_features) {
        case RfParams::MaxFeatures::sqrt:
            k = std::max(1, static_cast<int>(std::lround(std::sqrt(double(X.n_cols())))));
            break;
        case RfParams::MaxFeatures::log2:
            k = std::max(1, static_cast<int>(std::lround(std::log2(double(X.n_cols())))));
            break;
        default:
            k = 0;  // all
    }

    // Variance-reduction splits come out of the boosting learner with
    // g = -y, h = 1, lambda = 0: leaf value -G/H is the leaf mean of y.
    std::vector<double> g(n), h(n, 1.0);
    for (size_t i = 0; i < n; ++i) g[i] = -y[i];

    for (int t = 0; t < params.n_estimators; ++t) {
        SplitMix64 rng(derive_seed(params.seed, "rf_tree", static_cast<uint64_t>(t)));
        std::vector<int> rows(n);
        for (size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(rng.below(n));  // bootstrap
        TreeFitConfig cfg;
        cfg.max_depth = params.max_depth;
        cfg.lambda_l2 = 0.0;
        cfg.gamma = 0.0;
        cfg.min_child_weight = 1.0;
        cfg.features_per_split = k;
        model.trees.push_back(fit_tree(X, rows, g, h, cfg, rng));
    }
    return model;
}

double r2_score(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) /
                  static_cast<double>(y_true.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < y_true.size(); ++i) {
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    }
    if (ss_tot == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - ss_res / ss_tot;
}

double rmse(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    double acc = 0.0;
    for (size_t i = 0; i < y_true.size(); ++i)
        acc += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    return std::sqrt(acc / static_cast<double>(y_true.size()));
}

namespace {

std::vector<double> fit_predict(const Dataset& Xtr, const std::vector<double>& ytr,
                                const Dataset& Xte, const ModelSpec& spec) {
    switch (spec.kind) {
        case ModelSpec::Kind::gbdt: return fit_gbdt(Xtr, ytr, spec.gbdt).predict_all(Xte);
        case ModelSpec::Kind::rf: return fit_rf(Xtr, ytr, spec.rf).predict_all(Xte);
        case ModelSpec::Kind::ols: return fit_ols(Xtr, ytr).predict_all(Xte);
    }
    throw RuntimeError("unknown model kind");
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

CvReport cross_validate(const Dataset& X, const std::vector<double>& y, const ModelSpec& spec,
                        int k, uint64_t seed) {
    size_t n = X.n_rows();
    if (k < 2) throw ConfigError("cross_validate: k must be >= 2");
    if (n < static_cast<size_t>(k)) throw ConfigError("cross_validate: fewer rows than folds");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(derive_seed(seed, "cv_shuffle"));
    rng.shuffle(order);

    CvReport report;
    report.seed = seed;
    std::vector<double> valid_r2, valid_rmse;
    for (int fold = 0; fold < k; ++fold) {
        size_t lo = n * static_cast<size_t>(fold) / k;
        size_t hi = n * static_cast<size_t>(fold + 1) / k;
        std::vector<int> test_rows(order.begin() + lo, order.begin() + hi);
        std::vector<int> train_rows;
        train_rows.reserve(n - (hi - lo));
        train_rows.insert(train_rows.end(), order.begin(), order.begin() + lo);
        train_rows.insert(train_rows.end(), order.begin() + hi, order.end());

        Dataset Xtr = X.subset_rows(train_rows);
        Dataset Xte = X.subset_rows(test_rows);
        std::vector<double> ytr, yte;
        for (int r : train_rows) ytr.push_back(y[r]);
        for (int r : test_rows) yte.push_back(y[r]);

        auto pred = fit_predict(Xtr, ytr, Xte, spec);
        double fold_rmse = rmse(yte, pred);
        double fold_r2 = r2_score(yte, pred);
        report.fold_rmse.push_back(fold_rmse);
        report.fold_r2.push_back(fold_r2);
        valid_rmse.push_back(fold_rmse);
        if (std::isnan(fold_r2)) {
            report.warnings.push_back("fold " + std::to_string(fold) +
                                      ": zero target variance, R^2 undefined");
        } else {
            valid_r2.push_back(fold_r2);
        }
    }
    if (!valid_r2.empty()) {
        report.mean_r2 = std::accumulate(valid_r2.begin(), valid_r2.end(), 0.0) /
                         static_cast<double>(valid_r2.size());
        report.std_r2 = sample_std(valid_r2, report.mean_r2);
    }
    report.mean_rmse = std::accumulate(valid_rmse.begin(), valid_rmse.end(), 0.0) /
                       static_cast<double>(valid_rmse.size());
    report.std_rmse = sample_std(valid_rmse, report.mean_rmse);
    return report;
}

SearchResult random_search(const Dataset& X, const std::vector<double>& y,
                           const SearchSpace& space, int n_draws, int k, uint64_t seed) {
    if (space.empty()) throw ConfigError("random_search: empty search space");
    SplitMix64 rng(derive_seed(seed, "search_draws"));
    uint64_t cv_seed = derive_seed(seed, "search_cv");

    SearchResult result;
    int best_idx = -1;
    for (int draw = 0; draw < n_draws; ++draw) {
        Hyperparams p;
        p.n_estimators = space.n_estimators[rng.below(space.n_estimators.size())];
        p.max_depth = space.max_depth[rng.below(space.max_depth.size())];
        p.learning_rate = space.learning_rate[rng.below(space.learning_rate.size())];
        p.subsample = space.subsample[rng.below(space.subsample.size())];
        p.colsample_bytree = space.colsample_bytree[rng.below(space.colsample_bytree.size())];
        p.gamma = space.gamma[rng.below(space.gamma.size())];
        p.seed = derive_seed(seed, "search_fit", static_cast<uint64_t>(draw));

        ModelSpec spec;
        spec.kind = ModelSpec::Kind::gbdt;
        spec.gbdt = p;
        CvReport cv = cross_validate(X, y, spec, k, cv_seed);
        result.log.push_back({p, cv.mean_r2, cv.mean_rmse});

        const auto& cur = result.log.back();
        if (best_idx < 0 || cur.mean_r2 > result.log[best_idx].mean_r2 ||
            (cur.mean_r2 == result.log[best_idx].mean_r2 &&
             cur.mean_rmse < result.log[best_idx].mean_rmse)) {
            best_idx = draw;
        }
    }
    result.best = result.log[best_idx].params;
    return result;
}

void save_model(const GbdtModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path);
    out << "gbdt 1\n";
    out << "base_score " << fmt_double(model.base_score) << "\n";
    out << "learning_rate " << fmt_double(model.learning_rate) << "\n";
    out << "features " << model.feature_names.size();
    for (const auto& n : model.feature_names) out << " " << n;
    out << "\n";
    out << "trees " << model.trees.size() << "\n";
    for (size_t t = 0; t < model.trees.size(); ++t) {
        const Tree& tree = model.trees[t];
        out << "tree " << t << " " << tree.size() << "\n";
        // pre-order walk with explicit node ids
        std::vector<int> stack{0};
        while (!stack.empty()) {
            int n = stack.back();
            stack.pop_back();
            if (tree.is_leaf(n)) {
                out << n << " leaf -1 0 -1 -1 " << fmt_double(tree.value[n]) << " "
                    << fmt_double(tree.cover[n]) << "\n";
            } else {
                out << n << " split " << tree.feature[n] << " " << fmt_double(tree.threshold[n])
                    << " " << tree.left[n] << " " << tree.right[n] << " 0 "
                    << fmt_double(tree.cover[n]) << "\n";
                stack.push_back(tree.right[n]);
                stack.push_back(tree.left[n]);
            }
        }
    }
}

GbdtModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    auto fail = [&](const std::string& what) -> RuntimeError {
        return RuntimeError(path + ": bad model file (" + what + ")");
    };
    std::string word;
    int version;
    if (!(in >> word >> version) || word != "gbdt" || version != 1) throw fail("header");
    GbdtModel model;
    size_t n_features = 0, n_trees = 0;
    if (!(in >> word >> model.base_score) || word != "base_score") throw fail("base_score");
    if (!(in >> word >> model.learning_rate) || word != "learning_rate")
        throw fail("learning_rate");
    if (!(in >> word >> n_features) || word != "features") throw fail("features");
    model.feature_names.resize(n_features);
    for (auto& n : model.feature_names)
        if (!(in >> n)) throw fail("feature name");
    if (!(in >> word >> n_trees) || word != "trees") throw fail("tree count");
    model.trees.resize(n_trees);
    for (size_t t = 0; t < n_trees; ++t) {
        size_t idx, n_nodes;
        if (!(in >> word >> idx >> n_nodes) || word != "tree" || idx != t) throw fail("tree block");
        Tree& tree = model.trees[t];
        tree.feature.assign(n_nodes, -1);
        tree.threshold.assign(n_nodes, 0.0);
        tree.left.assign(n_nodes, -1);
        tree.right.assign(n_nodes, -1);
        tree.value.assign(n_nodes, 0.0);
        tree.cover.assign(n_nodes, 0.0);
        for (size_t i = 0; i < n_nodes; ++i) {
            size_t id;
            std::string kind;
            int feature, l, r;
            double threshold, value, cover;
            if (!(in >> id >> kind >> feature >> threshold >> l >> r >> value >> cover) ||
                id >= n_nodes)
                throw fail("node line");
            if (kind == "leaf") {
                tree.value[id] = value;
            } else if (kind == "split") {
                tree.feature[id] = feature;
                tree.threshold[id] = threshold;
                tree.left[id] = l;
                tree.right[id] = r;
            } else {
                throw fail("node kind");
            }
            tree.cover[id] = cover;
        }
    }
    return model;
}

}  // namespace stride
