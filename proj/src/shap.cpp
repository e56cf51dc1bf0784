#include "stride/shap.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "stride/csv.hpp"

namespace stride {

namespace {

// One decision-path element of the TreeSHAP recursion: feature index, the
// fraction of cover-weighted paths that flow through when the feature is
// absent (zero_fraction), 1/0 when present (one_fraction), and the permutation
// weight held by each path subset size.
struct PathElement {
    int feature;
    double zero_fraction;
    double one_fraction;
    double pweight;
};

void extend_path(std::vector<PathElement>& path, double pz, double po, int pi) {
    int l = static_cast<int>(path.size());
    path.push_back({pi, pz, po, l == 0 ? 1.0 : 0.0});
    for (int i = l - 1; i >= 0; --i) {
        path[i + 1].pweight += po * path[i].pweight * (i + 1) / static_cast<double>(l + 1);
        path[i].pweight = pz * path[i].pweight * (l - i) / static_cast<double>(l + 1);
    }
}

void unwind_path(std::vector<PathElement>& path, int i) {
    int l = static_cast<int>(path.size()) - 1;
    double o = path[i].one_fraction;
    double z = path[i].zero_fraction;
    double n = path[l].pweight;
    for (int j = l - 1; j >= 0; --j) {
        if (o != 0.0) {
            double t = path[j].pweight;
            path[j].pweight = n * (l + 1) / (static_cast<double>(j + 1) * o);
            n = t - path[j].pweight * z * (l - j) / static_cast<double>(l + 1);
        } else {
            path[j].pweight = path[j].pweight * (l + 1) / (z * static_cast<double>(l - j));
        }
    }
    for (int j = i; j < l; ++j) {
        path[j].feature = path[j + 1].feature;
        path[j].zero_fraction = path[j + 1].zero_fraction;
        path[j].one_fraction = path[j + 1].one_fraction;
    }
    path.pop_back();
}

double unwound_sum(const std::vector<PathElement>& path, int i) {
    int l = static_cast<int>(path.size()) - 1;
    double o = path[i].one_fraction;
    double z = path[i].zero_fraction;
    double total = 0.0;
    if (o != 0.0) {
        double n = path[l].pweight;
        for (int j = l - 1; j >= 0; --j) {
            double t = n * (l + 1) / (static_cast<double>(j + 1) * o);
            total += t;
            n = path[j].pweight - t * z * (l - j) / static_cast<double>(l + 1);
        }
    } else {
        for (int j = l - 1; j >= 0; --j)
            total += path[j].pweight * (l + 1) / (z * static_cast<double>(l - j));
    }
    return total;
}

void tree_shap_recurse(const Tree& tree, const std::vector<double>& x, std::vector<double>& phi,
                       int node, std::vector<PathElement> path, double pz, double po, int pi) {
    extend_path(path, pz, po, pi);
    if (tree.is_leaf(node)) {
        for (int i = 1; i < static_cast<int>(path.size()); ++i) {
            double w = unwound_sum(path, i);
            phi[path[i].feature] +=
                w * (path[i].one_fraction - path[i].zero_fraction) * tree.value[node];
        }
        return;
    }
    int f = tree.feature[node];
    int hot = x[f] < tree.threshold[node] ? tree.left[node] : tree.right[node];
    int cold = hot == tree.left[node] ? tree.right[node] : tree.left[node];
    double iz = 1.0, io = 1.0;
    for (int i = 1; i < static_cast<int>(path.size()); ++i) {
        if (path[i].feature == f) {
            iz = path[i].zero_fraction;
            io = path[i].one_fraction;
            unwind_path(path, i);
            break;
        }
    }
    double parent_cover = tree.cover[node];
    tree_shap_recurse(tree, x, phi, hot, path, iz * tree.cover[hot] / parent_cover, io, f);
    tree_shap_recurse(tree, x, phi, cold, path, iz * tree.cover[cold] / parent_cover, 0.0, f);
}

void check_covers(const GbdtModel& model) {
    for (const auto& tree : model.trees)
        for (size_t n = 0; n < tree.size(); ++n)
            if (!(tree.cover[n] > 0.0))
                throw RuntimeError("model integrity: zero-cover tree node");
}

// f(S): absent features are marginalized by descending both children with
// cover proportions.
double eval_masked(const Tree& tree, int node, const std::vector<double>& x,
                   const std::vector<bool>& present) {
    if (tree.is_leaf(node)) return tree.value[node];
    int f = tree.feature[node];
    if (present[f]) {
        int next = x[f] < tree.threshold[node] ? tree.left[node] : tree.right[node];
        return eval_masked(tree, next, x, present);
    }
    double cl = tree.cover[tree.left[node]];
    double cr = tree.cover[tree.right[node]];
    return (cl * eval_masked(tree, tree.left[node], x, present) +
            cr * eval_masked(tree, tree.right[node], x, present)) /
           (cl + cr);
}

void run_rows(size_t n, int threads, const std::function<void(size_t)>& body) {
    if (threads <= 1 || n < 2) {
        for (size_t r = 0; r < n; ++r) body(r);
        return;
    }
    size_t workers = std::min<size_t>(threads, n);
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w]() {
            for (size_t r = w; r < n; r += workers) body(r);
        });
    for (auto& t : pool) t.join();
}

}  // namespace

double ShapMatrix::row_sum(size_t r) const {
    double acc = 0.0;
    for (double v : values[r]) acc += v;
    return acc;
}

ShapMatrix tree_shap(const GbdtModel& model, const Dataset& X, int threads) {
    for (const auto& name : model.feature_names)
        if (X.col(name) < 0)
            throw ConfigError("tree_shap: dataset is missing model feature '" + name + "'");
    check_covers(model);

    ShapMatrix out;
    out.feature_names = model.feature_names;
    out.base_value = model.base_score;
    for (const auto& tree : model.trees)
        out.base_value += model.learning_rate * tree.expected_value();

    // map model feature order onto dataset columns
    std::vector<int> col_of(model.feature_names.size());
    for (size_t f = 0; f < model.feature_names.size(); ++f)
        col_of[f] = X.col(model.feature_names[f]);

    out.values.assign(X.n_rows(), std::vector<double>(model.feature_names.size(), 0.0));
    run_rows(X.n_rows(), threads, [&](size_t r) {
        std::vector<double> x(model.feature_names.size());
        for (size_t f = 0; f < x.size(); ++f) x[f] = X.cols[col_of[f]][r];
        std::vector<double> phi(x.size(), 0.0);
        std::vector<double> tree_phi(x.size());
        for (const auto& tree : model.trees) {
            std::fill(tree_phi.begin(), tree_phi.end(), 0.0);
            tree_shap_recurse(tree, x, tree_phi, 0, {}, 1.0, 1.0, -1);
            for (size_t f = 0; f < x.size(); ++f) phi[f] += model.learning_rate * tree_phi[f];
        }
        out.values[r] = std::move(phi);
    });
    return out;
}

std::vector<double> shapley_oracle(const GbdtModel& model, const std::vector<double>& x) {
    size_t n_features = model.feature_names.size();
    if (n_features > 20)
        throw ConfigError("shapley_oracle: refusing " + std::to_string(n_features) +
                          " features (limit 20, factorial enumeration)");
    check_covers(model);

    double fact[22];
    fact[0] = 1.0;
    for (int i = 1; i < 22; ++i) fact[i] = fact[i - 1] * i;

    std::vector<double> phi(n_features, 0.0);
    std::vector<bool> present(n_features, false);
    for (const auto& tree : model.trees) {
        // Features the tree never splits on are dummy players for it, and
        // dummies do not shift anyone else's Shapley value, so the exact
        // summation can run on the used-feature subgame.
        std::set<int> used_set;
        for (size_t n = 0; n < tree.size(); ++n)
            if (!tree.is_leaf(static_cast<int>(n))) used_set.insert(tree.feature[n]);
        std::vector<int> used(used_set.begin(), used_set.end());
        int u = static_cast<int>(used.size());
        if (u == 0) continue;

        std::vector<double> v(static_cast<size_t>(1) << u);
        for (uint32_t mask = 0; mask < v.size(); ++mask) {
            std::fill(present.begin(), present.end(), false);
            for (int b = 0; b < u; ++b)
                if (mask & (1u << b)) present[used[b]] = true;
            v[mask] = eval_masked(tree, 0, x, present);
        }
        for (int b = 0; b < u; ++b) {
            uint32_t bit = 1u << b;
            double acc = 0.0;
            for (uint32_t mask = 0; mask < v.size(); ++mask) {
                if (mask & bit) continue;
                int s = __builtin_popcount(mask);
                double w = fact[s] * fact[u - s - 1] / fact[u];
                acc += w * (v[mask | bit] - v[mask]);
            }
            phi[used[b]] += model.learning_rate * acc;
        }
    }
    return phi;
}

GroupContribution group_shap(const ShapMatrix& shap, const SchemaOptions& opts) {
    GroupContribution out;
    for (const auto& name : shap.feature_names)
        out.feature_dim.push_back(classify_feature(name, opts));
    for (auto& v : out.phi) v.assign(shap.n_rows(), 0.0);

    double abs_total[4] = {0.0, 0.0, 0.0, 0.0};
    for (size_t r = 0; r < shap.n_rows(); ++r) {
        for (size_t f = 0; f < shap.feature_names.size(); ++f) {
            int d = static_cast<int>(out.feature_dim[f]);
            out.phi[d][r] += shap.values[r][f];
            abs_total[d] += std::abs(shap.values[r][f]);
        }
    }
    double denom = abs_total[0] + abs_total[1] + abs_total[2] + abs_total[3];
    if (denom > 0.0)
        for (int d = 0; d < 4; ++d) out.share[d] = abs_total[d] / denom;
    return out;
}

ShapMatrix ols_attributions(const OlsModel& model, const Dataset& X) {
    ShapMatrix out;
    out.feature_names = model.feature_names;
    size_t n = X.n_rows();
    std::vector<double> means(model.coef.size(), 0.0);
    for (size_t c = 0; c < model.coef.size(); ++c) {
        int col = X.col(model.feature_names[c]);
        if (col < 0)
            throw ConfigError("ols_attributions: missing feature '" + model.feature_names[c] +
                              "'");
        for (size_t r = 0; r < n; ++r) means[c] += X.cols[col][r];
        means[c] /= n ? static_cast<double>(n) : 1.0;
    }
    out.base_value = model.intercept;
    for (size_t c = 0; c < model.coef.size(); ++c) out.base_value += model.coef[c] * means[c];
    out.values.assign(n, std::vector<double>(model.coef.size(), 0.0));
    for (size_t c = 0; c < model.coef.size(); ++c) {
        int col = X.col(model.feature_names[c]);
        for (size_t r = 0; r < n; ++r)
            out.values[r][c] = model.coef[c] * (X.cols[col][r] - means[c]);
    }
    return out;
}

std::vector<std::pair<double, double>> dependence_table(const ShapMatrix& shap, const Dataset& X,
                                                        const std::string& feature) {
    int shap_col = -1;
    for (size_t f = 0; f < shap.feature_names.size(); ++f)
        if (shap.feature_names[f] == feature) shap_col = static_cast<int>(f);
    int x_col = X.col(feature);
    if (shap_col < 0 || x_col < 0)
        throw ConfigError("dependence_table: unknown feature '" + feature + "'");
    std::vector<std::pair<double, double>> out;
    out.reserve(shap.n_rows());
    for (size_t r = 0; r < shap.n_rows(); ++r)
        out.push_back({X.cols[x_col][r], shap.values[r][shap_col]});
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

void save_shap_csv(const std::vector<std::string>& segment_ids, const ShapMatrix& shap,
                   const GroupContribution& groups, const std::string& path) {
    CsvWriter w(path);
    std::vector<std::string> header{"segment_id", "base_value"};
    for (const auto& n : shap.feature_names) header.push_back("phi_" + n);
    header.insert(header.end(), {"phi_C", "phi_O", "phi_P", "phi_L"});
    w.row(header);
    for (size_t r = 0; r < shap.n_rows(); ++r) {
        std::vector<std::string> row{segment_ids[r], fmt_double(shap.base_value)};
        for (double v : shap.values[r]) row.push_back(fmt_double(v));
        for (int d = 0; d < 4; ++d) row.push_back(fmt_double(groups.phi[d][r]));
        w.row(row);
    }
}

void save_shares_report(const GroupContribution& groups, bool merged_o,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path);
    out << "group shares of mean |phi|\n";
    out << "o_merged_into_c " << (merged_o ? "true" : "false") << "\n";
    for (int d = 0; d < 4; ++d)
        out << "share_" << dim_name(static_cast<Dim>(d)) << " " << fmt_double(groups.share[d])
            << "\n";
}

}  // namespace stride
