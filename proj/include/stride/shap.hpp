// Exact SHAP attribution for tree ensembles: polynomial-time path-dependent
// TreeSHAP with cover-weighted conditional expectations, a brute-force
// subset-enumeration oracle using the identical marginalization, and the
// triadic C/O/P/L aggregation.
#pragma once

#include <string>
#include <vector>

#include "stride/core.hpp"
#include "stride/model.hpp"

namespace stride {

struct ShapMatrix {
    double base_value = 0.0;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> values;  // [row][feature]

    size_t n_rows() const { return values.size(); }
    double row_sum(size_t r) const;
};

// Per-row, per-feature attributions; base_value + row sum reproduces the
// model prediction (local accuracy). Scaled by the learning rate and summed
// over trees; base_value = base_score + lr * sum_t E[tree_t] under cover
// weighting. Zero-cover nodes are a model-integrity error.
ShapMatrix tree_shap(const GbdtModel& model, const Dataset& X, int threads = 1);

// Exact factorial-weighted Shapley summation. f(S) marginalizes absent
// features by descending both children with cover proportions, the same
// convention tree_shap uses. Refuses models with more than 20 features.
std::vector<double> shapley_oracle(const GbdtModel& model, const std::vector<double>& x);

struct GroupContribution {
    // per-segment group sums, indexed by Dim (C, O, P, L)
    std::vector<double> phi[4];
    // dataset-level shares of mean |phi|, summing to 1
    double share[4] = {0.0, 0.0, 0.0, 0.0};
    std::vector<Dim> feature_dim;  // resolved dimension per feature
};

GroupContribution group_shap(const ShapMatrix& shap, const SchemaOptions& opts = {});

// (feature value, phi) pairs sorted by value; export substrate for
// dependence plots.
std::vector<std::pair<double, double>> dependence_table(const ShapMatrix& shap,
                                                        const Dataset& X,
                                                        const std::string& feature);

// Cross-check utility: linear-model attributions beta_i * (x_i - mean_i),
// which are the exact Shapley values of an additive linear model.
ShapMatrix ols_attributions(const OlsModel& model, const Dataset& X);

void save_shap_csv(const std::vector<std::string>& segment_ids, const ShapMatrix& shap,
                   const GroupContribution& groups, const std::string& path);
void save_shares_report(const GroupContribution& groups, bool merged_o,
                        const std::string& path);

}  // namespace stride
