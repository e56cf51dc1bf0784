// What-if intervention simulation: perturb top-attributed features within
// chosen triad dimensions for a target zone, re-predict, and report the
// improvement on the back-transformed density scale. SHAP only ranks and
// orients the perturbation; improvements come solely from re-evaluating the
// model.
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "stride/core.hpp"
#include "stride/shap.hpp"

namespace stride {

enum class DirectionRule { spearman_zone, global_slope };

DirectionRule direction_rule_from_name(const std::string& s);
const char* direction_rule_name(DirectionRule r);

struct Scenario {
    std::set<Dim> dimensions;        // subset of {C, P, L}; O counts as C
    double intensity = 0.2;          // delta in (0, 1]
    int top_k = 5;
    DirectionRule direction = DirectionRule::spearman_zone;
    std::string label() const;       // "C+P+L" style
};

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Feature indices (into shap.feature_names) of the chosen dimensions ranked
// by mean |phi| over the zone rows, ties broken lexicographically by name,
// truncated to top_k.
std::vector<int> rank_features(const ShapMatrix& shap, const std::set<Dim>& dimensions,
                               const std::vector<int>& zone_rows, int top_k);

struct PerturbResult {
    Dataset X;                                   // copy with zone rows shifted
    std::map<std::string, double> applied_delta; // signed shift per feature
    std::vector<std::string> skipped;            // zero-variance features etc.
};

// Per feature k: direction = sign of the value-phi association over the
// zone, magnitude = intensity * zone standard deviation of the feature.
// Rows outside the zone are untouched.
PerturbResult perturb(const Dataset& X, const std::vector<int>& features, double intensity,
                      const ShapMatrix& shap, const std::vector<int>& zone_rows,
                      DirectionRule rule = DirectionRule::spearman_zone);

struct ScenarioOutcome {
    std::string label;
    double intensity = 0.0;
    int top_k = 0;
    size_t n_features = 0;
    size_t affected_segments = 0;
    double improvement_pct = 0.0;       // on the back-transformed density scale
    double improvement_std_scale = 0.0; // mean prediction delta, standardized scale
    bool degenerate_denominator = false;
    std::map<std::string, double> applied_delta;
    std::vector<std::string> notes;
};

// Predictions are inverse-transformed through the response's normalization
// record (undo z-score, then expm1) before the percent change is formed.
ScenarioOutcome simulate(const GbdtModel& model, const Scenario& scenario, const Dataset& X,
                         const ShapMatrix& shap, const NormalizationParams::Entry& response_norm,
                         const std::vector<int>& zone_rows);

struct ScenarioGrid {
    std::vector<Scenario> scenarios;
    static ScenarioGrid standard();  // 7 single/combo rows at 20%/5 plus 3 deeper rows
};

struct GridReport {
    std::vector<ScenarioOutcome> rows;
    std::vector<std::string> top10;  // zone-ranked variables across all dimensions
};

GridReport scenario_grid(const GbdtModel& model, const ScenarioGrid& grid, const Dataset& X,
                         const ShapMatrix& shap, const NormalizationParams::Entry& response_norm,
                         const std::vector<int>& zone_rows);

void save_scenario_csv(const GridReport& report, const std::string& path);
void save_scenario_text(const GridReport& report, const std::string& path);

}  // namespace stride
