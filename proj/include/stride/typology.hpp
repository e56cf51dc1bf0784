// Deprivation typology: quantile-thresholded group deprivation scores mapped
// onto the eight-way pattern language (None, C/P/L-only, CP, CL, PL, CPL).
#pragma once

#include <string>
#include <vector>

#include "stride/shap.hpp"

namespace stride {

// Empirical quantile with the linear-interpolation convention:
// h = q*(n-1), value = v[floor(h)] + frac(h)*(v[floor(h)+1] - v[floor(h)]).
double quantile_linear(std::vector<double> values, double q);

enum class ScoreMode { negated_sum, negative_only };

ScoreMode score_mode_from_name(const std::string& s);
const char* score_mode_name(ScoreMode m);

struct DeprivationScores {
    std::vector<double> d_c, d_p, d_l;
    ScoreMode mode = ScoreMode::negated_sum;
};

// Three-way scheme: O merges into C. negated_sum takes D_d = -phi_d;
// negative_only sums only the negative member contributions.
DeprivationScores deprivation_scores(const ShapMatrix& shap,
                                     ScoreMode mode = ScoreMode::negated_sum);

enum class TypeLabel : uint8_t { None = 0, COnly, POnly, LOnly, CP, CL, PL, CPL };

const char* type_label_name(TypeLabel t);

struct TypologyResult {
    std::vector<TypeLabel> labels;
    DeprivationScores scores;
    double threshold_c = 0.0, threshold_p = 0.0, threshold_l = 0.0;
    double q = 0.8;
};

// Per dimension, threshold = empirical q-quantile of that dimension's
// scores; exceedance is strict, ties fall below. Refuses fewer than 5
// segments (the quantile is meaningless).
TypologyResult classify_typology(const DeprivationScores& scores, double q = 0.8);

void save_typology_csv(const std::vector<std::string>& segment_ids, const TypologyResult& t,
                       const std::string& path);
void save_typology_report(const TypologyResult& t, const std::string& path);
TypologyResult load_typology_csv(const std::string& path, std::vector<std::string>* ids = nullptr);

}  // namespace stride
