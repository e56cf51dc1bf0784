#include "stride/typology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "stride/csv.hpp"

namespace stride {

double quantile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw ConfigError("quantile of empty vector");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile q out of [0,1]");
    std::sort(values.begin(), values.end());
    double h = q * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

ScoreMode score_mode_from_name(const std::string& s) {
    if (s == "negated_sum") return ScoreMode::negated_sum;
    if (s == "negative_only") return ScoreMode::negative_only;
    throw ConfigError("unknown typology score mode '" + s + "'");
}

const char* score_mode_name(ScoreMode m) {
    return m == ScoreMode::negated_sum ? "negated_sum" : "negative_only";
}

DeprivationScores deprivation_scores(const ShapMatrix& shap, ScoreMode mode) {
    DeprivationScores out;
    out.mode = mode;
    size_t n = shap.n_rows();
    out.d_c.assign(n, 0.0);
    out.d_p.assign(n, 0.0);
    out.d_l.assign(n, 0.0);

    SchemaOptions merged;
    merged.merge_o_into_c = true;  // typology is three-way
    std::vector<Dim> dims;
    for (const auto& name : shap.feature_names) dims.push_back(classify_feature(name, merged));

    for (size_t r = 0; r < n; ++r) {
        for (size_t f = 0; f < dims.size(); ++f) {
            double phi = shap.values[r][f];
            double contrib = mode == ScoreMode::negated_sum ? -phi : std::max(0.0, -phi);
            switch (dims[f]) {
                case Dim::C: out.d_c[r] += contrib; break;
                case Dim::P: out.d_p[r] += contrib; break;
                case Dim::L: out.d_l[r] += contrib; break;
                case Dim::O: break;  // unreachable under merge
            }
        }
    }
    return out;
}

const char* type_label_name(TypeLabel t) {
    switch (t) {
        case TypeLabel::None: return "None";
        case TypeLabel::COnly: return "C-only";
        case TypeLabel::POnly: return "P-only";
        case TypeLabel::LOnly: return "L-only";
        case TypeLabel::CP: return "CP";
        case TypeLabel::CL: return "CL";
        case TypeLabel::PL: return "PL";
        case TypeLabel::CPL: return "CPL";
    }
    return "?";
}

namespace {

TypeLabel label_from_flags(bool c, bool p, bool l) {
    if (c && p && l) return TypeLabel::CPL;
    if (c && p) return TypeLabel::CP;
    if (c && l) return TypeLabel::CL;
    if (p && l) return TypeLabel::PL;
    if (c) return TypeLabel::COnly;
    if (p) return TypeLabel::POnly;
    if (l) return TypeLabel::LOnly;
    return TypeLabel::None;
}

TypeLabel label_from_name(const std::string& s) {
    for (int i = 0; i < 8; ++i) {
        auto t = static_cast<TypeLabel>(i);
        if (s == type_label_name(t)) return t;
    }
    throw ConfigError("unknown typology label '" + s + "'");
}

}  // namespace

TypologyResult classify_typology(const DeprivationScores& scores, double q) {
    size_t n = scores.d_c.size();
    if (n < 5) throw ConfigError("classify_typology: need at least 5 segments");
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("classify_typology: q must be in (0,1)");
    for (const auto* v : {&scores.d_c, &scores.d_p, &scores.d_l})
        for (double x : *v)
            if (!std::isfinite(x)) throw ConfigError("classify_typology: non-finite score");

    TypologyResult out;
    out.scores = scores;
    out.q = q;
    out.threshold_c = quantile_linear(scores.d_c, q);
    out.threshold_p = quantile_linear(scores.d_p, q);
    out.threshold_l = quantile_linear(scores.d_l, q);
    out.labels.resize(n);
    for (size_t i = 0; i < n; ++i)
        out.labels[i] = label_from_flags(scores.d_c[i] > out.threshold_c,
                                         scores.d_p[i] > out.threshold_p,
                                         scores.d_l[i] > out.threshold_l);
    return out;
}

void save_typology_csv(const std::vector<std::string>& segment_ids, const TypologyResult& t,
                       const std::string& path) {
    CsvWriter w(path);
    w.row({"segment_id", "D_C", "D_P", "D_L", "label"});
    for (size_t i = 0; i < t.labels.size(); ++i)
        w.row({segment_ids[i], fmt_double(t.scores.d_c[i]), fmt_double(t.scores.d_p[i]),
               fmt_double(t.scores.d_l[i]), type_label_name(t.labels[i])});
}

void save_typology_report(const TypologyResult& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path);
    out << "deprivation typology\n";
    out << "score_mode " << score_mode_name(t.scores.mode) << "\n";
    out << "quantile " << fmt_double(t.q) << "\n";
    out << "threshold_C " << fmt_double(t.threshold_c) << "\n";
    out << "threshold_P " << fmt_double(t.threshold_p) << "\n";
    out << "threshold_L " << fmt_double(t.threshold_l) << "\n";
    std::map<std::string, size_t> counts;
    for (auto l : t.labels) ++counts[type_label_name(l)];
    for (int i = 0; i < 8; ++i) {
        const char* name = type_label_name(static_cast<TypeLabel>(i));
        out << "count_" << name << " " << counts[name] << "\n";
    }
}

TypologyResult load_typology_csv(const std::string& path, std::vector<std::string>* ids) {
    CsvTable t = read_csv(path);
    int idc = t.require_col("segment_id", path);
    int cc = t.require_col("D_C", path);
    int pc = t.require_col("D_P", path);
    int lc = t.require_col("D_L", path);
    int lbl = t.require_col("label", path);
    TypologyResult out;
    for (const auto& row : t.rows) {
        if (ids) ids->push_back(row[idc]);
        out.scores.d_c.push_back(parse_double(row[cc], path));
        out.scores.d_p.push_back(parse_double(row[pc], path));
        out.scores.d_l.push_back(parse_double(row[lc], path));
        out.labels.push_back(label_from_name(row[lbl]));
    }
    return out;
}

}  // namespace stride
