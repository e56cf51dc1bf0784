#include "stride/intervention.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "stride/csv.hpp"

namespace stride {

DirectionRule direction_rule_from_name(const std::string& s) {
    if (s == "spearman") return DirectionRule::spearman_zone;
    if (s == "global_slope") return DirectionRule::global_slope;
    throw ConfigError("unknown direction rule '" + s + "'");
}

const char* direction_rule_name(DirectionRule r) {
    return r == DirectionRule::spearman_zone ? "spearman" : "global_slope";
}

std::string Scenario::label() const {
    std::string s;
    for (Dim d : {Dim::C, Dim::P, Dim::L}) {
        if (!dimensions.count(d)) continue;
        if (!s.empty()) s += "+";
        s += dim_name(d);
    }
    return s;
}

namespace {

std::vector<double> ranks_with_ties(const std::vector<double>& v) {
    std::vector<int> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size(), 0.0);
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    return rank;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    size_t n = a.size();
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double num = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return num / std::sqrt(va * vb);
}

// least-squares slope of phi on value; only its sign is used
double slope(const std::vector<double>& value, const std::vector<double>& phi) {
    size_t n = value.size();
    double mx = std::accumulate(value.begin(), value.end(), 0.0) / n;
    double my = std::accumulate(phi.begin(), phi.end(), 0.0) / n;
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < n; ++i) {
        num += (value[i] - mx) * (phi[i] - my);
        den += (value[i] - mx) * (value[i] - mx);
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return 0.0;
    return pearson(ranks_with_ties(a), ranks_with_ties(b));
}

std::vector<int> rank_features(const ShapMatrix& shap, const std::set<Dim>& dimensions,
                               const std::vector<int>& zone_rows, int top_k) {
    if (zone_rows.empty()) throw ConfigError("rank_features: empty zone");
    SchemaOptions merged;
    merged.merge_o_into_c = true;  // O counts as C for intervention targeting

    struct Ranked {
        double mean_abs;
        std::string name;
        int index;
    };
    std::vector<Ranked> ranked;
    for (size_t f = 0; f < shap.feature_names.size(); ++f) {
        Dim d = classify_feature(shap.feature_names[f], merged);
        if (!dimensions.count(d)) continue;
        double acc = 0.0;
        for (int r : zone_rows) acc += std::abs(shap.values[r][f]);
        ranked.push_back({acc / zone_rows.size(), shap.feature_names[f], static_cast<int>(f)});
    }
    if (ranked.empty()) throw ConfigError("rank_features: no features in requested dimensions");
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.mean_abs != b.mean_abs) return a.mean_abs > b.mean_abs;
        return a.name < b.name;
    });
    if (top_k > 0 && static_cast<size_t>(top_k) < ranked.size()) ranked.resize(top_k);
    std::vector<int> out;
    for (const auto& r : ranked) out.push_back(r.index);
    return out;
}

PerturbResult perturb(const Dataset& X, const std::vector<int>& features, double intensity,
                      const ShapMatrix& shap, const std::vector<int>& zone_rows,
                      DirectionRule rule) {
    if (intensity < 0.0) throw ConfigError("perturb: intensity must be >= 0");
    PerturbResult out;
    out.X = X;
    if (intensity == 0.0 || zone_rows.empty()) return out;

    for (int f : features) {
        const std::string& name = shap.feature_names[f];
        int xcol = X.col(name);
        if (xcol < 0) throw ConfigError("perturb: feature '" + name + "' not in dataset");

        std::vector<double> value, phi;
        value.reserve(zone_rows.size());
        phi.reserve(zone_rows.size());
        for (int r : zone_rows) {
            value.push_back(X.cols[xcol][r]);
            phi.push_back(shap.values[r][f]);
        }
        double mean = std::accumulate(value.begin(), value.end(), 0.0) / value.size();
        double var = 0.0;
        for (double v : value) var += (v - mean) * (v - mean);
        double sd = std::sqrt(var / value.size());
        if (sd <= 1e-12) {
            out.skipped.push_back(name + ": zero variance in zone");
            continue;
        }
        double assoc = rule == DirectionRule::spearman_zone ? spearman(value, phi)
                                                            : slope(value, phi);
        double direction = assoc < 0.0 ? -1.0 : 1.0;  // beneficial direction
        double delta = direction * intensity * sd;
        for (int r : zone_rows) out.X.cols[xcol][r] += delta;
        out.applied_delta[name] = delta;
    }
    return out;
}

ScenarioOutcome simulate(const GbdtModel& model, const Scenario& scenario, const Dataset& X,
                         const ShapMatrix& shap, const NormalizationParams::Entry& response_norm,
                         const std::vector<int>& zone_rows) {
    ScenarioOutcome out;
    out.label = scenario.label();
    out.intensity = scenario.intensity;
    out.top_k = scenario.top_k;
    out.affected_segments = zone_rows.size();
    if (scenario.dimensions.empty()) throw ConfigError("simulate: scenario has no dimensions");
    if (zone_rows.empty()) {
        out.notes.push_back("empty zone: nothing to simulate");
        return out;
    }

    auto features = rank_features(shap, scenario.dimensions, zone_rows, scenario.top_k);
    bool any_impact = false;
    for (int f : features)
        for (int r : zone_rows)
            if (shap.values[r][f] != 0.0) any_impact = true;
    if (!any_impact) out.notes.push_back("ranked features carry zero attribution in this zone");

    PerturbResult pr =
        perturb(X, features, scenario.intensity, shap, zone_rows, scenario.direction);
    out.applied_delta = pr.applied_delta;
    out.notes.insert(out.notes.end(), pr.skipped.begin(), pr.skipped.end());
    out.n_features = pr.applied_delta.size();

    double mean_before = 0.0, mean_after = 0.0;
    double mean_before_std = 0.0, mean_after_std = 0.0;
    for (int r : zone_rows) {
        double before = model.predict_row(X, r);
        double after = model.predict_row(pr.X, r);
        mean_before_std += before;
        mean_after_std += after;
        mean_before += NormalizationParams::invert(response_norm, before);
        mean_after += NormalizationParams::invert(response_norm, after);
    }
    double n = static_cast<double>(zone_rows.size());
    mean_before /= n;
    mean_after /= n;
    out.improvement_std_scale = (mean_after_std - mean_before_std) / n;
    if (mean_before <= 1e-9) {
        out.degenerate_denominator = true;
        out.improvement_pct = mean_after - mean_before;  // absolute delta
        out.notes.push_back("density denominator ~0: reporting absolute delta");
    } else {
        out.improvement_pct = 100.0 * (mean_after - mean_before) / mean_before;
    }
    return out;
}

ScenarioGrid ScenarioGrid::standard() {
    ScenarioGrid grid;
    auto add = [&](std::set<Dim> dims, double intensity, int top_k) {
        Scenario s;
        s.dimensions = std::move(dims);
        s.intensity = intensity;
        s.top_k = top_k;
        grid.scenarios.push_back(s);
    };
    add({Dim::C}, 0.2, 5);
    add({Dim::P}, 0.2, 5);
    add({Dim::L}, 0.2, 5);
    add({Dim::C, Dim::P}, 0.2, 5);
    add({Dim::C, Dim::L}, 0.2, 5);
    add({Dim::L, Dim::P}, 0.2, 5);
    add({Dim::C, Dim::P, Dim::L}, 0.2, 5);
    add({Dim::C, Dim::P, Dim::L}, 0.2, 10);
    add({Dim::C, Dim::P, Dim::L}, 0.3, 10);
    add({Dim::C, Dim::P, Dim::L}, 0.3, 15);
    return grid;
}

GridReport scenario_grid(const GbdtModel& model, const ScenarioGrid& grid, const Dataset& X,
                         const ShapMatrix& shap, const NormalizationParams::Entry& response_norm,
                         const std::vector<int>& zone_rows) {
    GridReport report;
    for (const auto& scenario : grid.scenarios) {
        try {
            report.rows.push_back(
                simulate(model, scenario, X, shap, response_norm, zone_rows));
        } catch (const std::exception& e) {
            ScenarioOutcome failed;
            failed.label = scenario.label();
            failed.intensity = scenario.intensity;
            failed.top_k = scenario.top_k;
            failed.notes.push_back(std::string("error: ") + e.what());
            report.rows.push_back(std::move(failed));
        }
    }
    if (!zone_rows.empty()) {
        auto top = rank_features(shap, {Dim::C, Dim::P, Dim::L}, zone_rows, 10);
        for (int f : top) report.top10.push_back(shap.feature_names[f]);
    }
    return report;
}

void save_scenario_csv(const GridReport& report, const std::string& path) {
    CsvWriter w(path);
    w.row({"type", "intensity_pct", "n_variables", "improvement_pct", "improvement_std_scale",
           "affected_segments", "notes"});
    for (const auto& r : report.rows) {
        std::string notes;
        for (const auto& n : r.notes) notes += (notes.empty() ? "" : "; ") + n;
        w.row({r.label, fmt_double(r.intensity * 100.0), std::to_string(r.top_k),
               fmt_double(r.improvement_pct), fmt_double(r.improvement_std_scale),
               std::to_string(r.affected_segments), notes});
    }
}

void save_scenario_text(const GridReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path);
    out << "intervention scenario grid\n";
    out << "type | intensity | variables | improvement\n";
    char buf[160];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%-6s | %3.0f%% | %2d | %s%.2f%%\n", r.label.c_str(),
                      r.intensity * 100.0, r.top_k, r.degenerate_denominator ? "abs " : "",
                      r.improvement_pct);
        out << buf;
    }
    out << "top 10 variables:";
    for (const auto& name : report.top10) out << " " << name;
    out << "\n";
}

}  // namespace stride
