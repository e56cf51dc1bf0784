#include "stride/core.hpp"

#include <cmath>

namespace stride {

Dim classify_feature(const std::string& name, const SchemaOptions& opts) {
    if (name.empty()) throw ConfigError("empty feature name");
    if (name.rfind("C_D_", 0) == 0) return opts.merge_o_into_c ? Dim::C : Dim::O;
    if (name.rfind("C_", 0) == 0) return Dim::C;
    if (name.rfind("P_", 0) == 0) return Dim::P;
    if (name.rfind("L_", 0) == 0) return Dim::L;
    throw ConfigError("column '" + name + "' has no C_/C_D_/P_/L_ prefix");
}

bool is_response_column(const std::string& name) {
    return name.rfind("log_d", 0) == 0 || name.rfind("d10_", 0) == 0 ||
           name.rfind("d20_", 0) == 0 || name.rfind("d30_", 0) == 0;
}

void FeatureTable::add_column(const std::string& name, std::vector<double> values,
                              std::vector<uint8_t> mask) {
    if (values.size() != n_rows())
        throw ConfigError("column '" + name + "': " + std::to_string(values.size()) +
                          " values for " + std::to_string(n_rows()) + " segments");
    if (mask.empty()) mask.assign(values.size(), 0);
    if (mask.size() != values.size())
        throw ConfigError("column '" + name + "': mask length mismatch");
    if (col(name) >= 0) throw ConfigError("duplicate column '" + name + "'");
    names.push_back(name);
    columns.push_back(std::move(values));
    missing.push_back(std::move(mask));
}

std::vector<ValidationIssue> validate_dataset(const FeatureTable& table,
                                              const std::vector<RoadSegment>& segments) {
    std::vector<ValidationIssue> issues;
    if (!segments.empty() && table.n_rows() != segments.size()) {
        issues.push_back({"row_count", "table has " + std::to_string(table.n_rows()) +
                                           " rows, segments " + std::to_string(segments.size())});
    }
    for (size_t c = 0; c < table.n_cols(); ++c) {
        const auto& name = table.names[c];
        if (!is_response_column(name)) {
            try {
                classify_feature(name);
            } catch (const ConfigError& e) {
                issues.push_back({"unknown_column", e.what()});
            }
        }
        size_t n_missing = 0;
        size_t n_bad = 0;
        for (size_t r = 0; r < table.n_rows(); ++r) {
            if (table.missing[c][r]) {
                ++n_missing;
            } else if (!std::isfinite(table.columns[c][r])) {
                ++n_bad;
            }
        }
        if (n_missing)
            issues.push_back({"missing_cells",
                              name + ": " + std::to_string(n_missing) + " missing"});
        if (n_bad)
            issues.push_back({"non_finite",
                              name + ": " + std::to_string(n_bad) + " non-finite"});
    }
    return issues;
}

const char* norm_kind_name(NormKind k) {
    switch (k) {
        case NormKind::log1p_zscore: return "log1p_zscore";
        case NormKind::zscore: return "zscore";
        case NormKind::none: return "none";
    }
    return "?";
}

NormKind norm_kind_from_name(const std::string& s) {
    if (s == "log1p_zscore") return NormKind::log1p_zscore;
    if (s == "zscore") return NormKind::zscore;
    if (s == "none") return NormKind::none;
    throw ConfigError("unknown normalization kind '" + s + "'");
}

const NormalizationParams::Entry& NormalizationParams::require(const std::string& name) const {
    auto it = per_feature.find(name);
    if (it == per_feature.end())
        throw ConfigError("no normalization params for '" + name + "'");
    return it->second;
}

double NormalizationParams::apply(const Entry& e, double v) {
    if (e.degenerate) return 0.0;
    switch (e.kind) {
        case NormKind::log1p_zscore: return (std::log1p(v) - e.mean) / e.std;
        case NormKind::zscore: return (v - e.mean) / e.std;
        case NormKind::none: return v;
    }
    return v;
}

double NormalizationParams::invert(const Entry& e, double v) {
    switch (e.kind) {
        case NormKind::log1p_zscore: {
            // mean is stored on the log1p scale, also for degenerate columns
            double t = e.degenerate ? e.mean : v * e.std + e.mean;
            return std::expm1(t);
        }
        case NormKind::zscore:
            return e.degenerate ? e.mean : v * e.std + e.mean;
        case NormKind::none:
            return v;
    }
    return v;
}

}  // namespace stride
