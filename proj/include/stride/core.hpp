// Shared data model: road segments, the prefix-based triad schema, the
// feature table that flows through every stage, and dataset validation.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stride/error.hpp"
#include "stride/geometry.hpp"

namespace stride {

// Lefebvre triad dimensions. O (objective land use, the C_D_* family) is a
// first-class fourth group that can be folded back into C for three-way
// analyses.
enum class Dim : uint8_t { C = 0, O = 1, P = 2, L = 3 };

inline const char* dim_name(Dim d) {
    switch (d) {
        case Dim::C: return "C";
        case Dim::O: return "O";
        case Dim::P: return "P";
        case Dim::L: return "L";
    }
    return "?";
}

struct SchemaOptions {
    bool merge_o_into_c = false;
};

// Total prefix rule: "C_D_*" -> O, other "C_*" -> C, "P_*" -> P, "L_*" -> L.
// Throws ConfigError naming the column for anything else.
Dim classify_feature(const std::string& name, const SchemaOptions& opts = {});

// True for the response family (log_d10_norm / log_d20_norm / log_d30_norm
// and their raw precursors), which is never a model input.
bool is_response_column(const std::string& name);

struct RoadSegment {
    std::string id;
    std::vector<Point> geometry;  // >= 2 points, projected meters
    double length_m = 0.0;
    int from_node = -1;  // assigned by build_graph
    int to_node = -1;
    bool is_loop = false;
    std::string district;
};

// Column-oriented table of per-segment features. Missing cells are tracked
// by an explicit mask; log transforms make sentinel values unsafe.
struct FeatureTable {
    std::vector<std::string> segment_ids;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;     // [col][row]
    std::vector<std::vector<uint8_t>> missing;    // [col][row], 1 = missing
    std::string response_name;
    std::vector<double> response;

    size_t n_rows() const { return segment_ids.size(); }
    size_t n_cols() const { return names.size(); }

    int col(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        return -1;
    }
    int require_col(const std::string& name) const {
        int c = col(name);
        if (c < 0) throw ConfigError("feature table: no column '" + name + "'");
        return c;
    }
    void add_column(const std::string& name, std::vector<double> values,
                    std::vector<uint8_t> mask = {});
    bool any_missing(size_t c) const {
        for (uint8_t m : missing[c])
            if (m) return true;
        return false;
    }
};

struct ValidationIssue {
    std::string kind;    // row_count | unknown_column | missing_cells | non_finite
    std::string detail;
};

// Reporting only; an empty result means the table is pipeline-ready.
std::vector<ValidationIssue> validate_dataset(const FeatureTable& table,
                                              const std::vector<RoadSegment>& segments);

struct GridCell {
    int id = -1;
    int row = 0, col = 0;
    double origin_x = 0.0, origin_y = 0.0;  // lower-left corner
    double size_m = 200.0;
    double population = 0.0;
};

enum class NormKind : uint8_t { log1p_zscore, zscore, none };

const char* norm_kind_name(NormKind k);
NormKind norm_kind_from_name(const std::string& s);

// Per-feature transform record; stores enough to invert exactly.
struct NormalizationParams {
    struct Entry {
        NormKind kind = NormKind::none;
        double mean = 0.0;
        double std = 1.0;
        bool degenerate = false;  // constant column, passed through as zeros
    };
    std::map<std::string, Entry> per_feature;

    const Entry& require(const std::string& name) const;
    static double apply(const Entry& e, double v);
    static double invert(const Entry& e, double v);
};

}  // namespace stride
