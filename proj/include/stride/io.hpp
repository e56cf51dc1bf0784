// File formats: GeoJSON LineString segments, CSV segments with WKT geometry,
// feature-table CSV (first column segment_id, prefix-schema headers, empty
// cell = missing) and the normalization sidecar.
#pragma once

#include <string>
#include <vector>

#include "stride/core.hpp"

namespace stride {

std::vector<RoadSegment> load_segments_geojson(const std::string& path);
std::vector<RoadSegment> load_segments_csv(const std::string& path);
std::vector<RoadSegment> load_segments(const std::string& path);  // picks by extension
void save_segments_geojson(const std::vector<RoadSegment>& segments, const std::string& path);
void save_segments_csv(const std::vector<RoadSegment>& segments, const std::string& path);

std::string wkt_linestring(const std::vector<Point>& pts);
std::vector<Point> parse_wkt_linestring(const std::string& wkt);

FeatureTable load_feature_table(const std::string& path);
void save_feature_table(const FeatureTable& table, const std::string& path);

NormalizationParams load_norm_params(const std::string& path);
void save_norm_params(const NormalizationParams& params, const std::string& path);

// Simple x/y point files.
struct XyRow {
    double x, y;
    std::string tag;  // category / class, when the format has one
    double value = 0.0;
};
std::vector<std::vector<Point>> load_trajectories_csv(const std::string& path);
void save_trajectories_csv(const std::vector<std::vector<Point>>& trajectories,
                           const std::string& path);

struct PoiRecord {
    double x, y;
    std::string category;
};
std::vector<PoiRecord> load_pois_csv(const std::string& path);
void save_pois_csv(const std::vector<PoiRecord>& pois, const std::string& path);

struct LanduseCell {
    double x, y;          // cell center
    std::string landuse;  // class label
    double cell_size_m;
};
std::vector<LanduseCell> load_landuse_csv(const std::string& path);
void save_landuse_csv(const std::vector<LanduseCell>& cells, const std::string& path);

struct PopulationCell {
    double x, y;  // cell center
    double cell_size_m;
    double population;
};
std::vector<PopulationCell> load_population_csv(const std::string& path);
void save_population_csv(const std::vector<PopulationCell>& cells, const std::string& path);

uint64_t hash_file(const std::string& path);

}  // namespace stride
