// Feature engineering: trajectory resampling, buffer-based density matching,
// POI entropy, land-use composition, network interpolation of missing cells,
// log/z-score normalization and 200 m grid harmonization.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "stride/core.hpp"
#include "stride/graph.hpp"
#include "stride/io.hpp"

namespace stride {

// Points on the polyline at arc-length multiples of interval_m, endpoints
// included; the final gap may be shorter. A single input point passes
// through unchanged (degenerate trajectory).
std::vector<Point> resample_trajectory(const std::vector<Point>& points,
                                       double interval_m = 5.0);

// Bucket-grid index over segment polylines for radius queries.
class SegmentIndex {
public:
    SegmentIndex(const std::vector<RoadSegment>& segments, double cell_m = 50.0);
    // Candidate segment ids whose distance to p could be <= radius.
    std::vector<int> candidates(const Point& p, double radius) const;
    const std::vector<RoadSegment>& segments() const { return segments_; }

private:
    const std::vector<RoadSegment>& segments_;
    double cell_m_;
    double min_x_ = 0.0, min_y_ = 0.0;
    int cols_ = 0, rows_ = 0;
    std::vector<std::vector<int>> buckets_;
    mutable std::vector<int> stamp_;
    mutable int stamp_id_ = 0;
};

struct DensityResult {
    std::vector<double> radii;
    std::vector<std::vector<double>> counts;   // [radius][segment]
    std::vector<std::vector<double>> density;  // counts / length_m
};

// Counts resampled points within each buffer radius of every segment,
// normalized by segment length. A point may count toward several segments.
DensityResult match_density(const std::vector<Point>& points,
                            const std::vector<RoadSegment>& segments,
                            const std::vector<double>& radii = {10.0, 20.0, 30.0});

// In-place standardization; returns the inversion record. Population
// moments, computed after the log for the log1p kind. Constant columns are
// flagged degenerate and zeroed rather than divided.
NormalizationParams::Entry normalize_column(std::vector<double>& values, NormKind kind,
                                            const std::string& name);

// Shannon entropy of POI category proportions within radius_m of the
// segment polyline. No POIs in range -> 0 (flagged by the caller via count).
double poi_entropy(const std::vector<PoiRecord>& pois, const RoadSegment& segment,
                   double radius_m = 300.0, size_t* n_in_range = nullptr);
std::vector<double> poi_entropy_all(const std::vector<PoiRecord>& pois,
                                    const std::vector<RoadSegment>& segments,
                                    double radius_m = 300.0);

extern const std::vector<std::string> kLanduseClasses;

// Area-weighted class proportions among land-use cells whose center lies
// within radius_m of the segment. Sums to 1 when any cell is in range,
// otherwise all zero with in_range=false. Unknown class labels are errors.
std::map<std::string, double> landuse_composition(const std::vector<LanduseCell>& cells,
                                                  const RoadSegment& segment,
                                                  double radius_m = 100.0,
                                                  bool* in_range = nullptr);
// Batch version returning one column per class, named C_D_<class>.
std::map<std::string, std::vector<double>> landuse_composition_all(
    const std::vector<LanduseCell>& cells, const std::vector<RoadSegment>& segments,
    double radius_m = 100.0);

// Segment adjacency (shared graph node) for interpolation.
std::vector<std::vector<int>> segment_adjacency(const StreetGraph& graph);

struct InterpolationStats {
    int rounds_used = 0;
    size_t filled_by_neighbors = 0;
    size_t filled_by_global_mean = 0;
};

// Jacobi-style rounds: every missing cell with at least one known neighbor
// takes the mean of known neighbor values, simultaneously; freshly filled
// values count as known in the next round. Leftovers get the global mean of
// the originally known values.
InterpolationStats interpolate_missing(const std::vector<std::vector<int>>& adjacency,
                                       std::vector<double>& column,
                                       std::vector<uint8_t>& mask, int max_rounds = 5);

struct GridSpec {
    double origin_x = 0.0, origin_y = 0.0;
    double size_m = 200.0;
    int rows = 0, cols = 0;

    int cell_id(int row, int col) const { return row * cols + col; }
    bool contains(int row, int col) const {
        return row >= 0 && row < rows && col >= 0 && col < cols;
    }
    size_t n_cells() const { return static_cast<size_t>(rows) * cols; }
};

struct GridTable {
    GridSpec spec;
    std::vector<GridCell> cells;                       // row-major
    std::vector<uint8_t> has_supply;                   // any segment length in cell
    std::map<std::string, std::vector<double>> aggregates;
    std::vector<std::vector<int>> cell_segments;       // segment indices per cell
};

// Length-weighted feature means per cell plus area-weighted population
// re-aggregation from the raster. The lattice covers both the segments and
// the raster so population mass is conserved.
GridTable aggregate_grid(const std::vector<RoadSegment>& segments,
                         const std::vector<std::string>& feature_names,
                         const std::vector<const std::vector<double>*>& feature_columns,
                         const std::vector<PopulationCell>& population_raster,
                         double cell_size_m = 200.0);

}  // namespace stride
