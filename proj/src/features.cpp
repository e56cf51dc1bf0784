#include "stride/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace stride {

std::vector<Point> resample_trajectory(const std::vector<Point>& points, double interval_m) {
    if (!(interval_m > 0.0)) throw ConfigError("resample interval must be > 0");
    if (points.empty()) return {};
    if (points.size() == 1) return points;  // passthrough; caller may warn
    double total = polyline_length(points);
    std::vector<Point> out;
    for (double s = 0.0; s < total; s += interval_m) out.push_back(polyline_point_at(points, s));
    out.push_back(points.back());
    return out;
}

SegmentIndex::SegmentIndex(const std::vector<RoadSegment>& segments, double cell_m)
    : segments_(segments), cell_m_(cell_m) {
    Bbox box;
    for (const auto& s : segments) box.add(s.geometry);
    if (!box.valid()) box = Bbox{0, 0, 0, 0};
    min_x_ = box.min_x;
    min_y_ = box.min_y;
    cols_ = std::max(1, static_cast<int>(std::floor((box.max_x - min_x_) / cell_m_)) + 1);
    rows_ = std::max(1, static_cast<int>(std::floor((box.max_y - min_y_) / cell_m_)) + 1);
    buckets_.assign(static_cast<size_t>(rows_) * cols_, {});
    for (size_t i = 0; i < segments.size(); ++i) {
        Bbox sb;
        sb.add(segments[i].geometry);
        int c0 = std::clamp(static_cast<int>(std::floor((sb.min_x - min_x_) / cell_m_)), 0, cols_ - 1);
        int c1 = std::clamp(static_cast<int>(std::floor((sb.max_x - min_x_) / cell_m_)), 0, cols_ - 1);
        int r0 = std::clamp(static_cast<int>(std::floor((sb.min_y - min_y_) / cell_m_)), 0, rows_ - 1);
        int r1 = std::clamp(static_cast<int>(std::floor((sb.max_y - min_y_) / cell_m_)), 0, rows_ - 1);
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c)
                buckets_[static_cast<size_t>(r) * cols_ + c].push_back(static_cast<int>(i));
    }
    stamp_.assign(segments.size(), -1);
}

std::vector<int> SegmentIndex::candidates(const Point& p, double radius) const {
    std::vector<int> out;
    int c0 = std::clamp(static_cast<int>(std::floor((p.x - radius - min_x_) / cell_m_)), 0, cols_ - 1);
    int c1 = std::clamp(static_cast<int>(std::floor((p.x + radius - min_x_) / cell_m_)), 0, cols_ - 1);
    int r0 = std::clamp(static_cast<int>(std::floor((p.y - radius - min_y_) / cell_m_)), 0, rows_ - 1);
    int r1 = std::clamp(static_cast<int>(std::floor((p.y + radius - min_y_) / cell_m_)), 0, rows_ - 1);
    ++stamp_id_;
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
            for (int id : buckets_[static_cast<size_t>(r) * cols_ + c])
                if (stamp_[id] != stamp_id_) {
                    stamp_[id] = stamp_id_;
                    out.push_back(id);
                }
    return out;
}

DensityResult match_density(const std::vector<Point>& points,
                            const std::vector<RoadSegment>& segments,
                            const std::vector<double>& radii) {
    for (double r : radii)
        if (!(r > 0.0)) throw ConfigError("density radius must be > 0");
    DensityResult res;
    res.radii = radii;
    res.counts.assign(radii.size(), std::vector<double>(segments.size(), 0.0));
    res.density.assign(radii.size(), std::vector<double>(segments.size(), 0.0));
    double max_r = *std::max_element(radii.begin(), radii.end());
    SegmentIndex index(segments, std::max(25.0, max_r));
    for (const auto& p : points) {
        for (int sid : index.candidates(p, max_r)) {
            double d = point_polyline_distance(p, segments[sid].geometry);
            for (size_t ri = 0; ri < radii.size(); ++ri)
                if (d <= radii[ri]) res.counts[ri][sid] += 1.0;
        }
    }
    for (size_t ri = 0; ri < radii.size(); ++ri)
        for (size_t s = 0; s < segments.size(); ++s)
            res.density[ri][s] = res.counts[ri][s] / segments[s].length_m;
    return res;
}

NormalizationParams::Entry normalize_column(std::vector<double>& values, NormKind kind,
                                            const std::string& name) {
    NormalizationParams::Entry e;
    e.kind = kind;
    if (kind == NormKind::none) return e;
    std::vector<double> t(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        if (kind == NormKind::log1p_zscore) {
            if (values[i] < 0.0)
                throw ConfigError("column '" + name + "': negative value under log1p");
            t[i] = std::log1p(values[i]);
        } else {
            t[i] = values[i];
        }
    }
    double mean = 0.0;
    for (double v : t) mean += v;
    mean /= t.empty() ? 1.0 : static_cast<double>(t.size());
    double var = 0.0;
    for (double v : t) var += (v - mean) * (v - mean);
    var /= t.empty() ? 1.0 : static_cast<double>(t.size());
    double sd = std::sqrt(var);
    e.mean = mean;
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
        e.degenerate = true;
        e.std = 1.0;
        std::fill(values.begin(), values.end(), 0.0);
        return e;
    }
    e.std = sd;
    for (size_t i = 0; i < values.size(); ++i) values[i] = (t[i] - mean) / sd;
    return e;
}

double poi_entropy(const std::vector<PoiRecord>& pois, const RoadSegment& segment,
                   double radius_m, size_t* n_in_range) {
    if (!(radius_m > 0.0)) throw ConfigError("POI radius must be > 0");
    std::map<std::string, size_t> counts;
    size_t total = 0;
    for (const auto& poi : pois) {
        if (point_polyline_distance({poi.x, poi.y}, segment.geometry) <= radius_m) {
            ++counts[poi.category];
            ++total;
        }
    }
    if (n_in_range) *n_in_range = total;
    if (total == 0) return 0.0;
    double h = 0.0;
    for (const auto& [cat, c] : counts) {
        double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

std::vector<double> poi_entropy_all(const std::vector<PoiRecord>& pois,
                                    const std::vector<RoadSegment>& segments,
                                    double radius_m) {
    // Invert the query: bucket POIs once, then per segment walk its inflated
    // bbox. Same answers as poi_entropy, just not quadratic.
    std::vector<double> out(segments.size(), 0.0);
    if (pois.empty() || segments.empty()) return out;
    double cell = std::max(radius_m, 1.0);
    Bbox box;
    for (const auto& p : pois) box.add({p.x, p.y});
    int cols = static_cast<int>(std::floor((box.max_x - box.min_x) / cell)) + 1;
    int rows = static_cast<int>(std::floor((box.max_y - box.min_y) / cell)) + 1;
    std::vector<std::vector<int>> buckets(static_cast<size_t>(rows) * cols);
    for (size_t i = 0; i < pois.size(); ++i) {
        int c = std::clamp(static_cast<int>(std::floor((pois[i].x - box.min_x) / cell)), 0, cols - 1);
        int r = std::clamp(static_cast<int>(std::floor((pois[i].y - box.min_y) / cell)), 0, rows - 1);
        buckets[static_cast<size_t>(r) * cols + c].push_back(static_cast<int>(i));
    }
    for (size_t s = 0; s < segments.size(); ++s) {
        Bbox sb;
        sb.add(segments[s].geometry);
        int c0 = std::clamp(static_cast<int>(std::floor((sb.min_x - radius_m - box.min_x) / cell)), 0, cols - 1);
        int c1 = std::clamp(static_cast<int>(std::floor((sb.max_x + radius_m - box.min_x) / cell)), 0, cols - 1);
        int r0 = std::clamp(static_cast<int>(std::floor((sb.min_y - radius_m - box.min_y) / cell)), 0, rows - 1);
        int r1 = std::clamp(static_cast<int>(std::floor((sb.max_y + radius_m - box.min_y) / cell)), 0, rows - 1);
        std::map<std::string, size_t> counts;
        size_t total = 0;
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c)
                for (int pi : buckets[static_cast<size_t>(r) * cols + c]) {
                    if (point_polyline_distance({pois[pi].x, pois[pi].y}, segments[s].geometry) <=
                        radius_m) {
                        ++counts[pois[pi].category];
                        ++total;
                    }
                }
        if (total == 0) continue;
        double h = 0.0;
        for (const auto& [cat, cnt] : counts) {
            double p = static_cast<double>(cnt) / static_cast<double>(total);
            h -= p * std::log(p);
        }
        out[s] = std::max(h, 0.0);
    }
    return out;
}

const std::vector<std::string> kLanduseClasses = {"transport", "tree",       "water",
                                                  "building",  "residential", "commercial"};

std::map<std::string, double> landuse_composition(const std::vector<LanduseCell>& cells,
                                                  const RoadSegment& segment, double radius_m,
                                                  bool* in_range) {
    std::map<std::string, double> out;
    for (const auto& cls : kLanduseClasses) out[cls] = 0.0;
    double total_area = 0.0;
    for (const auto& cell : cells) {
        if (!out.count(cell.landuse))
            throw ConfigError("unknown land-use class '" + cell.landuse + "'");
        if (point_polyline_distance({cell.x, cell.y}, segment.geometry) <= radius_m) {
            double area = cell.cell_size_m * cell.cell_size_m;
            out[cell.landuse] += area;
            total_area += area;
        }
    }
    if (in_range) *in_range = total_area > 0.0;
    if (total_area > 0.0)
        for (auto& [cls, v] : out) v /= total_area;
    return out;
}

std::map<std::string, std::vector<double>> landuse_composition_all(
    const std::vector<LanduseCell>& cells, const std::vector<RoadSegment>& segments,
    double radius_m) {
    std::map<std::string, std::vector<double>> out;
    std::set<std::string> present;
    for (const auto& c : cells) {
        if (std::find(kLanduseClasses.begin(), kLanduseClasses.end(), c.landuse) ==
            kLanduseClasses.end())
            throw ConfigError("unknown land-use class '" + c.landuse + "'");
        present.insert(c.landuse);
    }
    for (const auto& cls : present) out["C_D_" + cls].assign(segments.size(), 0.0);

    // bucket cell centers, inflate segment bbox by radius
    if (cells.empty() || segments.empty()) return out;
    double bucket = std::max(radius_m, 1.0);
    Bbox box;
    for (const auto& c : cells) box.add({c.x, c.y});
    int cols = static_cast<int>(std::floor((box.max_x - box.min_x) / bucket)) + 1;
    int rows = static_cast<int>(std::floor((box.max_y - box.min_y) / bucket)) + 1;
    std::vector<std::vector<int>> buckets(static_cast<size_t>(rows) * cols);
    for (size_t i = 0; i < cells.size(); ++i) {
        int c = std::clamp(static_cast<int>(std::floor((cells[i].x - box.min_x) / bucket)), 0, cols - 1);
        int r = std::clamp(static_cast<int>(std::floor((cells[i].y - box.min_y) / bucket)), 0, rows - 1);
        buckets[static_cast<size_t>(r) * cols + c].push_back(static_cast<int>(i));
    }
    for (size_t s = 0; s < segments.size(); ++s) {
        Bbox sb;
        sb.add(segments[s].geometry);
        int c0 = std::clamp(static_cast<int>(std::floor((sb.min_x - radius_m - box.min_x) / bucket)), 0, cols - 1);
        int c1 = std::clamp(static_cast<int>(std::floor((sb.max_x + radius_m - box.min_x) / bucket)), 0, cols - 1);
        int r0 = std::clamp(static_cast<int>(std::floor((sb.min_y - radius_m - box.min_y) / bucket)), 0, rows - 1);
        int r1 = std::clamp(static_cast<int>(std::floor((sb.max_y + radius_m - box.min_y) / bucket)), 0, rows - 1);
        std::map<std::string, double> areas;
        double total = 0.0;
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c)
                for (int ci : buckets[static_cast<size_t>(r) * cols + c]) {
                    if (point_polyline_distance({cells[ci].x, cells[ci].y}, segments[s].geometry) <=
                        radius_m) {
                        double area = cells[ci].cell_size_m * cells[ci].cell_size_m;
                        areas[cells[ci].landuse] += area;
                        total += area;
                    }
                }
        if (total > 0.0)
            for (const auto& [cls, area] : areas) out["C_D_" + cls][s] = area / total;
    }
    return out;
}

std::vector<std::vector<int>> segment_adjacency(const StreetGraph& graph) {
    std::vector<std::vector<int>> node_segments(graph.n_nodes());
    for (size_t s = 0; s < graph.segment_nodes.size(); ++s) {
        auto [u, v] = graph.segment_nodes[s];
        if (u >= 0) node_segments[u].push_back(static_cast<int>(s));
        if (v >= 0 && v != u) node_segments[v].push_back(static_cast<int>(s));
    }
    std::vector<std::set<int>> adj(graph.segment_nodes.size());
    for (const auto& members : node_segments)
        for (int a : members)
            for (int b : members)
                if (a != b) adj[a].insert(b);
    std::vector<std::vector<int>> out(adj.size());
    for (size_t i = 0; i < adj.size(); ++i) out[i].assign(adj[i].begin(), adj[i].end());
    return out;
}

InterpolationStats interpolate_missing(const std::vector<std::vector<int>>& adjacency,
                                       std::vector<double>& column,
                                       std::vector<uint8_t>& mask, int max_rounds) {
    if (column.size() != mask.size() || column.size() != adjacency.size())
        throw ConfigError("interpolate_missing: size mismatch");
    size_t n_known = 0;
    double known_sum = 0.0;
    for (size_t i = 0; i < column.size(); ++i)
        if (!mask[i]) {
            ++n_known;
            known_sum += column[i];
        }
    if (n_known == 0) throw ConfigError("interpolate_missing: column entirely missing");
    double global_mean = known_sum / static_cast<double>(n_known);

    InterpolationStats stats;
    for (int round = 0; round < max_rounds; ++round) {
        std::vector<std::pair<size_t, double>> updates;
        for (size_t i = 0; i < column.size(); ++i) {
            if (!mask[i]) continue;
            double sum = 0.0;
            int cnt = 0;
            for (int nb : adjacency[i]) {
                if (!mask[nb]) {
                    sum += column[nb];
                    ++cnt;
                }
            }
            if (cnt > 0) updates.push_back({i, sum / cnt});
        }
        if (updates.empty()) break;
        for (const auto& [i, v] : updates) {
            column[i] = v;
            mask[i] = 0;
        }
        stats.filled_by_neighbors += updates.size();
        stats.rounds_used = round + 1;
    }
    for (size_t i = 0; i < column.size(); ++i) {
        if (mask[i]) {
            column[i] = global_mean;
            mask[i] = 0;
            ++stats.filled_by_global_mean;
        }
    }
    return stats;
}

GridTable aggregate_grid(const std::vector<RoadSegment>& segments,
                         const std::vector<std::string>& feature_names,
                         const std::vector<const std::vector<double>*>& feature_columns,
                         const std::vector<PopulationCell>& population_raster,
                         double cell_size_m) {
    if (!(cell_size_m > 0.0)) throw ConfigError("grid cell size must be > 0");
    if (feature_names.size() != feature_columns.size())
        throw ConfigError("aggregate_grid: names/columns mismatch");

    Bbox box;
    for (const auto& s : segments) box.add(s.geometry);
    for (const auto& p : population_raster) {
        double h = p.cell_size_m * 0.5;
        box.add({p.x - h, p.y - h});
        box.add({p.x + h, p.y + h});
    }
    if (!box.valid()) throw ConfigError("aggregate_grid: no spatial extent");

    GridTable out;
    out.spec.size_m = cell_size_m;
    out.spec.origin_x = std::floor(box.min_x / cell_size_m) * cell_size_m;
    out.spec.origin_y = std::floor(box.min_y / cell_size_m) * cell_size_m;
    out.spec.cols = static_cast<int>(std::floor((box.max_x - out.spec.origin_x) / cell_size_m)) + 1;
    out.spec.rows = static_cast<int>(std::floor((box.max_y - out.spec.origin_y) / cell_size_m)) + 1;

    size_t n_cells = out.spec.n_cells();
    out.cells.resize(n_cells);
    out.has_supply.assign(n_cells, 0);
    out.cell_segments.assign(n_cells, {});
    for (int r = 0; r < out.spec.rows; ++r)
        for (int c = 0; c < out.spec.cols; ++c) {
            GridCell& cell = out.cells[out.spec.cell_id(r, c)];
            cell.id = out.spec.cell_id(r, c);
            cell.row = r;
            cell.col = c;
            cell.origin_x = out.spec.origin_x + c * cell_size_m;
            cell.origin_y = out.spec.origin_y + r * cell_size_m;
            cell.size_m = cell_size_m;
        }

    // length-weighted feature means
    std::vector<double> length_in_cell(n_cells, 0.0);
    std::vector<std::vector<double>> weighted(feature_names.size(),
                                              std::vector<double>(n_cells, 0.0));
    for (size_t s = 0; s < segments.size(); ++s) {
        auto pieces = polyline_cell_lengths(segments[s].geometry, out.spec.origin_x,
                                            out.spec.origin_y, cell_size_m);
        for (const auto& [rc, len] : pieces) {
            if (!out.spec.contains(rc.first, rc.second)) continue;
            int id = out.spec.cell_id(rc.first, rc.second);
            length_in_cell[id] += len;
            if (out.cell_segments[id].empty() || out.cell_segments[id].back() != static_cast<int>(s))
                out.cell_segments[id].push_back(static_cast<int>(s));
            for (size_t f = 0; f < feature_columns.size(); ++f)
                weighted[f][id] += (*feature_columns[f])[s] * len;
        }
    }
    for (size_t f = 0; f < feature_names.size(); ++f) {
        std::vector<double> col(n_cells, 0.0);
        for (size_t i = 0; i < n_cells; ++i)
            if (length_in_cell[i] > 0.0) col[i] = weighted[f][i] / length_in_cell[i];
        out.aggregates[feature_names[f]] = std::move(col);
    }
    for (size_t i = 0; i < n_cells; ++i) out.has_supply[i] = length_in_cell[i] > 0.0 ? 1 : 0;

    // area-weighted population re-aggregation
    for (const auto& p : population_raster) {
        double h = p.cell_size_m * 0.5;
        double area = p.cell_size_m * p.cell_size_m;
        int c0 = static_cast<int>(std::floor((p.x - h - out.spec.origin_x) / cell_size_m));
        int c1 = static_cast<int>(std::floor((p.x + h - out.spec.origin_x) / cell_size_m));
        int r0 = static_cast<int>(std::floor((p.y - h - out.spec.origin_y) / cell_size_m));
        int r1 = static_cast<int>(std::floor((p.y + h - out.spec.origin_y) / cell_size_m));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                if (!out.spec.contains(r, c)) continue;
                double gx0 = out.spec.origin_x + c * cell_size_m;
                double gy0 = out.spec.origin_y + r * cell_size_m;
                double overlap = rect_overlap_area(p.x - h, p.y - h, p.x + h, p.y + h, gx0, gy0,
                                                   gx0 + cell_size_m, gy0 + cell_size_m);
                if (overlap > 0.0)
                    out.cells[out.spec.cell_id(r, c)].population += p.population * overlap / area;
            }
    }
    return out;
}

}  // namespace stride
