#include "stride/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stride/csv.hpp"
#include "stride/rng.hpp"

namespace stride {

namespace {

std::string lower_ext(const std::string& path) {
    auto pos = path.rfind('.');
    if (pos == std::string::npos) return "";
    std::string ext = path.substr(pos + 1);
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

void finish_segment(RoadSegment& seg, const std::string& path) {
    if (seg.geometry.size() < 2)
        throw ConfigError(path + ": segment '" + seg.id + "' has fewer than 2 points");
    seg.length_m = polyline_length(seg.geometry);
    if (!(seg.length_m > 0.0))
        throw ConfigError(path + ": segment '" + seg.id + "' has zero length");
}

}  // namespace

std::string wkt_linestring(const std::vector<Point>& pts) {
    std::string s = "LINESTRING (";
    for (size_t i = 0; i < pts.size(); ++i) {
        if (i) s += ", ";
        s += fmt_double(pts[i].x) + " " + fmt_double(pts[i].y);
    }
    return s + ")";
}

std::vector<Point> parse_wkt_linestring(const std::string& wkt) {
    auto open = wkt.find('(');
    auto close = wkt.rfind(')');
    if (wkt.find("LINESTRING") == std::string::npos || open == std::string::npos ||
        close == std::string::npos || close <= open)
        throw ConfigError("bad WKT linestring: " + wkt);
    std::string body = wkt.substr(open + 1, close - open - 1);
    std::vector<Point> pts;
    std::stringstream ss(body);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
        std::stringstream ps(pair);
        Point p;
        if (!(ps >> p.x >> p.y)) throw ConfigError("bad WKT coordinate: " + pair);
        pts.push_back(p);
    }
    return pts;
}

std::vector<RoadSegment> load_segments_geojson(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (doc.value("type", "") != "FeatureCollection")
        throw ConfigError(path + ": expected a GeoJSON FeatureCollection");
    std::vector<RoadSegment> segments;
    for (const auto& feat : doc.at("features")) {
        const auto& geom = feat.at("geometry");
        if (geom.value("type", "") != "LineString")
            throw ConfigError(path + ": only LineString features are supported");
        RoadSegment seg;
        const auto& props = feat.value("properties", nlohmann::json::object());
        if (props.contains("id")) {
            const auto& id = props.at("id");
            seg.id = id.is_string() ? id.get<std::string>() : id.dump();
        } else {
            seg.id = "seg_" + std::to_string(segments.size());
        }
        if (props.contains("district") && props.at("district").is_string())
            seg.district = props.at("district").get<std::string>();
        for (const auto& coord : geom.at("coordinates"))
            seg.geometry.push_back({coord.at(0).get<double>(), coord.at(1).get<double>()});
        finish_segment(seg, path);
        segments.push_back(std::move(seg));
    }
    return segments;
}

std::vector<RoadSegment> load_segments_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    int id_c = t.require_col("id", path);
    int wkt_c = t.require_col("wkt", path);
    int dist_c = t.col("district");
    std::vector<RoadSegment> segments;
    for (const auto& row : t.rows) {
        RoadSegment seg;
        seg.id = row[id_c];
        seg.geometry = parse_wkt_linestring(row[wkt_c]);
        if (dist_c >= 0) seg.district = row[dist_c];
        finish_segment(seg, path);
        segments.push_back(std::move(seg));
    }
    return segments;
}

std::vector<RoadSegment> load_segments(const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "geojson" || ext == "json") return load_segments_geojson(path);
    return load_segments_csv(path);
}

void save_segments_geojson(const std::vector<RoadSegment>& segments, const std::string& path) {
    nlohmann::ordered_json doc;
    doc["type"] = "FeatureCollection";
    auto& feats = doc["features"] = nlohmann::ordered_json::array();
    for (const auto& seg : segments) {
        nlohmann::ordered_json f;
        f["type"] = "Feature";
        f["properties"]["id"] = seg.id;
        f["properties"]["district"] = seg.district;
        f["geometry"]["type"] = "LineString";
        auto& coords = f["geometry"]["coordinates"] = nlohmann::ordered_json::array();
        for (const auto& p : seg.geometry) coords.push_back({p.x, p.y});
        feats.push_back(std::move(f));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path);
    out << doc.dump(1) << '\n';
}

void save_segments_csv(const std::vector<RoadSegment>& segments, const std::string& path) {
    CsvWriter w(path);
    w.row({"id", "wkt", "district"});
    for (const auto& seg : segments)
        w.row({seg.id, "\"" + wkt_linestring(seg.geometry) + "\"", seg.district});
}

FeatureTable load_feature_table(const std::string& path) {
    CsvTable t = read_csv(path);
    if (t.header.empty() || t.header[0] != "segment_id")
        throw ConfigError(path + ": first column must be segment_id");
    FeatureTable table;
    for (const auto& row : t.rows) table.segment_ids.push_back(row[0]);
    for (size_t c = 1; c < t.header.size(); ++c) {
        std::vector<double> values(t.rows.size(), 0.0);
        std::vector<uint8_t> mask(t.rows.size(), 0);
        for (size_t r = 0; r < t.rows.size(); ++r) {
            const std::string& cell = t.rows[r][c];
            if (cell.empty()) {
                mask[r] = 1;
            } else {
                values[r] = parse_double(cell, path + " column " + t.header[c]);
            }
        }
        table.add_column(t.header[c], std::move(values), std::move(mask));
    }
    return table;
}

void save_feature_table(const FeatureTable& table, const std::string& path) {
    CsvWriter w(path);
    std::vector<std::string> header{"segment_id"};
    header.insert(header.end(), table.names.begin(), table.names.end());
    w.row(header);
    for (size_t r = 0; r < table.n_rows(); ++r) {
        std::vector<std::string> row{table.segment_ids[r]};
        for (size_t c = 0; c < table.n_cols(); ++c)
            row.push_back(table.missing[c][r] ? "" : fmt_double(table.columns[c][r]));
        w.row(row);
    }
}

NormalizationParams load_norm_params(const std::string& path) {
    CsvTable t = read_csv(path);
    int f = t.require_col("feature", path);
    int k = t.require_col("kind", path);
    int m = t.require_col("mean", path);
    int s = t.require_col("std", path);
    int d = t.require_col("degenerate", path);
    NormalizationParams params;
    for (const auto& row : t.rows) {
        NormalizationParams::Entry e;
        e.kind = norm_kind_from_name(row[k]);
        e.mean = parse_double(row[m], path);
        e.std = parse_double(row[s], path);
        e.degenerate = row[d] == "1";
        params.per_feature[row[f]] = e;
    }
    return params;
}

void save_norm_params(const NormalizationParams& params, const std::string& path) {
    CsvWriter w(path);
    w.row({"feature", "kind", "mean", "std", "degenerate"});
    for (const auto& [name, e] : params.per_feature)
        w.row({name, norm_kind_name(e.kind), fmt_double(e.mean), fmt_double(e.std),
               e.degenerate ? "1" : "0"});
}

// Accepts x, y with optional t (sort order within a trajectory) and optional
// trajectory_id (grouping); without an id column the file is one trajectory.
std::vector<std::vector<Point>> load_trajectories_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    int xc = t.require_col("x", path);
    int yc = t.require_col("y", path);
    int tid = t.col("trajectory_id");
    int tc = t.col("t");
    std::vector<std::vector<Point>> out;
    std::vector<std::vector<double>> times;
    std::string cur;
    bool first = true;
    for (const auto& row : t.rows) {
        if (first || (tid >= 0 && row[tid] != cur)) {
            out.emplace_back();
            times.emplace_back();
            if (tid >= 0) cur = row[tid];
            first = false;
        }
        out.back().push_back({parse_double(row[xc], path), parse_double(row[yc], path)});
        if (tc >= 0) times.back().push_back(parse_double(row[tc], path));
    }
    if (tc >= 0) {
        for (size_t i = 0; i < out.size(); ++i) {
            std::vector<size_t> order(out[i].size());
            for (size_t k = 0; k < order.size(); ++k) order[k] = k;
            std::stable_sort(order.begin(), order.end(),
                             [&](size_t a, size_t b) { return times[i][a] < times[i][b]; });
            std::vector<Point> sorted;
            sorted.reserve(out[i].size());
            for (size_t k : order) sorted.push_back(out[i][k]);
            out[i] = std::move(sorted);
        }
    }
    return out;
}

void save_trajectories_csv(const std::vector<std::vector<Point>>& trajectories,
                           const std::string& path) {
    CsvWriter w(path);
    w.row({"trajectory_id", "x", "y"});
    for (size_t i = 0; i < trajectories.size(); ++i)
        for (const auto& p : trajectories[i])
            w.row({std::to_string(i), fmt_double(p.x), fmt_double(p.y)});
}

std::vector<PoiRecord> load_pois_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    int xc = t.require_col("x", path);
    int yc = t.require_col("y", path);
    int cc = t.require_col("category", path);
    std::vector<PoiRecord> out;
    for (const auto& row : t.rows) {
        if (row[cc].empty()) throw ConfigError(path + ": empty POI category");
        out.push_back({parse_double(row[xc], path), parse_double(row[yc], path), row[cc]});
    }
    return out;
}

void save_pois_csv(const std::vector<PoiRecord>& pois, const std::string& path) {
    CsvWriter w(path);
    w.row({"x", "y", "category"});
    for (const auto& p : pois) w.row({fmt_double(p.x), fmt_double(p.y), p.category});
}

std::vector<LanduseCell> load_landuse_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    int xc = t.require_col("x", path);
    int yc = t.require_col("y", path);
    int cc = t.require_col("class", path);
    int sc = t.require_col("cell_size_m", path);
    std::vector<LanduseCell> out;
    for (const auto& row : t.rows)
        out.push_back({parse_double(row[xc], path), parse_double(row[yc], path), row[cc],
                       parse_double(row[sc], path)});
    return out;
}

void save_landuse_csv(const std::vector<LanduseCell>& cells, const std::string& path) {
    CsvWriter w(path);
    w.row({"x", "y", "class", "cell_size_m"});
    for (const auto& c : cells)
        w.row({fmt_double(c.x), fmt_double(c.y), c.landuse, fmt_double(c.cell_size_m)});
}

std::vector<PopulationCell> load_population_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    int xc = t.require_col("x", path);
    int yc = t.require_col("y", path);
    int sc = t.require_col("cell_size_m", path);
    int pc = t.require_col("population", path);
    std::vector<PopulationCell> out;
    for (const auto& row : t.rows)
        out.push_back({parse_double(row[xc], path), parse_double(row[yc], path),
                       parse_double(row[sc], path), parse_double(row[pc], path)});
    return out;
}

void save_population_csv(const std::vector<PopulationCell>& cells, const std::string& path) {
    CsvWriter w(path);
    w.row({"x", "y", "cell_size_m", "population"});
    for (const auto& c : cells)
        w.row({fmt_double(c.x), fmt_double(c.y), fmt_double(c.cell_size_m),
               fmt_double(c.population)});
}

uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeError("cannot hash " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
    }
    return h;
}

}  // namespace stride
