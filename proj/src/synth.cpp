#include "stride/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "stride/csv.hpp"
#include "stride/features.hpp"
#include "stride/graph.hpp"
#include "stride/rng.hpp"

namespace stride {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// standardize in place with population moments; returns false for constants
bool zscore(std::vector<double>& v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double t : v) var += (t - mean) * (t - mean);
    var /= static_cast<double>(v.size());
    double sd = std::sqrt(var);
    if (sd <= 1e-12) return false;
    for (auto& t : v) t = (t - mean) / sd;
    return true;
}

// smooth low-frequency field over the city extent; distinct phases per use
double field(double x, double y, double w, double h, double px, double py) {
    return std::sin(2.0 * M_PI * (x / w + px)) * std::cos(2.0 * M_PI * (y / h + py)) +
           0.5 * std::sin(2.0 * M_PI * (x / (0.43 * w) + 2.0 * py)) *
               std::sin(2.0 * M_PI * (y / (0.61 * h) + 1.3 * px));
}

// number of points resample_trajectory() emits for a straight run of len
size_t resample_count(double len, double interval) {
    size_t base = static_cast<size_t>(std::floor(len / interval)) + 1;
    double rem = len - std::floor(len / interval) * interval;
    return rem > 1e-12 ? base + 1 : base;
}

void validate(const SynthConfig& c) {
    if (c.blocks_x < 2 || c.blocks_y < 2) throw ConfigError("synth: need at least 2x2 blocks");
    if (!(c.block_m > 0.0)) throw ConfigError("synth: block_m must be > 0");
    if (c.irregularity < 0.0 || c.irregularity > 1.0)
        throw ConfigError("synth: irregularity must be in [0,1]");
    if (c.noise_sd < 0.0) throw ConfigError("synth: noise_sd must be >= 0");
    if (c.w_C == 0.0 && c.w_P == 0.0 && c.w_L == 0.0)
        throw ConfigError("synth: response weights are all zero");
    if (c.n_trajectories < 0 || c.n_pois < 0) throw ConfigError("synth: negative counts");
}

}  // namespace

SynthCity generate(const SynthConfig& config) {
    validate(config);
    SynthCity city;
    city.config = config;

    double width = config.blocks_x * config.block_m;
    double height = config.blocks_y * config.block_m;
    int nx = config.blocks_x + 1;
    int ny = config.blocks_y + 1;

    // jittered lattice nodes
    std::vector<Point> nodes(static_cast<size_t>(nx) * ny);
    double jitter = 0.35 * config.irregularity * config.block_m;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            SplitMix64 rng(derive_seed(config.seed, "node", static_cast<uint64_t>(j) * nx + i));
            nodes[static_cast<size_t>(j) * nx + i] = {
                i * config.block_m + rng.uniform(-jitter, jitter),
                j * config.block_m + rng.uniform(-jitter, jitter)};
        }

    auto district_of = [&](const Point& p) -> std::string {
        bool east = p.x > width * 0.5;
        bool north = p.y > height * 0.5;
        return north ? (east ? "NE" : "NW") : (east ? "SE" : "SW");
    };
    auto add_segment = [&](const std::string& id, const Point& a, const Point& b) {
        RoadSegment seg;
        seg.id = id;
        seg.geometry = {a, b};
        seg.length_m = dist(a, b);
        seg.district = district_of(polyline_midpoint(seg.geometry));
        city.segments.push_back(std::move(seg));
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i)
            add_segment("h_" + std::to_string(i) + "_" + std::to_string(j),
                        nodes[static_cast<size_t>(j) * nx + i],
                        nodes[static_cast<size_t>(j) * nx + i + 1]);
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i)
            add_segment("v_" + std::to_string(i) + "_" + std::to_string(j),
                        nodes[static_cast<size_t>(j) * nx + i],
                        nodes[static_cast<size_t>(j + 1) * nx + i]);

    size_t n = city.segments.size();
    std::vector<Point> mid(n);
    for (size_t s = 0; s < n; ++s) mid[s] = polyline_midpoint(city.segments[s].geometry);

    // planted mismatch quarter: the SW corner, high population / degraded
    // perceived+lived features
    auto& truth = city.truth;
    truth.in_quarter.assign(n, 0);
    if (config.mismatch_quarter) {
        truth.has_quarter = true;
        truth.quarter_x0 = 0.0;
        truth.quarter_y0 = 0.0;
        truth.quarter_x1 = 0.45 * width;
        truth.quarter_y1 = 0.45 * height;
        for (size_t s = 0; s < n; ++s)
            truth.in_quarter[s] = mid[s].x < truth.quarter_x1 && mid[s].y < truth.quarter_y1;
    }

    // provided raw attribute columns (smooth field + noise per segment)
    auto make_col = [&](const char* tag, auto&& fn) {
        std::vector<double> col(n);
        for (size_t s = 0; s < n; ++s) {
            SplitMix64 rng(derive_seed(config.seed, tag, static_cast<uint64_t>(s)));
            col[s] = fn(mid[s], rng.normal(), truth.in_quarter[s]);
        }
        return col;
    };
    auto f = [&](const Point& p, double px, double py) {
        return field(p.x, p.y, width, height, px, py);
    };

    // Signal-bearing columns carry mostly per-segment variation; otherwise
    // the handful of smooth fields would make every nonlinearity linearly
    // recoverable from the other columns.
    auto free_speed = make_col("C_free_speed", [&](const Point& p, double e, bool) {
        return std::max(5.0, 40.0 + 7.0 * f(p, 0.11, 0.71) + 9.0 * e);
    });
    auto capacity = make_col("C_capacity", [&](const Point& p, double e, bool) {
        return std::max(100.0, 900.0 + 150.0 * f(p, 0.83, 0.29) + 260.0 * e);
    });
    auto p_sky = make_col("P_sky", [&](const Point& p, double e, bool q) {
        return clamp01(0.45 + 0.07 * f(p, 0.52, 0.23) + 0.11 * e - (q ? 0.30 : 0.0));
    });
    auto p_veg = make_col("P_vegetation", [&](const Point& p, double e, bool) {
        return clamp01(0.30 + 0.12 * f(p, 0.33, 0.91) + 0.06 * e);
    });
    auto p_road = make_col("P_road", [&](const Point& p, double e, bool) {
        return clamp01(0.33 + 0.08 * f(p, 0.81, 0.37) + 0.05 * e);
    });
    auto p_sidewalk = make_col("P_sidewalk", [&](const Point& p, double e, bool) {
        return clamp01(0.15 + 0.06 * f(p, 0.27, 0.59) + 0.04 * e);
    });
    auto p_building = make_col("P_building", [&](const Point& p, double e, bool) {
        return clamp01(0.35 + 0.14 * f(p, 0.67, 0.13) + 0.07 * e);
    });
    auto p_car = make_col("P_car", [&](const Point& p, double e, bool) {
        return clamp01(0.25 + 0.06 * f(p, 0.91, 0.47) + 0.10 * e);
    });
    auto l_weibo = make_col("L_total_weibo_count", [&](const Point& p, double e, bool) {
        return std::floor(std::max(0.0, std::exp(3.1 + 0.5 * f(p, 0.19, 0.83) + 0.9 * e)));
    });
    auto l_sport = make_col("L_sport_mean", [&](const Point& p, double e, bool) {
        return clamp01(0.52 + 0.08 * f(p, 0.44, 0.31) + 0.12 * e);
    });
    auto l_positive = make_col("L_positive_mean", [&](const Point& p, double e, bool) {
        return clamp01(0.55 + 0.10 * f(p, 0.73, 0.67) + 0.12 * e);
    });

    // POIs near segments; category diversity tracks a smooth mix parameter
    // that the quarter collapses (low entropy)
    static const std::vector<std::string> categories = {"food", "retail", "park", "office",
                                                        "school"};
    for (int i = 0; i < config.n_pois; ++i) {
        SplitMix64 rng(derive_seed(config.seed, "poi", static_cast<uint64_t>(i)));
        const auto& seg = city.segments[rng.below(n)];
        Point base = polyline_point_at(seg.geometry, rng.uniform() * seg.length_m);
        Point pos{base.x + 60.0 * rng.normal(), base.y + 60.0 * rng.normal()};
        double mix = clamp01(0.62 + 0.35 * f(pos, 0.07, 0.41));
        if (truth.has_quarter && pos.x < truth.quarter_x1 && pos.y < truth.quarter_y1)
            mix *= 0.12;
        std::string cat;
        if (rng.uniform() < mix) {
            cat = categories[rng.below(categories.size())];
        } else {
            cat = categories[0];
        }
        city.pois.push_back({pos.x, pos.y, cat});
    }

    // 50 m land-use raster: class by the largest of four smooth scores
    {
        double cell = 50.0;
        int rcols = static_cast<int>(std::ceil(width / cell));
        int rrows = static_cast<int>(std::ceil(height / cell));
        for (int r = 0; r < rrows; ++r)
            for (int c = 0; c < rcols; ++c) {
                SplitMix64 rng(derive_seed(config.seed, "landuse",
                                           static_cast<uint64_t>(r) * rcols + c));
                Point p{(c + 0.5) * cell, (r + 0.5) * cell};
                double e = 0.25 * rng.normal();
                double score[4] = {
                    0.30 + 0.25 * f(p, 0.05, 0.95) + e,              // transport
                    0.35 + 0.40 * f(p, 0.61, 0.29) + 0.25 * rng.normal(),  // tree
                    -0.45 + 0.55 * f(p, 0.37, 0.53) + 0.25 * rng.normal(), // water: sparse
                    0.40 + 0.30 * f(p, 0.83, 0.11) + 0.25 * rng.normal(),  // building
                };
                static const char* classes[4] = {"transport", "tree", "water", "building"};
                int best = 0;
                for (int k = 1; k < 4; ++k)
                    if (score[k] > score[best]) best = k;
                city.landuse.push_back({p.x, p.y, classes[best], cell});
            }
    }

    // planted centralities and buffer features feed the g functions; the
    // same operations the pipeline runs, so ingestion reproduces them
    std::vector<double> clo;
    {
        auto segs = city.segments;  // keep city.segments free of node ids until ingest
        StreetGraph graph = build_graph(segs, 0.5);
        CentralityResult cent = segment_centrality(graph, segs, 800.0);
        clo = cent.clo;
    }
    std::vector<double> entropy = poi_entropy_all(city.pois, city.segments, 300.0);
    std::vector<double> d_tree(n, 0.0);
    {
        auto comp = landuse_composition_all(city.landuse, city.segments, 100.0);
        auto it = comp.find("C_D_tree");
        if (it != comp.end()) d_tree = it->second;
    }

    // component signals; forms documented in the README. Humps, thresholds
    // and the C x P interaction keep the planted response far from linear,
    // while P_sky (positive) and P_car (negative) stay cleanly monotone.
    auto zcopy = [](std::vector<double> v) {
        zscore(v);
        return v;
    };
    std::vector<double> z_clo = zcopy(clo), z_speed = zcopy(free_speed), z_tree = zcopy(d_tree);
    std::vector<double> z_cap = zcopy(capacity);
    std::vector<double> z_sky = zcopy(p_sky), z_car = zcopy(p_car);
    std::vector<double> z_entropy = zcopy(entropy), z_sport = zcopy(l_sport);
    std::vector<double> z_weibo = zcopy(l_weibo), z_positive = zcopy(l_positive);

    truth.g_c.resize(n);
    truth.g_p.resize(n);
    truth.g_l.resize(n);
    for (size_t s = 0; s < n; ++s) {
        truth.g_c[s] = 0.45 * z_clo[s] + 0.8 * (z_speed[s] > 0.25 ? 1.0 : 0.0) +
                       1.0 * z_speed[s] * z_cap[s] + 0.4 * z_tree[s];
        truth.g_p[s] = 0.8 * z_sky[s] - 0.45 * z_car[s] + 1.0 * z_speed[s] * z_sky[s];
        truth.g_l[s] = 0.8 * (z_weibo[s] > 0.8 ? 1.0 : 0.0) -
                       1.0 * std::abs(z_entropy[s] + 0.2) +
                       0.5 * z_sport[s] * z_positive[s];
    }
    zscore(truth.g_c);
    zscore(truth.g_p);
    zscore(truth.g_l);

    truth.signal.resize(n);
    for (size_t s = 0; s < n; ++s)
        truth.signal[s] = config.w_C * truth.g_c[s] + config.w_P * truth.g_p[s] +
                          config.w_L * truth.g_l[s];
    zscore(truth.signal);

    truth.latent.resize(n);
    for (size_t s = 0; s < n; ++s) {
        SplitMix64 rng(derive_seed(config.seed, "noise", static_cast<uint64_t>(s)));
        truth.latent[s] = truth.signal[s] + config.noise_sd * rng.normal();
    }

    // Trajectory passes realize log1p(density) ~ offset + 0.35 * latent.
    // The offset is bisected so the expected resampled-point total matches
    // the n_trajectories pass budget; shifting it only moves the response
    // intercept, which z-scoring absorbs.
    {
        double mean_pass_pts = 0.0;
        for (size_t s = 0; s < n; ++s)
            mean_pass_pts += static_cast<double>(resample_count(city.segments[s].length_m, 5.0));
        mean_pass_pts /= static_cast<double>(n);
        double budget = std::max(1.0, static_cast<double>(config.n_trajectories)) * mean_pass_pts;

        auto total_points = [&](double offset) {
            double acc = 0.0;
            for (size_t s = 0; s < n; ++s)
                acc += std::expm1(std::max(0.02, offset + 0.35 * truth.latent[s])) *
                       city.segments[s].length_m;
            return acc;
        };
        double lo = -3.0, hi = 6.0;
        for (int it = 0; it < 60; ++it) {
            double midp = 0.5 * (lo + hi);
            (total_points(midp) < budget ? lo : hi) = midp;
        }
        double offset = 0.5 * (lo + hi);

        for (size_t s = 0; s < n; ++s) {
            const auto& seg = city.segments[s];
            double lambda = std::expm1(std::max(0.02, offset + 0.35 * truth.latent[s]));
            double target = lambda * seg.length_m;
            size_t per_pass = resample_count(seg.length_m, 5.0);
            size_t full = static_cast<size_t>(target / static_cast<double>(per_pass));
            for (size_t k = 0; k < full; ++k)
                city.trajectories.push_back(seg.geometry);
            long rem = static_cast<long>(std::llround(target)) -
                       static_cast<long>(full * per_pass);
            if (rem >= 2) {
                // partial pass whose resampling yields ~rem points
                double len = 5.0 * static_cast<double>(rem - 2) + 2.5;
                len = std::min(len, seg.length_m * 0.999);
                city.trajectories.push_back({seg.geometry.front(),
                                             polyline_point_at(seg.geometry, len)});
            }
        }
    }

    // 90 m population raster; the quarter carries the planted demand
    {
        double cell = 90.0;
        int rcols = static_cast<int>(std::ceil(width / cell));
        int rrows = static_cast<int>(std::ceil(height / cell));
        for (int r = 0; r < rrows; ++r)
            for (int c = 0; c < rcols; ++c) {
                SplitMix64 rng(derive_seed(config.seed, "population",
                                           static_cast<uint64_t>(r) * rcols + c));
                Point p{(c + 0.5) * cell, (r + 0.5) * cell};
                bool q = truth.has_quarter && p.x < truth.quarter_x1 && p.y < truth.quarter_y1;
                double pop = q ? 700.0 + 60.0 * rng.normal()
                               : 140.0 + 45.0 * field(p.x, p.y, width, height, 0.29, 0.77) +
                                     18.0 * rng.normal();
                city.population.push_back({p.x, p.y, cell, std::max(0.0, pop)});
            }
    }

    // assemble the provided-attribute table; a few percent of perceived
    // cells go missing to exercise network interpolation downstream
    city.attrs.segment_ids.reserve(n);
    for (const auto& seg : city.segments) city.attrs.segment_ids.push_back(seg.id);
    auto add_attr = [&](const std::string& name, std::vector<double> col, bool maskable) {
        std::vector<uint8_t> mask(n, 0);
        if (maskable) {
            for (size_t s = 0; s < n; ++s) {
                SplitMix64 rng(derive_seed(config.seed, "missing_" + name,
                                           static_cast<uint64_t>(s)));
                mask[s] = rng.uniform() < 0.03 ? 1 : 0;
            }
        }
        city.attrs.add_column(name, std::move(col), std::move(mask));
    };
    add_attr("C_free_speed", free_speed, false);
    add_attr("C_capacity", capacity, false);
    add_attr("P_sky", p_sky, true);
    add_attr("P_vegetation", p_veg, true);
    add_attr("P_road", p_road, true);
    add_attr("P_sidewalk", p_sidewalk, true);
    add_attr("P_building", p_building, true);
    add_attr("P_car", p_car, true);
    add_attr("L_total_weibo_count", l_weibo, false);
    add_attr("L_sport_mean", l_sport, false);
    add_attr("L_positive_mean", l_positive, false);

    return city;
}

std::vector<double> oracle_response(const SynthCity& city, const SynthConfig& config) {
    if (!(city.config == config))
        throw ConfigError("oracle_response: config does not match the generated city");
    std::vector<double> out(city.truth.g_c.size());
    for (size_t s = 0; s < out.size(); ++s)
        out[s] = config.w_C * city.truth.g_c[s] + config.w_P * city.truth.g_p[s] +
                 config.w_L * city.truth.g_l[s];
    return out;
}

void write_city(const SynthCity& city, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto path = [&](const char* name) { return dir + "/" + name; };
    save_segments_geojson(city.segments, path("segments.geojson"));
    save_feature_table(city.attrs, path("attrs.csv"));
    save_trajectories_csv(city.trajectories, path("trajectories.csv"));
    save_pois_csv(city.pois, path("pois.csv"));
    save_landuse_csv(city.landuse, path("landuse.csv"));
    save_population_csv(city.population, path("population.csv"));

    {
        CsvWriter w(path("ground_truth.csv"));
        w.row({"segment_id", "g_C", "g_P", "g_L", "signal", "latent", "in_quarter"});
        for (size_t s = 0; s < city.segments.size(); ++s)
            w.row({city.segments[s].id, fmt_double(city.truth.g_c[s]),
                   fmt_double(city.truth.g_p[s]), fmt_double(city.truth.g_l[s]),
                   fmt_double(city.truth.signal[s]), fmt_double(city.truth.latent[s]),
                   city.truth.in_quarter[s] ? "1" : "0"});
    }
    {
        nlohmann::ordered_json meta;
        meta["seed"] = city.config.seed;
        meta["blocks_x"] = city.config.blocks_x;
        meta["blocks_y"] = city.config.blocks_y;
        meta["block_m"] = city.config.block_m;
        meta["has_quarter"] = city.truth.has_quarter;
        meta["quarter"] = {city.truth.quarter_x0, city.truth.quarter_y0, city.truth.quarter_x1,
                           city.truth.quarter_y1};
        std::ofstream out(path("synth_meta.json"), std::ios::binary);
        if (!out) throw RuntimeError("cannot write synth_meta.json");
        out << meta.dump(1) << "\n";
    }
}

}  // namespace stride
