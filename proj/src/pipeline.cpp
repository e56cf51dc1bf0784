#include "stride/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stride/csv.hpp"
#include "stride/features.hpp"
#include "stride/graph.hpp"
#include "stride/io.hpp"
#include "stride/shap.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace stride {

const std::vector<std::string> kStageNames = {"synth",    "ingest",   "graph",    "features",
                                              "train",    "explain",  "classify", "mismatch",
                                              "simulate", "report"};

namespace {

// ---------------------------------------------------------------- config ---

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError("config: '" + path + "' must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + (path.empty() ? key : path + "." + key) +
                              "'");
}

double get_num(const json& obj, const std::string& path, const char* key, double def, double lo,
               double hi) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError("config: '" + path + "." + key + "' must be a number");
    double x = v.get<double>();
    if (x < lo || x > hi)
        throw ConfigError("config: '" + path + "." + key + "' = " + fmt_double(x) +
                          " out of range [" + fmt_double(lo) + ", " + fmt_double(hi) + "]");
    return x;
}

int get_int(const json& obj, const std::string& path, const char* key, int def, int lo, int hi) {
    return static_cast<int>(get_num(obj, path, key, def, lo, hi));
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool def) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_boolean())
        throw ConfigError("config: '" + path + "." + key + "' must be a boolean");
    return obj.at(key).get<bool>();
}

std::string get_str(const json& obj, const char* key, const std::string& def) {
    if (!obj.contains(key)) return def;
    return obj.at(key).get<std::string>();
}

std::set<Dim> parse_dims(const std::string& s, const std::string& where) {
    std::set<Dim> dims;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, '+')) {
        if (part == "C") {
            dims.insert(Dim::C);
        } else if (part == "P") {
            dims.insert(Dim::P);
        } else if (part == "L") {
            dims.insert(Dim::L);
        } else {
            throw ConfigError("config: '" + where + "' has unknown dimension '" + part + "'");
        }
    }
    if (dims.empty()) throw ConfigError("config: '" + where + "' has no dimensions");
    return dims;
}

// ------------------------------------------------------------- manifests ---

class Manifest {
public:
    Manifest(const PipelineConfig& config, const std::string& stage)
        : config_(config), stage_(stage), start_(std::chrono::steady_clock::now()) {
        doc_["stage"] = stage;
        doc_["seed"] = config.seed;
        doc_["params"] = ordered_json::object();
        doc_["inputs"] = ordered_json::object();
        doc_["outputs"] = ordered_json::array();
    }

    ordered_json& params() { return doc_["params"]; }

    std::string input(const std::string& path, const std::string& produced_by) {
        if (!fs::exists(path))
            throw ConfigError("missing artifact '" + path + "': run " + produced_by + " first");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(hash_file(path)));
        doc_["inputs"][relative_to_run(path)] = buf;
        return path;
    }

    // manifests stay byte-identical across runs into different directories
    std::string relative_to_run(const std::string& path) const {
        std::string prefix = config_.run_dir + "/";
        if (path.rfind(prefix, 0) == 0) return path.substr(prefix.size());
        return path;
    }

    std::string output(const std::string& name) {
        std::string dir = config_.run_dir + "/" + stage_;
        fs::create_directories(dir);
        doc_["outputs"].push_back(name);
        return dir + "/" + name;
    }

    void write() {
        auto elapsed = std::chrono::steady_clock::now() - start_;
        doc_["wall_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        fs::create_directories(config_.run_dir + "/manifests");
        std::ofstream out(config_.run_dir + "/manifests/" + stage_ + ".json", std::ios::binary);
        if (!out) throw RuntimeError("cannot write manifest for " + stage_);
        out << doc_.dump(1) << "\n";
    }

private:
    const PipelineConfig& config_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
    ordered_json doc_;
};

std::string synth_path(const PipelineConfig& c, const char* name) {
    return c.run_dir + "/synth/" + std::string(name);
}

std::string stage_path(const PipelineConfig& c, const char* stage, const char* name) {
    return c.run_dir + "/" + stage + "/" + name;
}

std::string input_or_synth(const PipelineConfig& c, const std::string& configured,
                           const char* synth_name) {
    return configured.empty() ? synth_path(c, synth_name) : configured;
}

// ------------------------------------------------------- shared loading ----

std::vector<RoadSegment> load_ingested_segments(const PipelineConfig& c, Manifest& m) {
    return load_segments_csv(m.input(stage_path(c, "ingest", "segments.csv"), "ingest"));
}

// model-input dataset (classified columns only) + response vector
void split_feature_table(const FeatureTable& table, const std::string& response, Dataset& X,
                         std::vector<double>& y) {
    X.names.clear();
    X.cols.clear();
    for (size_t c = 0; c < table.n_cols(); ++c) {
        if (is_response_column(table.names[c])) continue;
        X.names.push_back(table.names[c]);
        X.cols.push_back(table.columns[c]);
    }
    int rc = table.col(response);
    if (rc < 0) throw ConfigError("feature table has no response column '" + response + "'");
    y = table.columns[rc];
}

ShapMatrix load_shap_csv(const std::string& path, std::vector<std::string>* ids = nullptr) {
    CsvTable t = read_csv(path);
    ShapMatrix shap;
    int base_c = t.require_col("base_value", path);
    std::vector<int> phi_cols;
    for (size_t c = 0; c < t.header.size(); ++c) {
        const auto& h = t.header[c];
        if (h.rfind("phi_", 0) == 0 && h != "phi_C" && h != "phi_O" && h != "phi_P" &&
            h != "phi_L") {
            shap.feature_names.push_back(h.substr(4));
            phi_cols.push_back(static_cast<int>(c));
        }
    }
    for (const auto& row : t.rows) {
        if (ids) ids->push_back(row[0]);
        shap.base_value = parse_double(row[base_c], path);
        std::vector<double> phi;
        for (int c : phi_cols) phi.push_back(parse_double(row[c], path));
        shap.values.push_back(std::move(phi));
    }
    return shap;
}

// ----------------------------------------------------------------- stages --

void stage_synth(const PipelineConfig& c) {
    Manifest m(c, "synth");
    SynthConfig sc = c.synth;
    sc.seed = derive_seed(c.seed, "synth");
    m.params()["blocks_x"] = sc.blocks_x;
    m.params()["blocks_y"] = sc.blocks_y;
    m.params()["block_m"] = sc.block_m;
    m.params()["irregularity"] = sc.irregularity;
    m.params()["n_trajectories"] = sc.n_trajectories;
    m.params()["n_pois"] = sc.n_pois;
    m.params()["noise_sd"] = sc.noise_sd;
    m.params()["weights"] = {sc.w_C, sc.w_P, sc.w_L};
    m.params()["mismatch_quarter"] = sc.mismatch_quarter;
    SynthCity city = generate(sc);
    for (const char* name : {"segments.geojson", "attrs.csv", "trajectories.csv", "pois.csv",
                             "landuse.csv", "population.csv", "ground_truth.csv",
                             "synth_meta.json"})
        m.output(name);
    write_city(city, c.run_dir + "/synth");
    m.write();
}

void stage_ingest(const PipelineConfig& c) {
    Manifest m(c, "ingest");
    std::string src = input_or_synth(c, c.inputs.segments, "segments.geojson");
    auto segments = load_segments(m.input(src, "synth"));
    m.params()["segments"] = m.relative_to_run(src);

    std::vector<std::string> issues;
    std::set<std::string> ids;
    for (const auto& seg : segments) {
        if (!ids.insert(seg.id).second) issues.push_back("duplicate id " + seg.id);
        double len = polyline_length(seg.geometry);
        if (std::abs(len - seg.length_m) > 1e-6 * std::max(1.0, len))
            issues.push_back("length mismatch on " + seg.id);
    }
    if (!issues.empty())
        throw ConfigError("ingest: " + std::to_string(issues.size()) + " issue(s), first: " +
                          issues.front());

    save_segments_csv(segments, m.output("segments.csv"));
    std::ofstream rep(m.output("ingest_report.txt"), std::ios::binary);
    rep << "segments " << segments.size() << "\nissues 0\n";
    m.write();
}

void stage_graph(const PipelineConfig& c) {
    Manifest m(c, "graph");
    auto segments = load_ingested_segments(c, m);
    m.params()["snap_tolerance_m"] = c.graph.snap_tolerance_m;
    m.params()["ego_radius_m"] = c.graph.ego_radius_m;

    StreetGraph graph = build_graph(segments, c.graph.snap_tolerance_m);
    CentralityResult cent = segment_centrality(graph, segments, c.graph.ego_radius_m);
    save_centrality_csv(segments, cent, m.output("centrality.csv"));
    std::ofstream rep(m.output("graph_report.txt"), std::ios::binary);
    rep << "nodes " << graph.n_nodes() << "\nedges " << graph.n_edges() << "\nwarnings "
        << graph.warnings.size() << "\n";
    for (const auto& w : graph.warnings) rep << "warning " << w << "\n";
    m.write();
}

void stage_features(const PipelineConfig& c) {
    Manifest m(c, "features");
    auto segments = load_ingested_segments(c, m);
    CsvTable cent = read_csv(m.input(stage_path(c, "graph", "centrality.csv"), "graph"));
    auto attrs = load_feature_table(
        m.input(input_or_synth(c, c.inputs.attrs, "attrs.csv"), "synth"));
    auto trajectories = load_trajectories_csv(
        m.input(input_or_synth(c, c.inputs.trajectories, "trajectories.csv"), "synth"));
    auto pois =
        load_pois_csv(m.input(input_or_synth(c, c.inputs.pois, "pois.csv"), "synth"));
    auto landuse = load_landuse_csv(
        m.input(input_or_synth(c, c.inputs.landuse, "landuse.csv"), "synth"));
    const auto& fc = c.features;
    m.params()["resample_interval_m"] = fc.resample_interval_m;
    m.params()["density_radii_m"] = fc.density_radii_m;
    m.params()["poi_radius_m"] = fc.poi_radius_m;
    m.params()["landuse_radius_m"] = fc.landuse_radius_m;
    m.params()["interpolate_max_rounds"] = fc.interpolate_max_rounds;
    m.params()["response"] = fc.response;

    if (attrs.n_rows() != segments.size())
        throw ConfigError("features: attrs row count != segment count");

    // response family from trajectories
    std::vector<Point> points;
    for (const auto& traj : trajectories) {
        auto pts = resample_trajectory(traj, fc.resample_interval_m);
        points.insert(points.end(), pts.begin(), pts.end());
    }
    DensityResult dens = match_density(points, segments, fc.density_radii_m);

    FeatureTable out;
    out.segment_ids = attrs.segment_ids;
    NormalizationParams params;

    for (size_t ri = 0; ri < fc.density_radii_m.size(); ++ri) {
        std::string name =
            "log_d" + std::to_string(static_cast<int>(fc.density_radii_m[ri])) + "_norm";
        std::vector<double> col = dens.density[ri];
        params.per_feature[name] = normalize_column(col, NormKind::log1p_zscore, name);
        out.add_column(name, std::move(col));
    }

    // provided attributes: interpolate missing over the street graph, then
    // standardize (log1p for non-negative columns, plain z-score otherwise)
    StreetGraph graph = build_graph(segments, c.graph.snap_tolerance_m);
    auto adjacency = segment_adjacency(graph);
    std::ofstream notes(m.output("feature_notes.txt"), std::ios::binary);
    auto add_standardized = [&](const std::string& name, std::vector<double> col,
                                std::vector<uint8_t> mask) {
        if (std::any_of(mask.begin(), mask.end(), [](uint8_t v) { return v != 0; })) {
            auto st = interpolate_missing(adjacency, col, mask, fc.interpolate_max_rounds);
            notes << name << " interpolated neighbors=" << st.filled_by_neighbors
                  << " global=" << st.filled_by_global_mean << " rounds=" << st.rounds_used
                  << "\n";
        }
        bool non_negative = std::all_of(col.begin(), col.end(), [](double v) { return v >= 0.0; });
        NormKind kind = non_negative ? NormKind::log1p_zscore : NormKind::zscore;
        auto entry = normalize_column(col, kind, name);
        if (entry.degenerate) notes << name << " degenerate (constant)\n";
        params.per_feature[name] = entry;
        out.add_column(name, std::move(col));
    };

    for (size_t ci = 0; ci < attrs.n_cols(); ++ci)
        add_standardized(attrs.names[ci], attrs.columns[ci], attrs.missing[ci]);

    // centralities computed by the graph stage
    for (const char* name : {"C_deg_800m", "C_clo_800m", "C_betw_800m", "C_depth_800m"}) {
        int col = cent.require_col(name, "centrality.csv");
        std::vector<double> v;
        for (const auto& row : cent.rows) v.push_back(parse_double(row[col], name));
        add_standardized(name, std::move(v), std::vector<uint8_t>(segments.size(), 0));
    }

    // buffer compositions and POI entropy
    for (auto& [name, col] : landuse_composition_all(landuse, segments, fc.landuse_radius_m))
        add_standardized(name, std::move(col), std::vector<uint8_t>(segments.size(), 0));
    add_standardized("L_poi_entropy" + std::to_string(static_cast<int>(fc.poi_radius_m)),
                     poi_entropy_all(pois, segments, fc.poi_radius_m),
                     std::vector<uint8_t>(segments.size(), 0));

    auto issues = validate_dataset(out, segments);
    if (!issues.empty())
        throw RuntimeError("features: validation failed: " + issues.front().kind + " " +
                           issues.front().detail);

    save_feature_table(out, m.output("features.csv"));
    save_norm_params(params, m.output("norm_params.csv"));
    m.write();
}

void write_cv_line(std::ofstream& out, const std::string& name, const CvReport& cv) {
    out << name << " r2 " << fmt_double(cv.mean_r2) << " +- " << fmt_double(cv.std_r2)
        << " rmse " << fmt_double(cv.mean_rmse) << " +- " << fmt_double(cv.std_rmse) << "\n";
    for (const auto& w : cv.warnings) out << name << " warning " << w << "\n";
}

void stage_train(const PipelineConfig& c) {
    Manifest m(c, "train");
    auto table =
        load_feature_table(m.input(stage_path(c, "features", "features.csv"), "features"));
    Dataset X;
    std::vector<double> y;
    split_feature_table(table, c.features.response, X, y);
    m.params()["folds"] = c.train.folds;
    m.params()["search_draws"] = c.train.search_draws;
    m.params()["baselines"] = c.train.baselines;
    m.params()["response"] = c.features.response;

    Hyperparams hp = c.train.gbdt;
    hp.seed = derive_seed(c.seed, "train_gbdt");

    if (c.train.search_draws > 0) {
        SearchSpace space;
        space.n_estimators = {c.train.gbdt.n_estimators};
        auto result = random_search(X, y, space, c.train.search_draws, c.train.folds,
                                    derive_seed(c.seed, "train_search"));
        hp = result.best;
        hp.seed = derive_seed(c.seed, "train_gbdt");
        CsvWriter log(m.output("search_log.csv"));
        log.row({"draw", "max_depth", "learning_rate", "subsample", "colsample_bytree", "gamma",
                 "mean_r2", "mean_rmse"});
        for (size_t i = 0; i < result.log.size(); ++i) {
            const auto& e = result.log[i];
            log.row({std::to_string(i), std::to_string(e.params.max_depth),
                     fmt_double(e.params.learning_rate), fmt_double(e.params.subsample),
                     fmt_double(e.params.colsample_bytree), fmt_double(e.params.gamma),
                     fmt_double(e.mean_r2), fmt_double(e.mean_rmse)});
        }
    }

    std::ofstream rep(m.output("cv_report.txt"), std::ios::binary);
    uint64_t cv_seed = derive_seed(c.seed, "train_cv");
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::gbdt;
    spec.gbdt = hp;
    write_cv_line(rep, "gbdt", cross_validate(X, y, spec, c.train.folds, cv_seed));
    if (c.train.baselines) {
        ModelSpec rf_spec;
        rf_spec.kind = ModelSpec::Kind::rf;
        rf_spec.rf = c.train.rf;
        rf_spec.rf.seed = derive_seed(c.seed, "train_rf");
        write_cv_line(rep, "rf", cross_validate(X, y, rf_spec, c.train.folds, cv_seed));
        ModelSpec ols_spec;
        ols_spec.kind = ModelSpec::Kind::ols;
        write_cv_line(rep, "ols", cross_validate(X, y, ols_spec, c.train.folds, cv_seed));
    }

    GbdtModel model = fit_gbdt(X, y, hp);
    save_model(model, m.output("model.txt"));

    auto pred = model.predict_all(X);
    CsvWriter pw(m.output("predictions.csv"));
    pw.row({"segment_id", "y", "y_hat"});
    for (size_t r = 0; r < X.n_rows(); ++r)
        pw.row({table.segment_ids[r], fmt_double(y[r]), fmt_double(pred[r])});
    m.write();
}

void stage_explain(const PipelineConfig& c) {
    Manifest m(c, "explain");
    auto model = load_model(m.input(stage_path(c, "train", "model.txt"), "train"));
    auto table =
        load_feature_table(m.input(stage_path(c, "features", "features.csv"), "features"));
    Dataset X;
    std::vector<double> y;
    split_feature_table(table, c.features.response, X, y);
    m.params()["merge_o_into_c"] = c.explain.merge_o_into_c;

    ShapMatrix shap = tree_shap(model, X, c.threads);
    SchemaOptions opts;
    opts.merge_o_into_c = c.explain.merge_o_into_c;
    GroupContribution groups = group_shap(shap, opts);
    save_shap_csv(table.segment_ids, shap, groups, m.output("shap.csv"));
    save_shares_report(groups, opts.merge_o_into_c, m.output("shares.txt"));

    // per-feature (value, phi) tables for the top attributed features,
    // plot-ready for external dependence charts
    std::vector<int> all_rows(X.n_rows());
    std::iota(all_rows.begin(), all_rows.end(), 0);
    auto top = rank_features(shap, {Dim::C, Dim::P, Dim::L}, all_rows, 10);
    for (int f : top) {
        const std::string& name = shap.feature_names[f];
        auto pairs = dependence_table(shap, X, name);
        CsvWriter w(m.output("dependence_" + name + ".csv"));
        w.row({"value", "phi"});
        for (const auto& [v, phi] : pairs) w.row({fmt_double(v), fmt_double(phi)});
    }
    m.write();
}

void stage_classify(const PipelineConfig& c) {
    Manifest m(c, "classify");
    std::vector<std::string> ids;
    ShapMatrix shap = load_shap_csv(m.input(stage_path(c, "explain", "shap.csv"), "explain"), &ids);
    m.params()["quantile"] = c.typology.quantile;
    m.params()["score_mode"] = score_mode_name(c.typology.score_mode);

    auto scores = deprivation_scores(shap, c.typology.score_mode);
    auto typology = classify_typology(scores, c.typology.quantile);
    save_typology_csv(ids, typology, m.output("typology.csv"));
    save_typology_report(typology, m.output("typology_report.txt"));
    m.write();
}

GridTable mismatch_grid(const PipelineConfig& c, Manifest& m,
                        const std::vector<RoadSegment>& segments) {
    CsvTable pred = read_csv(m.input(stage_path(c, "train", "predictions.csv"), "train"));
    int yh = pred.require_col("y_hat", "predictions.csv");
    std::vector<double> supply;
    for (const auto& row : pred.rows) supply.push_back(parse_double(row[yh], "predictions.csv"));
    if (supply.size() != segments.size())
        throw ConfigError("mismatch: prediction count != segment count");
    auto population = load_population_csv(
        m.input(input_or_synth(c, c.inputs.population, "population.csv"), "synth"));
    return aggregate_grid(segments, {"supply"}, {&supply}, population, c.mismatch.cell_size_m);
}

void stage_mismatch(const PipelineConfig& c) {
    Manifest m(c, "mismatch");
    auto segments = load_ingested_segments(c, m);
    std::vector<std::string> tids;
    auto typology =
        load_typology_csv(m.input(stage_path(c, "classify", "typology.csv"), "classify"), &tids);
    m.params()["cell_size_m"] = c.mismatch.cell_size_m;
    m.params()["scheme"] = c.mismatch.scheme == WeightScheme::queen ? "queen" : "rook";
    m.params()["permutations"] = c.mismatch.permutations;
    m.params()["alpha"] = c.mismatch.alpha;

    GridTable grid = mismatch_grid(c, m, segments);
    SpatialWeights w = build_weights(grid.spec, grid.has_supply, c.mismatch.scheme);
    std::vector<double> pop, supply;
    for (int id : w.cell_ids) {
        pop.push_back(grid.cells[id].population);
        supply.push_back(grid.aggregates.at("supply")[id]);
    }
    LisaResult lisa = bivariate_lisa(pop, supply, w, c.mismatch.permutations,
                                     derive_seed(c.seed, "lisa"), c.mismatch.alpha);
    MismatchReport report = mismatch_zones(lisa, w, typology, grid.cell_segments);

    CsvWriter gw(m.output("grid.csv"));
    gw.row({"cell_id", "row", "col", "origin_x", "origin_y", "population", "supply",
            "has_supply"});
    for (const auto& cell : grid.cells)
        gw.row({std::to_string(cell.id), std::to_string(cell.row), std::to_string(cell.col),
                fmt_double(cell.origin_x), fmt_double(cell.origin_y),
                fmt_double(cell.population), fmt_double(grid.aggregates.at("supply")[cell.id]),
                grid.has_supply[cell.id] ? "1" : "0"});
    save_lisa_csv(grid.spec, w, lisa, m.output("lisa.csv"));
    save_mismatch_csv(report, m.output("mismatch.csv"));

    // HL zone segment list for the simulate stage
    std::set<int> hl_segments;
    for (int cell_id : report.hl_cells)
        for (int s : grid.cell_segments[cell_id]) hl_segments.insert(s);
    CsvWriter hw(m.output("hl_segments.csv"));
    hw.row({"segment_id"});
    for (int s : hl_segments) hw.row({segments[s].id});
    m.write();
}

void stage_simulate(const PipelineConfig& c) {
    Manifest m(c, "simulate");
    auto model = load_model(m.input(stage_path(c, "train", "model.txt"), "train"));
    auto table =
        load_feature_table(m.input(stage_path(c, "features", "features.csv"), "features"));
    auto norms =
        load_norm_params(m.input(stage_path(c, "features", "norm_params.csv"), "features"));
    ShapMatrix shap = load_shap_csv(m.input(stage_path(c, "explain", "shap.csv"), "explain"));
    m.params()["zone"] = c.simulate.zone;
    m.params()["direction_rule"] = direction_rule_name(c.simulate.direction);
    m.params()["scenarios"] = c.simulate.grid.scenarios.size();

    Dataset X;
    std::vector<double> y;
    split_feature_table(table, c.features.response, X, y);

    std::vector<int> zone_rows;
    if (c.simulate.zone == "all") {
        zone_rows.resize(X.n_rows());
        std::iota(zone_rows.begin(), zone_rows.end(), 0);
    } else {  // hl
        CsvTable hl =
            read_csv(m.input(stage_path(c, "mismatch", "hl_segments.csv"), "mismatch"));
        std::set<std::string> wanted;
        for (const auto& row : hl.rows) wanted.insert(row[0]);
        for (size_t r = 0; r < table.segment_ids.size(); ++r)
            if (wanted.count(table.segment_ids[r])) zone_rows.push_back(static_cast<int>(r));
    }

    ScenarioGrid grid = c.simulate.grid;
    for (auto& s : grid.scenarios) s.direction = c.simulate.direction;
    GridReport report = scenario_grid(model, grid, X, shap,
                                      norms.require(c.features.response), zone_rows);
    save_scenario_csv(report, m.output("scenarios.csv"));
    save_scenario_text(report, m.output("scenarios.txt"));
    m.write();
}

void append_file(std::ofstream& out, const std::string& path, const char* title) {
    out << "== " << title << " ==\n";
    std::ifstream in(path);
    if (!in) {
        out << "(missing)\n\n";
        return;
    }
    out << in.rdbuf() << "\n";
}

void stage_report(const PipelineConfig& c) {
    Manifest m(c, "report");
    std::ofstream out(m.output("report.txt"), std::ios::binary);
    out << "street exercise deprivation pipeline report\n\n";
    append_file(out, m.input(stage_path(c, "train", "cv_report.txt"), "train"), "model family");
    append_file(out, m.input(stage_path(c, "explain", "shares.txt"), "explain"),
                "triadic shares");
    append_file(out, m.input(stage_path(c, "classify", "typology_report.txt"), "classify"),
                "deprivation typology");
    append_file(out, m.input(stage_path(c, "mismatch", "mismatch.csv"), "mismatch"),
                "mismatch cross-tab");
    append_file(out, m.input(stage_path(c, "simulate", "scenarios.txt"), "simulate"),
                "intervention scenarios");
    m.write();
}

}  // namespace

PipelineConfig config_from_json_text(const std::string& text, const std::string& where) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(where + ": parse error at byte " + std::to_string(e.byte) + ": " +
                          e.what());
    }
    PipelineConfig c;
    check_keys(doc, "", {"run_dir", "seed", "threads", "synth", "inputs", "graph", "features",
                         "train", "explain", "typology", "mismatch", "simulate"});
    c.run_dir = get_str(doc, "run_dir", c.run_dir);
    c.seed = static_cast<uint64_t>(get_num(doc, "", "seed", 42.0, 0.0, 1.8e19));
    c.threads = get_int(doc, "", "threads", 1, 1, 256);

    if (doc.contains("synth")) {
        const auto& s = doc.at("synth");
        check_keys(s, "synth",
                   {"blocks_x", "blocks_y", "block_m", "irregularity", "n_trajectories",
                    "n_pois", "noise_sd", "w_C", "w_P", "w_L", "mismatch_quarter"});
        c.synth.blocks_x = get_int(s, "synth", "blocks_x", c.synth.blocks_x, 2, 512);
        c.synth.blocks_y = get_int(s, "synth", "blocks_y", c.synth.blocks_y, 2, 512);
        c.synth.block_m = get_num(s, "synth", "block_m", c.synth.block_m, 10.0, 5000.0);
        c.synth.irregularity = get_num(s, "synth", "irregularity", c.synth.irregularity, 0.0, 1.0);
        c.synth.n_trajectories =
            get_int(s, "synth", "n_trajectories", c.synth.n_trajectories, 0, 10000000);
        c.synth.n_pois = get_int(s, "synth", "n_pois", c.synth.n_pois, 0, 10000000);
        c.synth.noise_sd = get_num(s, "synth", "noise_sd", c.synth.noise_sd, 0.0, 100.0);
        c.synth.w_C = get_num(s, "synth", "w_C", c.synth.w_C, -100.0, 100.0);
        c.synth.w_P = get_num(s, "synth", "w_P", c.synth.w_P, -100.0, 100.0);
        c.synth.w_L = get_num(s, "synth", "w_L", c.synth.w_L, -100.0, 100.0);
        c.synth.mismatch_quarter =
            get_bool(s, "synth", "mismatch_quarter", c.synth.mismatch_quarter);
    }
    if (doc.contains("inputs")) {
        const auto& s = doc.at("inputs");
        check_keys(s, "inputs",
                   {"segments", "attrs", "trajectories", "pois", "landuse", "population"});
        c.inputs.segments = get_str(s, "segments", "");
        c.inputs.attrs = get_str(s, "attrs", "");
        c.inputs.trajectories = get_str(s, "trajectories", "");
        c.inputs.pois = get_str(s, "pois", "");
        c.inputs.landuse = get_str(s, "landuse", "");
        c.inputs.population = get_str(s, "population", "");
    }
    if (doc.contains("graph")) {
        const auto& s = doc.at("graph");
        check_keys(s, "graph", {"snap_tolerance_m", "ego_radius_m"});
        c.graph.snap_tolerance_m =
            get_num(s, "graph", "snap_tolerance_m", c.graph.snap_tolerance_m, 0.0, 1000.0);
        c.graph.ego_radius_m =
            get_num(s, "graph", "ego_radius_m", c.graph.ego_radius_m, 1.0, 100000.0);
    }
    if (doc.contains("features")) {
        const auto& s = doc.at("features");
        check_keys(s, "features",
                   {"resample_interval_m", "density_radii_m", "poi_radius_m", "landuse_radius_m",
                    "interpolate_max_rounds", "response"});
        c.features.resample_interval_m = get_num(s, "features", "resample_interval_m",
                                                 c.features.resample_interval_m, 0.1, 1000.0);
        if (s.contains("density_radii_m")) {
            c.features.density_radii_m.clear();
            for (const auto& v : s.at("density_radii_m")) {
                double r = v.get<double>();
                if (!(r > 0.0)) throw ConfigError("config: density radius must be > 0");
                c.features.density_radii_m.push_back(r);
            }
            if (c.features.density_radii_m.empty())
                throw ConfigError("config: 'features.density_radii_m' is empty");
        }
        c.features.poi_radius_m =
            get_num(s, "features", "poi_radius_m", c.features.poi_radius_m, 1.0, 100000.0);
        c.features.landuse_radius_m =
            get_num(s, "features", "landuse_radius_m", c.features.landuse_radius_m, 1.0, 100000.0);
        c.features.interpolate_max_rounds =
            get_int(s, "features", "interpolate_max_rounds", c.features.interpolate_max_rounds,
                    0, 1000);
        c.features.response = get_str(s, "response", c.features.response);
    }
    if (doc.contains("train")) {
        const auto& s = doc.at("train");
        check_keys(s, "train", {"folds", "search_draws", "baselines", "gbdt", "rf"});
        c.train.folds = get_int(s, "train", "folds", c.train.folds, 2, 1000);
        c.train.search_draws = get_int(s, "train", "search_draws", c.train.search_draws, 0, 10000);
        c.train.baselines = get_bool(s, "train", "baselines", c.train.baselines);
        if (s.contains("gbdt")) {
            const auto& g = s.at("gbdt");
            check_keys(g, "train.gbdt",
                       {"n_estimators", "max_depth", "learning_rate", "subsample",
                        "colsample_bytree", "gamma", "lambda", "min_child_weight"});
            auto& hp = c.train.gbdt;
            hp.n_estimators = get_int(g, "train.gbdt", "n_estimators", hp.n_estimators, 1, 100000);
            hp.max_depth = get_int(g, "train.gbdt", "max_depth", hp.max_depth, 0, 64);
            hp.learning_rate =
                get_num(g, "train.gbdt", "learning_rate", hp.learning_rate, 0.0, 10.0);
            hp.subsample = get_num(g, "train.gbdt", "subsample", hp.subsample, 1e-6, 1.0);
            hp.colsample_bytree =
                get_num(g, "train.gbdt", "colsample_bytree", hp.colsample_bytree, 1e-6, 1.0);
            hp.gamma = get_num(g, "train.gbdt", "gamma", hp.gamma, 0.0, 1e9);
            hp.lambda_l2 = get_num(g, "train.gbdt", "lambda", hp.lambda_l2, 0.0, 1e9);
            hp.min_child_weight =
                get_num(g, "train.gbdt", "min_child_weight", hp.min_child_weight, 0.0, 1e9);
        }
        if (s.contains("rf")) {
            const auto& g = s.at("rf");
            check_keys(g, "train.rf", {"n_estimators", "max_depth", "max_features"});
            c.train.rf.n_estimators =
                get_int(g, "train.rf", "n_estimators", c.train.rf.n_estimators, 1, 100000);
            c.train.rf.max_depth = get_int(g, "train.rf", "max_depth", c.train.rf.max_depth, 1, 64);
            std::string mf = get_str(g, "max_features", "sqrt");
            if (mf == "all") {
                c.train.rf.max_features = RfParams::MaxFeatures::all;
            } else if (mf == "sqrt") {
                c.train.rf.max_features = RfParams::MaxFeatures::sqrt;
            } else if (mf == "log2") {
                c.train.rf.max_features = RfParams::MaxFeatures::log2;
            } else {
                throw ConfigError("config: 'train.rf.max_features' must be all|sqrt|log2");
            }
        }
    }
    if (doc.contains("explain")) {
        const auto& s = doc.at("explain");
        check_keys(s, "explain", {"merge_o_into_c"});
        c.explain.merge_o_into_c = get_bool(s, "explain", "merge_o_into_c", true);
    }
    if (doc.contains("typology")) {
        const auto& s = doc.at("typology");
        check_keys(s, "typology", {"quantile", "score_mode"});
        c.typology.quantile = get_num(s, "typology", "quantile", c.typology.quantile, 0.01, 0.99);
        c.typology.score_mode = score_mode_from_name(get_str(s, "score_mode", "negated_sum"));
    }
    if (doc.contains("mismatch")) {
        const auto& s = doc.at("mismatch");
        check_keys(s, "mismatch", {"cell_size_m", "scheme", "permutations", "alpha"});
        c.mismatch.cell_size_m =
            get_num(s, "mismatch", "cell_size_m", c.mismatch.cell_size_m, 1.0, 100000.0);
        std::string scheme = get_str(s, "scheme", "queen");
        if (scheme == "queen") {
            c.mismatch.scheme = WeightScheme::queen;
        } else if (scheme == "rook") {
            c.mismatch.scheme = WeightScheme::rook;
        } else {
            throw ConfigError("config: 'mismatch.scheme' must be queen|rook");
        }
        c.mismatch.permutations =
            get_int(s, "mismatch", "permutations", c.mismatch.permutations, 99, 1000000);
        c.mismatch.alpha = get_num(s, "mismatch", "alpha", c.mismatch.alpha, 1e-6, 0.5);
    }
    if (doc.contains("simulate")) {
        const auto& s = doc.at("simulate");
        check_keys(s, "simulate", {"zone", "direction_rule", "grid"});
        c.simulate.zone = get_str(s, "zone", "hl");
        if (c.simulate.zone != "hl" && c.simulate.zone != "all")
            throw ConfigError("config: 'simulate.zone' must be hl|all");
        c.simulate.direction = direction_rule_from_name(get_str(s, "direction_rule", "spearman"));
        if (s.contains("grid")) {
            c.simulate.grid.scenarios.clear();
            for (const auto& row : s.at("grid")) {
                check_keys(row, "simulate.grid[]", {"dims", "intensity", "top_k"});
                Scenario sc;
                sc.dimensions = parse_dims(get_str(row, "dims", ""), "simulate.grid[].dims");
                sc.intensity = get_num(row, "simulate.grid[]", "intensity", 0.2, 1e-9, 1.0);
                sc.top_k = get_int(row, "simulate.grid[]", "top_k", 5, 1, 10000);
                c.simulate.grid.scenarios.push_back(std::move(sc));
            }
            if (c.simulate.grid.scenarios.empty())
                throw ConfigError("config: 'simulate.grid' is empty");
        }
    }
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str(), path);
}

std::string config_echo(const PipelineConfig& c) {
    ordered_json doc;
    doc["run_dir"] = c.run_dir;
    doc["seed"] = c.seed;
    doc["threads"] = c.threads;
    doc["synth"] = {{"blocks_x", c.synth.blocks_x},
                    {"blocks_y", c.synth.blocks_y},
                    {"block_m", c.synth.block_m},
                    {"irregularity", c.synth.irregularity},
                    {"n_trajectories", c.synth.n_trajectories},
                    {"n_pois", c.synth.n_pois},
                    {"noise_sd", c.synth.noise_sd},
                    {"w_C", c.synth.w_C},
                    {"w_P", c.synth.w_P},
                    {"w_L", c.synth.w_L},
                    {"mismatch_quarter", c.synth.mismatch_quarter}};
    doc["inputs"] = {{"segments", c.inputs.segments},
                     {"attrs", c.inputs.attrs},
                     {"trajectories", c.inputs.trajectories},
                     {"pois", c.inputs.pois},
                     {"landuse", c.inputs.landuse},
                     {"population", c.inputs.population}};
    doc["graph"] = {{"snap_tolerance_m", c.graph.snap_tolerance_m},
                    {"ego_radius_m", c.graph.ego_radius_m}};
    doc["features"] = {{"resample_interval_m", c.features.resample_interval_m},
                       {"density_radii_m", c.features.density_radii_m},
                       {"poi_radius_m", c.features.poi_radius_m},
                       {"landuse_radius_m", c.features.landuse_radius_m},
                       {"interpolate_max_rounds", c.features.interpolate_max_rounds},
                       {"response", c.features.response}};
    doc["train"] = {{"folds", c.train.folds},
                    {"search_draws", c.train.search_draws},
                    {"baselines", c.train.baselines},
                    {"gbdt",
                     {{"n_estimators", c.train.gbdt.n_estimators},
                      {"max_depth", c.train.gbdt.max_depth},
                      {"learning_rate", c.train.gbdt.learning_rate},
                      {"subsample", c.train.gbdt.subsample},
                      {"colsample_bytree", c.train.gbdt.colsample_bytree},
                      {"gamma", c.train.gbdt.gamma},
                      {"lambda", c.train.gbdt.lambda_l2},
                      {"min_child_weight", c.train.gbdt.min_child_weight}}},
                    {"rf",
                     {{"n_estimators", c.train.rf.n_estimators},
                      {"max_depth", c.train.rf.max_depth},
                      {"max_features",
                       c.train.rf.max_features == RfParams::MaxFeatures::all    ? "all"
                       : c.train.rf.max_features == RfParams::MaxFeatures::sqrt ? "sqrt"
                                                                                : "log2"}}}};
    doc["explain"] = {{"merge_o_into_c", c.explain.merge_o_into_c}};
    doc["typology"] = {{"quantile", c.typology.quantile},
                       {"score_mode", score_mode_name(c.typology.score_mode)}};
    doc["mismatch"] = {{"cell_size_m", c.mismatch.cell_size_m},
                       {"scheme", c.mismatch.scheme == WeightScheme::queen ? "queen" : "rook"},
                       {"permutations", c.mismatch.permutations},
                       {"alpha", c.mismatch.alpha}};
    auto grid = ordered_json::array();
    for (const auto& s : c.simulate.grid.scenarios)
        grid.push_back(
            {{"dims", s.label()}, {"intensity", s.intensity}, {"top_k", s.top_k}});
    doc["simulate"] = {{"zone", c.simulate.zone},
                       {"direction_rule", direction_rule_name(c.simulate.direction)},
                       {"grid", grid}};
    return doc.dump(1);
}

void run_stage(const std::string& stage, const PipelineConfig& config) {
    if (stage == "synth") {
        stage_synth(config);
    } else if (stage == "ingest") {
        stage_ingest(config);
    } else if (stage == "graph") {
        stage_graph(config);
    } else if (stage == "features") {
        stage_features(config);
    } else if (stage == "train") {
        stage_train(config);
    } else if (stage == "explain") {
        stage_explain(config);
    } else if (stage == "classify") {
        stage_classify(config);
    } else if (stage == "mismatch") {
        stage_mismatch(config);
    } else if (stage == "simulate") {
        stage_simulate(config);
    } else if (stage == "report") {
        stage_report(config);
    } else {
        throw ConfigError("unknown stage '" + stage + "'");
    }
}

void run_all(const PipelineConfig& config) {
    for (const auto& stage : kStageNames) run_stage(stage, config);
}

}  // namespace stride
