// File-based pipeline orchestration: a JSON config drives ten stages (synth,
// ingest, graph, features, train, explain, classify, mismatch, simulate,
// report), each reading the previous stage's artifacts and writing its own
// plus a run manifest with parameter echo and input hashes.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stride/intervention.hpp"
#include "stride/lisa.hpp"
#include "stride/model.hpp"
#include "stride/synth.hpp"
#include "stride/typology.hpp"

namespace stride {

struct PipelineConfig {
    std::string run_dir = "runs/default";
    uint64_t seed = 42;
    int threads = 1;

    SynthConfig synth;

    // external input files; empty fields fall back to the synth stage outputs
    struct Inputs {
        std::string segments;
        std::string attrs;
        std::string trajectories;
        std::string pois;
        std::string landuse;
        std::string population;
    } inputs;

    struct Graph {
        double snap_tolerance_m = 0.5;
        double ego_radius_m = 800.0;
    } graph;

    struct Features {
        double resample_interval_m = 5.0;
        std::vector<double> density_radii_m{10.0, 20.0, 30.0};
        double poi_radius_m = 300.0;
        double landuse_radius_m = 100.0;
        int interpolate_max_rounds = 5;
        std::string response = "log_d30_norm";
    } features;

    struct Train {
        int folds = 10;
        int search_draws = 0;  // 0: use the configured hyperparameters directly
        bool baselines = true;
        Hyperparams gbdt{150, 6, 0.1, 0.8, 0.8, 0.1, 1.0, 1.0, 42};
        RfParams rf{100, 8, RfParams::MaxFeatures::sqrt, 42};
    } train;

    struct Explain {
        bool merge_o_into_c = true;
    } explain;

    struct Typology {
        double quantile = 0.8;
        ScoreMode score_mode = ScoreMode::negated_sum;
    } typology;

    struct Mismatch {
        double cell_size_m = 200.0;
        WeightScheme scheme = WeightScheme::queen;
        int permutations = 999;
        double alpha = 0.05;
    } mismatch;

    struct Simulate {
        std::string zone = "hl";  // hl | all
        DirectionRule direction = DirectionRule::spearman_zone;
        ScenarioGrid grid = ScenarioGrid::standard();
    } simulate;
};

// Parses and fully validates; unknown keys and out-of-range values raise
// ConfigError with the offending key path. An empty JSON object yields all
// defaults.
PipelineConfig load_config(const std::string& path);
PipelineConfig config_from_json_text(const std::string& text, const std::string& where);

// Full config echo with every default filled in.
std::string config_echo(const PipelineConfig& config);

extern const std::vector<std::string> kStageNames;

// Runs one stage; artifacts land under config.run_dir/<stage>/ and the
// manifest under config.run_dir/manifests/<stage>.json. Missing upstream
// artifacts raise ConfigError naming the stage to run first.
void run_stage(const std::string& stage, const PipelineConfig& config);
void run_all(const PipelineConfig& config);

}  // namespace stride
