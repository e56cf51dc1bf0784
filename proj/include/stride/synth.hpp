// Deterministic synthetic city: a jittered lattice street network with
// planted C/P/L response signals, trajectories realizing the target exercise
// densities, POIs, land use, population, and an optional high-population /
// low-supply quarter for mismatch recovery. All randomness flows through
// SplitMix64 streams derived from the seed, so a fixed seed reproduces every
// output byte for byte.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stride/core.hpp"
#include "stride/io.hpp"

namespace stride {

struct SynthConfig {
    uint64_t seed = 42;
    int blocks_x = 31;
    int blocks_y = 31;
    double block_m = 150.0;
    double irregularity = 0.25;  // node jitter as a fraction of block_m
    int n_trajectories = 12000;  // approximate pass count over segments
    int n_pois = 4000;
    double noise_sd = 0.5774;    // latent noise; R^2 ceiling ~ 1/(1+sd^2)
    double w_C = 1.0, w_P = 1.0, w_L = 1.0;
    bool mismatch_quarter = true;

    bool operator==(const SynthConfig&) const = default;
};

struct SynthGroundTruth {
    // standardized component signals and their weighted combination
    std::vector<double> g_c, g_p, g_l;
    std::vector<double> signal;  // standardized weighted sum
    std::vector<double> latent;  // signal + noise, drives the densities
    std::vector<uint8_t> in_quarter;
    double quarter_x0 = 0.0, quarter_y0 = 0.0, quarter_x1 = 0.0, quarter_y1 = 0.0;
    bool has_quarter = false;
};

struct SynthCity {
    SynthConfig config;
    std::vector<RoadSegment> segments;
    FeatureTable attrs;  // provided raw feature columns, some cells masked missing
    std::vector<std::vector<Point>> trajectories;
    std::vector<PoiRecord> pois;
    std::vector<LanduseCell> landuse;
    std::vector<PopulationCell> population;
    SynthGroundTruth truth;
};

SynthCity generate(const SynthConfig& config);

// Noise-free planted response w_C*g_C + w_P*g_P + w_L*g_L; bounds achievable
// R^2. The city must have been generated with the same config.
std::vector<double> oracle_response(const SynthCity& city, const SynthConfig& config);

// Writes the exact file formats the ingestion stages consume:
// segments.geojson, attrs.csv, trajectories.csv, pois.csv, landuse.csv,
// population.csv, plus ground_truth.csv and synth_meta.json.
void write_city(const SynthCity& city, const std::string& dir);

}  // namespace stride
