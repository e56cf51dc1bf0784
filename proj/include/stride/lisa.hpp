// Bivariate local Moran's I on the harmonized grid with conditional
// permutation inference, and the mismatch cross-tabulation against the road
// typology. Direction is fixed: x is population at the cell, y is supply in
// the neighborhood (the statistic is asymmetric in x and y).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stride/features.hpp"
#include "stride/typology.hpp"

namespace stride {

enum class WeightScheme { queen, rook };

struct SpatialWeights {
    // per included cell: lattice-adjacent included neighbors, row-standardized
    std::vector<std::vector<int>> neighbors;   // indices into the included-cell list
    std::vector<std::vector<double>> weights;  // same shape, rows sum to 1 (or 0 if isolated)
    std::vector<int> cell_ids;                 // included cell id per local index
    std::vector<int> isolated;                 // local indices without neighbors
};

// Queen: up to 8 lattice neighbors, rook: up to 4. Cells where included is 0
// (null supply) do not participate at all.
SpatialWeights build_weights(const GridSpec& spec, const std::vector<uint8_t>& included,
                             WeightScheme scheme = WeightScheme::queen);

enum class LisaCluster : uint8_t { NS = 0, HH, LL, HL, LH };

const char* lisa_cluster_name(LisaCluster c);

struct LisaResult {
    std::vector<double> I;         // per included cell
    std::vector<double> pseudo_p;  // (count(|I*| >= |I|) + 1) / (perm + 1), two-sided
    std::vector<double> z_x;       // population z-score of x
    std::vector<double> lag_y;     // spatial lag of z-scored y
    std::vector<LisaCluster> cluster;
    double global_moran = 0.0;     // mean of I over included cells
    double alpha = 0.05;
    std::vector<std::string> warnings;
};

// I_i = z_x(i) * sum_j w_ij z_y(j). Standardization uses population
// (divide-by-n) moments over the included cells. The conditional permutation
// holds z_x(i) fixed and resamples neighbor values from the other cells;
// per-cell RNG streams derive from (seed, cell id).
LisaResult bivariate_lisa(const std::vector<double>& x, const std::vector<double>& y,
                          const SpatialWeights& w, int permutations = 999, uint64_t seed = 42,
                          double alpha = 0.05);

struct MismatchReport {
    // counts of typology labels among segments intersecting cells of each cluster
    size_t counts[5][8] = {};
    std::vector<int> hl_cells;  // grid cell ids labeled HL
    size_t n_hl_segments = 0;
};

MismatchReport mismatch_zones(const LisaResult& lisa, const SpatialWeights& w,
                              const TypologyResult& typology,
                              const std::vector<std::vector<int>>& cell_segments);

void save_lisa_csv(const GridSpec& spec, const SpatialWeights& w, const LisaResult& lisa,
                   const std::string& path);
void save_mismatch_csv(const MismatchReport& report, const std::string& path);

}  // namespace stride
