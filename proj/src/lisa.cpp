#include "stride/lisa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "stride/csv.hpp"
#include "stride/rng.hpp"

namespace stride {

SpatialWeights build_weights(const GridSpec& spec, const std::vector<uint8_t>& included,
                             WeightScheme scheme) {
    if (spec.n_cells() == 0) throw ConfigError("build_weights: empty grid");
    if (included.size() != spec.n_cells())
        throw ConfigError("build_weights: inclusion mask size mismatch");

    std::vector<int> local_of(spec.n_cells(), -1);
    SpatialWeights w;
    for (int r = 0; r < spec.rows; ++r)
        for (int c = 0; c < spec.cols; ++c) {
            int id = spec.cell_id(r, c);
            if (!included[id]) continue;
            local_of[id] = static_cast<int>(w.cell_ids.size());
            w.cell_ids.push_back(id);
        }
    if (w.cell_ids.empty()) throw ConfigError("build_weights: no included cells");

    w.neighbors.resize(w.cell_ids.size());
    w.weights.resize(w.cell_ids.size());
    for (size_t i = 0; i < w.cell_ids.size(); ++i) {
        int id = w.cell_ids[i];
        int row = id / spec.cols, col = id % spec.cols;
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                if (scheme == WeightScheme::rook && dr != 0 && dc != 0) continue;
                int nr = row + dr, nc = col + dc;
                if (!spec.contains(nr, nc)) continue;
                int nid = spec.cell_id(nr, nc);
                if (local_of[nid] >= 0) w.neighbors[i].push_back(local_of[nid]);
            }
        size_t k = w.neighbors[i].size();
        if (k == 0) {
            w.isolated.push_back(static_cast<int>(i));
        } else {
            w.weights[i].assign(k, 1.0 / static_cast<double>(k));
        }
    }
    return w;
}

const char* lisa_cluster_name(LisaCluster c) {
    switch (c) {
        case LisaCluster::NS: return "NS";
        case LisaCluster::HH: return "HH";
        case LisaCluster::LL: return "LL";
        case LisaCluster::HL: return "HL";
        case LisaCluster::LH: return "LH";
    }
    return "?";
}

LisaResult bivariate_lisa(const std::vector<double>& x, const std::vector<double>& y,
                          const SpatialWeights& w, int permutations, uint64_t seed,
                          double alpha) {
    size_t n = w.cell_ids.size();
    if (x.size() != n || y.size() != n)
        throw ConfigError("bivariate_lisa: variable length != included cell count");
    if (permutations < 99) throw ConfigError("bivariate_lisa: need >= 99 permutations");

    LisaResult out;
    out.alpha = alpha;
    out.I.assign(n, 0.0);
    out.pseudo_p.assign(n, 1.0);
    out.z_x.assign(n, 0.0);
    out.lag_y.assign(n, 0.0);
    out.cluster.assign(n, LisaCluster::NS);

    auto standardize = [&](const std::vector<double>& v, std::vector<double>& z) -> bool {
        double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
        double var = 0.0;
        for (double t : v) var += (t - mean) * (t - mean);
        var /= static_cast<double>(n);
        double sd = std::sqrt(var);
        if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) return false;
        z.resize(n);
        for (size_t i = 0; i < n; ++i) z[i] = (v[i] - mean) / sd;
        return true;
    };
    std::vector<double> zx, zy;
    if (!standardize(x, zx) || !standardize(y, zy)) {
        out.warnings.push_back("constant variable: all I = 0, all cells NS");
        return out;
    }
    out.z_x = zx;

    for (size_t i = 0; i < n; ++i) {
        double lag = 0.0;
        for (size_t k = 0; k < w.neighbors[i].size(); ++k)
            lag += w.weights[i][k] * zy[w.neighbors[i][k]];
        out.lag_y[i] = lag;
        out.I[i] = zx[i] * lag;
    }
    out.global_moran =
        std::accumulate(out.I.begin(), out.I.end(), 0.0) / static_cast<double>(n);

    // Conditional permutation: hold z_x(i), draw the neighbor set's y values
    // from the other n-1 cells without replacement; two-sided pseudo p.
    for (size_t i = 0; i < n; ++i) {
        size_t k = w.neighbors[i].size();
        if (k == 0) continue;  // isolated: I = 0, NS
        SplitMix64 rng(derive_seed(seed, "lisa_cell", static_cast<uint64_t>(w.cell_ids[i])));
        std::vector<double> pool;
        pool.reserve(n - 1);
        for (size_t j = 0; j < n; ++j)
            if (j != i) pool.push_back(zy[j]);
        double abs_i = std::abs(out.I[i]);
        int hits = 0;
        for (int p = 0; p < permutations; ++p) {
            // partial Fisher-Yates: first k entries become the sampled neighbors
            for (size_t t = 0; t < k; ++t) {
                size_t j = t + static_cast<size_t>(rng.below(pool.size() - t));
                std::swap(pool[t], pool[j]);
            }
            double lag = 0.0;
            for (size_t t = 0; t < k; ++t) lag += w.weights[i][t] * pool[t];
            if (std::abs(zx[i] * lag) >= abs_i) ++hits;
        }
        out.pseudo_p[i] = static_cast<double>(hits + 1) / static_cast<double>(permutations + 1);
        if (out.pseudo_p[i] <= alpha) {
            bool high_x = zx[i] > 0.0;
            bool high_lag = out.lag_y[i] > 0.0;
            out.cluster[i] = high_x ? (high_lag ? LisaCluster::HH : LisaCluster::HL)
                                    : (high_lag ? LisaCluster::LH : LisaCluster::LL);
        }
    }
    return out;
}

MismatchReport mismatch_zones(const LisaResult& lisa, const SpatialWeights& w,
                              const TypologyResult& typology,
                              const std::vector<std::vector<int>>& cell_segments) {
    MismatchReport report;
    std::set<int> hl_segment_set;
    for (size_t i = 0; i < w.cell_ids.size(); ++i) {
        int cell_id = w.cell_ids[i];
        if (cell_id >= static_cast<int>(cell_segments.size())) continue;
        std::set<int> seen;
        for (int s : cell_segments[cell_id]) seen.insert(s);
        for (int s : seen) {
            if (s < 0 || s >= static_cast<int>(typology.labels.size()))
                throw ConfigError("mismatch_zones: segment index out of typology range");
            ++report.counts[static_cast<int>(lisa.cluster[i])]
                           [static_cast<int>(typology.labels[s])];
        }
        if (lisa.cluster[i] == LisaCluster::HL) {
            report.hl_cells.push_back(cell_id);
            for (int s : seen) hl_segment_set.insert(s);
        }
    }
    report.n_hl_segments = hl_segment_set.size();
    return report;
}

void save_lisa_csv(const GridSpec& spec, const SpatialWeights& w, const LisaResult& lisa,
                   const std::string& path) {
    CsvWriter out(path);
    out.row({"cell_id", "row", "col", "z_pop", "lag_supply", "I", "pseudo_p", "cluster"});
    for (size_t i = 0; i < w.cell_ids.size(); ++i) {
        int id = w.cell_ids[i];
        out.row({std::to_string(id), std::to_string(id / spec.cols),
                 std::to_string(id % spec.cols), fmt_double(lisa.z_x[i]),
                 fmt_double(lisa.lag_y[i]), fmt_double(lisa.I[i]), fmt_double(lisa.pseudo_p[i]),
                 lisa_cluster_name(lisa.cluster[i])});
    }
}

void save_mismatch_csv(const MismatchReport& report, const std::string& path) {
    CsvWriter out(path);
    std::vector<std::string> header{"cluster"};
    for (int t = 0; t < 8; ++t) header.push_back(type_label_name(static_cast<TypeLabel>(t)));
    out.row(header);
    for (int c = 0; c < 5; ++c) {
        std::vector<std::string> row{lisa_cluster_name(static_cast<LisaCluster>(c))};
        for (int t = 0; t < 8; ++t) row.push_back(std::to_string(report.counts[c][t]));
        out.row(row);
    }
}

}  // namespace stride
