// Street graph construction (endpoint snapping via union-find over a spatial
// hash) and network centralities within metric ego-graphs: degree, closeness
// 1/sum(d_ij), betweenness with equal-path splitting, and mean depth.
#pragma once

#include <string>
#include <vector>

#include "stride/core.hpp"

namespace stride {

struct StreetGraph {
    struct Edge {
        int u = -1, v = -1;
        double weight_m = 0.0;
        int segment = -1;  // index into the segment vector this graph was built from
    };

    std::vector<Point> node_pos;
    std::vector<Edge> edges;
    std::vector<std::vector<std::pair<int, int>>> adjacency;  // node -> (neighbor, edge id)
    std::vector<std::pair<int, int>> segment_nodes;            // segment -> (u, v)
    std::vector<int> segment_edge;                             // segment -> edge id, -1 if dropped
    std::vector<std::string> warnings;

    size_t n_nodes() const { return node_pos.size(); }
    size_t n_edges() const { return edges.size(); }
};

// Merges endpoints within snap_tolerance_m into one node and assigns
// from_node/to_node on the segments. Parallel edges keep the shorter one;
// snapped-to-loop segments get is_loop and no edge. Components other than
// the largest are listed in warnings.
StreetGraph build_graph(std::vector<RoadSegment>& segments, double snap_tolerance_m = 0.5);

struct EgoGraph {
    std::vector<int> nodes;       // graph node ids, origin first
    std::vector<double> dist;     // shortest-path distance from origin, parallel to nodes
    std::vector<std::pair<int, int>> edges;  // edge endpoints as indices into nodes
    std::vector<double> edge_weights;
};

// Exactly the nodes with shortest-path distance <= radius_m from origin plus
// all edges between included nodes.
EgoGraph ego_subgraph(const StreetGraph& graph, int origin, double radius_m);

struct NodeMetrics {
    double degree = 0.0;
    double closeness = 0.0;
    double betweenness = 0.0;
    double depth = 0.0;
};

// Metrics for origin computed on its ego-subgraph. Betweenness counts
// unordered pairs of other ego nodes with proportional credit for tied
// shortest paths; a single-node ego yields all zeros.
NodeMetrics node_metrics(const StreetGraph& graph, int origin, double radius_m);

struct CentralityResult {
    std::vector<double> deg, clo, betw, depth;  // per segment
};

// Per-segment centralities at the segment midpoint, realized by splitting
// the segment into two half-edges around a virtual node. Degree is the
// count of ego edges incident to the segment's endpoints excluding the
// segment itself (the midpoint node's own degree is always 2).
CentralityResult segment_centrality(const StreetGraph& graph,
                                    const std::vector<RoadSegment>& segments,
                                    double radius_m = 800.0);

void save_centrality_csv(const std::vector<RoadSegment>& segments,
                         const CentralityResult& result, const std::string& path);

}  // namespace stride
