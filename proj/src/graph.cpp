#include "stride/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <unordered_map>

#include "stride/csv.hpp"

namespace stride {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative tolerance for "same length" shortest-path ties; scales with the
// path length so metric rescaling keeps the same tie structure.
bool tie_eq(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) return false;
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

struct DisjointSet {
    std::vector<int> parent;
    explicit DisjointSet(size_t n) : parent(n) {
        for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);  // min index wins: order-independent
    }
};

// Small adjacency-list graph over local ids; used for ego computations.
struct LocalGraph {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> adj;
};

struct SpResult {
    std::vector<double> dist;
    std::vector<double> sigma;  // shortest-path counts (double: counts can get large)
};

SpResult dijkstra_local(const LocalGraph& g, int src, double radius = kInf) {
    SpResult r;
    r.dist.assign(g.n, kInf);
    r.sigma.assign(g.n, 0.0);
    r.dist[src] = 0.0;
    r.sigma[src] = 1.0;
    std::vector<char> done(g.n, 0);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0.0, src});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (done[u]) continue;
        done[u] = 1;
        for (auto [v, w] : g.adj[u]) {
            double nd = r.dist[u] + w;
            if (nd > radius && !tie_eq(nd, radius)) continue;
            if (tie_eq(nd, r.dist[v])) {
                r.sigma[v] += r.sigma[u];  // another shortest path of the same length
            } else if (nd < r.dist[v]) {
                r.dist[v] = nd;
                r.sigma[v] = r.sigma[u];
                pq.push({nd, v});
            }
        }
    }
    return r;
}

// Metrics for one local node on a local graph (already radius-restricted).
NodeMetrics metrics_local(const LocalGraph& g, int origin, bool count_origin_degree = true) {
    NodeMetrics m;
    if (count_origin_degree) m.degree = static_cast<double>(g.adj[origin].size());
    auto from_origin = dijkstra_local(g, origin);
    double sum_d = 0.0;
    int reachable = 0;
    for (int t = 0; t < g.n; ++t) {
        if (t == origin || from_origin.dist[t] == kInf) continue;
        sum_d += from_origin.dist[t];
        ++reachable;
    }
    m.closeness = sum_d > 0.0 ? 1.0 / sum_d : 0.0;
    m.depth = reachable > 0 ? sum_d / reachable : 0.0;

    // Betweenness of origin over unordered pairs (s, t) of other nodes:
    // sigma_st(origin) / sigma_st, with sigma_st(origin) = sigma_s(origin) *
    // sigma_origin(t) whenever d(s,origin) + d(origin,t) = d(s,t).
    double betw = 0.0;
    for (int s = 0; s < g.n; ++s) {
        if (s == origin) continue;
        auto from_s = dijkstra_local(g, s);
        if (from_s.dist[origin] == kInf) continue;
        for (int t = s + 1; t < g.n; ++t) {
            if (t == origin || from_s.dist[t] == kInf || from_origin.dist[t] == kInf) continue;
            if (tie_eq(from_s.dist[origin] + from_origin.dist[t], from_s.dist[t]))
                betw += from_s.sigma[origin] * from_origin.sigma[t] / from_s.sigma[t];
        }
    }
    m.betweenness = betw;
    return m;
}

}  // namespace

StreetGraph build_graph(std::vector<RoadSegment>& segments, double snap_tolerance_m) {
    if (snap_tolerance_m < 0.0) throw ConfigError("snap_tolerance_m must be >= 0");
    {
        std::set<std::string> seen;
        for (const auto& s : segments)
            if (!seen.insert(s.id).second)
                throw ConfigError("duplicate segment id '" + s.id + "'");
    }

    // Endpoint snapping: union-find over a spatial hash with cells the size
    // of the tolerance, so candidates only live in the 3x3 neighborhood.
    size_t n_pts = segments.size() * 2;
    std::vector<Point> pts(n_pts);
    for (size_t s = 0; s < segments.size(); ++s) {
        pts[2 * s] = segments[s].geometry.front();
        pts[2 * s + 1] = segments[s].geometry.back();
    }
    DisjointSet dsu(n_pts);
    double cell = std::max(snap_tolerance_m, 1e-9);
    std::unordered_map<uint64_t, std::vector<int>> buckets;
    auto key = [&](long gx, long gy) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(gx)) << 32) |
               static_cast<uint64_t>(static_cast<uint32_t>(gy));
    };
    for (size_t i = 0; i < n_pts; ++i) {
        long gx = static_cast<long>(std::floor(pts[i].x / cell));
        long gy = static_cast<long>(std::floor(pts[i].y / cell));
        for (long dx = -1; dx <= 1; ++dx)
            for (long dy = -1; dy <= 1; ++dy) {
                auto it = buckets.find(key(gx + dx, gy + dy));
                if (it == buckets.end()) continue;
                for (int j : it->second)
                    if (dist(pts[i], pts[j]) <= snap_tolerance_m) dsu.unite(static_cast<int>(i), j);
            }
        buckets[key(gx, gy)].push_back(static_cast<int>(i));
    }

    StreetGraph g;
    std::vector<int> point_node(n_pts, -1);
    std::unordered_map<int, int> root_to_node;
    for (size_t i = 0; i < n_pts; ++i) {
        int root = dsu.find(static_cast<int>(i));
        auto it = root_to_node.find(root);
        if (it == root_to_node.end()) {
            int id = static_cast<int>(g.node_pos.size());
            g.node_pos.push_back(pts[root]);
            root_to_node[root] = id;
            point_node[i] = id;
        } else {
            point_node[i] = it->second;
        }
    }

    g.segment_nodes.resize(segments.size(), {-1, -1});
    g.segment_edge.assign(segments.size(), -1);
    std::map<std::pair<int, int>, int> edge_by_pair;
    for (size_t s = 0; s < segments.size(); ++s) {
        int u = point_node[2 * s];
        int v = point_node[2 * s + 1];
        segments[s].from_node = u;
        segments[s].to_node = v;
        g.segment_nodes[s] = {u, v};
        if (u == v) {
            segments[s].is_loop = true;
            g.warnings.push_back("segment '" + segments[s].id + "' snapped to a loop");
            continue;
        }
        auto pair = std::minmax(u, v);
        auto it = edge_by_pair.find({pair.first, pair.second});
        if (it != edge_by_pair.end()) {
            // parallel edge: keep the shorter one
            auto& e = g.edges[it->second];
            if (segments[s].length_m < e.weight_m) {
                g.segment_edge[e.segment] = -1;
                e.weight_m = segments[s].length_m;
                e.segment = static_cast<int>(s);
                g.segment_edge[s] = it->second;
            }
            g.warnings.push_back("parallel edge between nodes " + std::to_string(u) + " and " +
                                 std::to_string(v) + "; shorter kept");
            continue;
        }
        int eid = static_cast<int>(g.edges.size());
        g.edges.push_back({u, v, segments[s].length_m, static_cast<int>(s)});
        g.segment_edge[s] = eid;
        edge_by_pair[{pair.first, pair.second}] = eid;
    }

    g.adjacency.assign(g.n_nodes(), {});
    for (size_t e = 0; e < g.edges.size(); ++e) {
        g.adjacency[g.edges[e].u].push_back({g.edges[e].v, static_cast<int>(e)});
        g.adjacency[g.edges[e].v].push_back({g.edges[e].u, static_cast<int>(e)});
    }

    // connected components; report everything but the largest
    DisjointSet comp(g.n_nodes());
    for (const auto& e : g.edges) comp.unite(e.u, e.v);
    std::map<int, int> comp_size;
    for (size_t i = 0; i < g.n_nodes(); ++i) ++comp_size[comp.find(static_cast<int>(i))];
    if (comp_size.size() > 1) {
        int largest = 0;
        for (const auto& [root, size] : comp_size) largest = std::max(largest, size);
        bool skipped_largest = false;
        for (const auto& [root, size] : comp_size) {
            if (size == largest && !skipped_largest) {
                skipped_largest = true;
                continue;
            }
            g.warnings.push_back("disconnected component of " + std::to_string(size) +
                                 " node(s) at root " + std::to_string(root));
        }
    }
    return g;
}

EgoGraph ego_subgraph(const StreetGraph& graph, int origin, double radius_m) {
    if (origin < 0 || origin >= static_cast<int>(graph.n_nodes()))
        throw ConfigError("unknown origin node " + std::to_string(origin));
    if (!(radius_m > 0.0)) throw ConfigError("ego radius must be > 0");

    std::vector<double> dist(graph.n_nodes(), kInf);
    dist[origin] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0.0, origin});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        for (auto [v, eid] : graph.adjacency[u]) {
            double nd = d + graph.edges[eid].weight_m;
            if (nd < dist[v] && (nd <= radius_m || tie_eq(nd, radius_m))) {
                dist[v] = nd;
                pq.push({nd, v});
            }
        }
    }

    EgoGraph ego;
    std::vector<int> local(graph.n_nodes(), -1);
    ego.nodes.push_back(origin);
    local[origin] = 0;
    ego.dist.push_back(0.0);
    for (size_t i = 0; i < graph.n_nodes(); ++i) {
        if (static_cast<int>(i) == origin || dist[i] == kInf) continue;
        local[i] = static_cast<int>(ego.nodes.size());
        ego.nodes.push_back(static_cast<int>(i));
        ego.dist.push_back(dist[i]);
    }
    for (const auto& e : graph.edges) {
        if (local[e.u] >= 0 && local[e.v] >= 0) {
            ego.edges.push_back({local[e.u], local[e.v]});
            ego.edge_weights.push_back(e.weight_m);
        }
    }
    return ego;
}

NodeMetrics node_metrics(const StreetGraph& graph, int origin, double radius_m) {
    EgoGraph ego = ego_subgraph(graph, origin, radius_m);
    LocalGraph local;
    local.n = static_cast<int>(ego.nodes.size());
    local.adj.assign(local.n, {});
    for (size_t e = 0; e < ego.edges.size(); ++e) {
        auto [a, b] = ego.edges[e];
        local.adj[a].push_back({b, ego.edge_weights[e]});
        local.adj[b].push_back({a, ego.edge_weights[e]});
    }
    return metrics_local(local, 0);
}

CentralityResult segment_centrality(const StreetGraph& graph,
                                    const std::vector<RoadSegment>& segments,
                                    double radius_m) {
    CentralityResult out;
    size_t n = segments.size();
    out.deg.assign(n, 0.0);
    out.clo.assign(n, 0.0);
    out.betw.assign(n, 0.0);
    out.depth.assign(n, 0.0);

    std::vector<double> dist(graph.n_nodes());
    for (size_t s = 0; s < n; ++s) {
        auto [u, v] = graph.segment_nodes[s];
        double half = segments[s].length_m * 0.5;

        // Multi-source Dijkstra seeded at the two endpoints with half the
        // segment length: distances from the virtual midpoint node.
        std::fill(dist.begin(), dist.end(), kInf);
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        auto seed = [&](int node) {
            if (half < dist[node] && (half <= radius_m || tie_eq(half, radius_m))) {
                dist[node] = half;
                pq.push({half, node});
            }
        };
        seed(u);
        if (v != u) seed(v);
        while (!pq.empty()) {
            auto [d, a] = pq.top();
            pq.pop();
            if (d > dist[a]) continue;
            for (auto [b, eid] : graph.adjacency[a]) {
                double nd = d + graph.edges[eid].weight_m;
                if (nd < dist[b] && (nd <= radius_m || tie_eq(nd, radius_m))) {
                    dist[b] = nd;
                    pq.push({nd, b});
                }
            }
        }

        // Local graph: ego nodes plus the virtual midpoint (last local id).
        // The segment's own kept edge is replaced by the two halves.
        std::vector<int> members;
        std::vector<int> local_id(graph.n_nodes(), -1);
        for (size_t i = 0; i < graph.n_nodes(); ++i)
            if (dist[i] != kInf) {
                local_id[i] = static_cast<int>(members.size());
                members.push_back(static_cast<int>(i));
            }
        LocalGraph local;
        local.n = static_cast<int>(members.size()) + 1;
        local.adj.assign(local.n, {});
        int mid = local.n - 1;
        int own_edge = graph.segment_edge[s];
        int degree = 0;
        for (size_t e = 0; e < graph.n_edges(); ++e) {
            const auto& edge = graph.edges[e];
            if (local_id[edge.u] < 0 || local_id[edge.v] < 0) continue;
            if (static_cast<int>(e) == own_edge) continue;
            local.adj[local_id[edge.u]].push_back({local_id[edge.v], edge.weight_m});
            local.adj[local_id[edge.v]].push_back({local_id[edge.u], edge.weight_m});
            if (edge.u == u || edge.u == v) ++degree;
            if (edge.v == u || edge.v == v) ++degree;
        }
        if (local_id[u] >= 0) {
            local.adj[mid].push_back({local_id[u], half});
            local.adj[local_id[u]].push_back({mid, half});
        }
        if (v != u && local_id[v] >= 0) {
            local.adj[mid].push_back({local_id[v], half});
            local.adj[local_id[v]].push_back({mid, half});
        }

        NodeMetrics m = metrics_local(local, mid, /*count_origin_degree=*/false);
        out.deg[s] = static_cast<double>(degree);
        out.clo[s] = m.closeness;
        out.betw[s] = m.betweenness;
        out.depth[s] = m.depth;
    }
    return out;
}

void save_centrality_csv(const std::vector<RoadSegment>& segments,
                         const CentralityResult& result, const std::string& path) {
    CsvWriter w(path);
    w.row({"segment_id", "C_deg_800m", "C_clo_800m", "C_betw_800m", "C_depth_800m"});
    for (size_t s = 0; s < segments.size(); ++s)
        w.row({segments[s].id, fmt_double(result.deg[s]), fmt_double(result.clo[s]),
               fmt_double(result.betw[s]), fmt_double(result.depth[s])});
}

}  // namespace stride
