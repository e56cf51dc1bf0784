// Planar geometry primitives shared by the graph, feature and grid stages.
// All coordinates are projected meters; there is no geodetic handling.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace stride {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double dist(const Point& a, const Point& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

inline double polyline_length(const std::vector<Point>& pts) {
    double len = 0.0;
    for (size_t i = 1; i < pts.size(); ++i) len += dist(pts[i - 1], pts[i]);
    return len;
}

// Distance from p to the closed segment ab.
inline double point_segment_distance(const Point& p, const Point& a, const Point& b) {
    double dx = b.x - a.x, dy = b.y - a.y;
    double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return dist(p, a);
    double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    Point proj{a.x + t * dx, a.y + t * dy};
    return dist(p, proj);
}

inline double point_polyline_distance(const Point& p, const std::vector<Point>& pts) {
    double best = std::numeric_limits<double>::infinity();
    if (pts.size() == 1) return dist(p, pts[0]);
    for (size_t i = 1; i < pts.size(); ++i)
        best = std::min(best, point_segment_distance(p, pts[i - 1], pts[i]));
    return best;
}

// Point at arc-length s along the polyline (clamped to the ends).
inline Point polyline_point_at(const std::vector<Point>& pts, double s) {
    if (s <= 0.0) return pts.front();
    for (size_t i = 1; i < pts.size(); ++i) {
        double d = dist(pts[i - 1], pts[i]);
        if (s <= d && d > 0.0) {
            double t = s / d;
            return {pts[i - 1].x + t * (pts[i].x - pts[i - 1].x),
                    pts[i - 1].y + t * (pts[i].y - pts[i - 1].y)};
        }
        s -= d;
    }
    return pts.back();
}

inline Point polyline_midpoint(const std::vector<Point>& pts) {
    return polyline_point_at(pts, polyline_length(pts) * 0.5);
}

// Axis-aligned bounding box.
struct Bbox {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();

    void add(const Point& p) {
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    void add(const std::vector<Point>& pts) {
        for (const auto& p : pts) add(p);
    }
    bool valid() const { return min_x <= max_x; }
};

// Length of polyline clipped to each lattice cell it crosses, keyed by
// (row, col) relative to (origin_x, origin_y) with square cells of size_m.
// Each linear piece is cut at every gridline crossing; the midpoint of each
// sub-piece decides its cell, so shared boundaries never double count.
inline std::vector<std::pair<std::pair<int, int>, double>> polyline_cell_lengths(
    const std::vector<Point>& pts, double origin_x, double origin_y, double size_m) {
    std::vector<std::pair<std::pair<int, int>, double>> out;
    for (size_t i = 1; i < pts.size(); ++i) {
        const Point& a = pts[i - 1];
        const Point& b = pts[i];
        double seg_len = dist(a, b);
        if (seg_len <= 0.0) continue;
        std::vector<double> ts{0.0, 1.0};
        auto add_crossings = [&](double a_c, double b_c, double origin) {
            if (a_c == b_c) return;
            double lo = std::min(a_c, b_c), hi = std::max(a_c, b_c);
            long k0 = static_cast<long>(std::ceil((lo - origin) / size_m));
            long k1 = static_cast<long>(std::floor((hi - origin) / size_m));
            for (long k = k0; k <= k1; ++k) {
                double c = origin + static_cast<double>(k) * size_m;
                double t = (c - a_c) / (b_c - a_c);
                if (t > 0.0 && t < 1.0) ts.push_back(t);
            }
        };
        add_crossings(a.x, b.x, origin_x);
        add_crossings(a.y, b.y, origin_y);
        std::sort(ts.begin(), ts.end());
        for (size_t j = 1; j < ts.size(); ++j) {
            double t0 = ts[j - 1], t1 = ts[j];
            if (t1 <= t0) continue;
            double tm = 0.5 * (t0 + t1);
            Point m{a.x + tm * (b.x - a.x), a.y + tm * (b.y - a.y)};
            int col = static_cast<int>(std::floor((m.x - origin_x) / size_m));
            int row = static_cast<int>(std::floor((m.y - origin_y) / size_m));
            out.push_back({{row, col}, (t1 - t0) * seg_len});
        }
    }
    return out;
}

// Overlap area of two axis-aligned rectangles given as (x0, y0, x1, y1).
inline double rect_overlap_area(double ax0, double ay0, double ax1, double ay1,
                                double bx0, double by0, double bx1, double by1) {
    double w = std::min(ax1, bx1) - std::max(ax0, bx0);
    double h = std::min(ay1, by1) - std::max(ay0, by0);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

}  // namespace stride
