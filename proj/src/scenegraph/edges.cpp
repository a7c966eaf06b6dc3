#include <cmath>

#include "vectorworld/scenegraph/ops.hpp"

namespace vw::scene {

namespace {
Vec2 tangent(const std::vector<Vec2>& pts, size_t i0, size_t i1) {
    Vec2 d = pts[i1] - pts[i0];
    double n = d.norm();
    return n > 1e-12 ? d * (1.0 / n) : Vec2{1.0, 0.0};
}

Vec2 start_tangent(const LanePolyline& l) { return tangent(l.pts, 0, 1); }
Vec2 end_tangent(const LanePolyline& l) { return tangent(l.pts, l.pts.size() - 2, l.pts.size() - 1); }

Vec2 midpoint(const LanePolyline& l) { return l.pts[l.pts.size() / 2]; }

Vec2 mid_tangent(const LanePolyline& l) {
    size_t m = l.pts.size() / 2;
    size_t a = m > 0 ? m - 1 : 0;
    size_t b = std::min(m + 1, l.pts.size() - 1);
    return tangent(l.pts, a, b);
}

double angle_between(const Vec2& a, const Vec2& b) {
    return std::fabs(std::atan2(a.cross(b), a.dot(b)));
}

bool succ_of(const LanePolyline& a, const LanePolyline& b, const EdgeThresholds& th) {
    if ((a.pts.back() - b.pts.front()).norm() > th.conn_dist) return false;
    return angle_between(end_tangent(a), start_tangent(b)) <= th.heading_tol;
}

// b sits in a's adjacency band on the requested side (+1 left, -1 right)
bool adjacent_side(const LanePolyline& a, const LanePolyline& b, int side,
                   const EdgeThresholds& th) {
    Vec2 ta = mid_tangent(a);
    if (angle_between(ta, mid_tangent(b)) > th.heading_tol) return false;
    Vec2 rel = midpoint(b) - midpoint(a);
    double lon = rel.dot(ta);
    double lat = ta.cross(rel);  // +y of a's frame is its left
    if (std::fabs(lon) > 0.5 * arc_length(a.pts)) return false;
    return side * lat >= th.adj_lat_min && side * lat <= th.adj_lat_max;
}
}  // namespace

TypedEdgeSet build_typed_edges(const SceneTile& tile, const EdgeThresholds& th) {
    TypedEdgeSet e;
    int n = tile.n_lanes();
    e.init(n, tile.n_agents());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;  // diagonal stays `self`
            const LanePolyline& a = tile.lanes[i];
            const LanePolyline& b = tile.lanes[j];
            if (a.pts.size() < 2 || b.pts.size() < 2) continue;
            if (succ_of(a, b, th)) {
                e.set(i, j, ConnType::Succ);
            } else if (succ_of(b, a, th)) {
                e.set(i, j, ConnType::Pred);
            } else if (adjacent_side(a, b, +1, th) && adjacent_side(b, a, -1, th)) {
                // adjacency is required to be mutual
                e.set(i, j, ConnType::Left);
            } else if (adjacent_side(a, b, -1, th) && adjacent_side(b, a, +1, th)) {
                e.set(i, j, ConnType::Right);
            }
        }
    }
    return e;
}

}  // namespace vw::scene
