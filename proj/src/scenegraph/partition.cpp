#include "vectorworld/scenegraph/ops.hpp"

namespace vw::scene {

namespace {
// maximal same-side runs of a polyline against the line y=0; the
// crossing point lands in both neighbouring pieces
struct Piece {
    std::vector<Vec2> pts;
    bool below;  // all points at y <= 0
};

std::vector<Piece> split_at_y0(const std::vector<Vec2>& pts) {
    std::vector<Piece> pieces;
    if (pts.empty()) return pieces;
    auto side = [](const Vec2& p) { return p.y <= 0.0; };
    Piece cur{{pts[0]}, side(pts[0])};
    for (size_t i = 1; i < pts.size(); ++i) {
        bool s = side(pts[i]);
        if (s == cur.below) {
            cur.pts.push_back(pts[i]);
            continue;
        }
        const Vec2& a = pts[i - 1];
        const Vec2& b = pts[i];
        double u = (0.0 - a.y) / (b.y - a.y);
        Vec2 cross = a + (b - a) * u;
        cur.pts.push_back(cross);
        if (cur.pts.size() >= 2) pieces.push_back(cur);
        cur = Piece{{cross, pts[i]}, s};
    }
    if (cur.pts.size() >= 2 || pieces.empty()) pieces.push_back(cur);
    return pieces;
}
}  // namespace

SceneTile partition_scene(const SceneTile& tile, const SceneCaps& caps) {
    SceneTile out = tile;
    out.lanes.clear();
    out.lane_mask.clear();
    for (const auto& lane : tile.lanes) {
        for (auto& piece : split_at_y0(lane.pts)) {
            if (piece.pts.size() < 2) continue;
            LanePolyline lp;
            lp.pts = resample_polyline(piece.pts, caps.lane_points);
            lp.attr = lane.attr;
            out.lanes.push_back(std::move(lp));
            out.lane_mask.push_back(piece.below);
        }
    }
    if (static_cast<int>(out.lanes.size()) > caps.max_lanes) {
        out.lanes.resize(caps.max_lanes);
        out.lane_mask.resize(caps.max_lanes);
    }

    out.agent_mask.assign(out.agents.size(), false);
    for (size_t i = 0; i < out.agents.size(); ++i) out.agent_mask[i] = out.agents[i].y <= 0.0;

    out.edges = build_typed_edges(out);
    return out;
}

}  // namespace vw::scene
