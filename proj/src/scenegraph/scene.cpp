#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "vectorworld/scenegraph/ops.hpp"

namespace vw::scene {

const char* agent_type_name(AgentType t) {
    switch (t) {
        case AgentType::Vehicle: return "vehicle";
        case AgentType::Pedestrian: return "pedestrian";
        case AgentType::Cyclist: return "cyclist";
    }
    return "vehicle";
}

AgentType agent_type_from_name(const std::string& s) {
    if (s == "pedestrian") return AgentType::Pedestrian;
    if (s == "cyclist") return AgentType::Cyclist;
    return AgentType::Vehicle;
}

std::vector<std::pair<int, int>> TypedEdgeSet::succ_pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n_lanes; ++i)
        for (int j = 0; j < n_lanes; ++j)
            if (get(i, j) == ConnType::Succ) out.emplace_back(i, j);
    return out;
}

AgentState RawAgentTrack::state_at(int idx) const {
    const TimedPose& p = states[idx];
    AgentState s;
    s.x = p.x;
    s.y = p.y;
    s.speed = p.speed;
    s.set_heading(p.heading);
    s.length = length;
    s.width = width;
    s.type = type;
    return s;
}

namespace {
double min_dist_to_origin(const LanePolyline& lane) {
    double best = 1e18;
    for (const auto& p : lane.pts) best = std::min(best, p.norm());
    return best;
}

// ascending (key, original index)
std::vector<int> capped_order(const std::vector<double>& keys, int cap) {
    std::vector<int> idx(keys.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return keys[a] < keys[b]; });
    if (static_cast<int>(idx.size()) > cap) idx.resize(cap);
    std::sort(idx.begin(), idx.end());  // keep original relative order
    return idx;
}
}  // namespace

SceneTile normalize_to_ego(const RawScene& raw, const SceneCaps& caps) {
    if (raw.ego_index < 0 || raw.ego_index >= static_cast<int>(raw.agents.size()))
        throw std::runtime_error("normalize_to_ego: missing ego");

    const RawAgentTrack& ego = raw.agents[raw.ego_index];
    const TimedPose& now = ego.now();
    SE2 ego_pose{now.x, now.y, now.heading};
    SE2 inv = ego_pose.inverse();
    double half = caps.fov / 2.0;

    SceneTile tile;
    tile.ego_pose = ego_pose;
    tile.fov = caps.fov;
    tile.style = raw.style;

    // lanes: transform, clip, resample; a lane already fully inside
    // with exactly P points passes through untouched, which makes
    // normalization idempotent
    std::vector<LanePolyline> cand;
    for (const auto& lane : raw.lanes) {
        std::vector<Vec2> pts(lane.pts.size());
        bool all_inside = true;
        for (size_t i = 0; i < lane.pts.size(); ++i) {
            pts[i] = inv.apply(lane.pts[i]);
            if (std::abs(pts[i].x) > half || std::abs(pts[i].y) > half) all_inside = false;
        }
        if (all_inside && static_cast<int>(pts.size()) == caps.lane_points) {
            LanePolyline lp;
            lp.pts = std::move(pts);
            lp.attr = lane.attr;
            cand.push_back(std::move(lp));
            continue;
        }
        for (auto& piece : clip_to_square(pts, half)) {
            LanePolyline lp;
            lp.pts = resample_polyline(piece, caps.lane_points);
            lp.attr = lane.attr;
            cand.push_back(std::move(lp));
        }
    }
    std::vector<double> lane_keys(cand.size());
    for (size_t i = 0; i < cand.size(); ++i) lane_keys[i] = min_dist_to_origin(cand[i]);
    for (int i : capped_order(lane_keys, caps.max_lanes)) tile.lanes.push_back(std::move(cand[i]));

    // agents: transform current state, closed-FOV filter, cap with the
    // ego pinned first
    struct Cand {
        AgentState st;
        MotionCode code;
        double dist;
        bool is_ego;
    };
    std::vector<Cand> acand;
    for (size_t ai = 0; ai < raw.agents.size(); ++ai) {
        const RawAgentTrack& tr = raw.agents[ai];
        AgentState st = tr.state_at(tr.current);
        Vec2 local = inv.apply({st.x, st.y});
        if (std::abs(local.x) > half || std::abs(local.y) > half) continue;
        double h_local = wrap_angle(st.heading() - ego_pose.theta);
        AgentState nst = st;
        nst.x = local.x;
        nst.y = local.y;
        nst.set_heading(h_local);

        int lo = std::max(0, tr.current - (kContextLen - 1));
        std::vector<TimedPose> recent(tr.states.begin() + lo, tr.states.begin() + tr.current + 1);
        MotionCode code = extract_motion_code(recent, st.pose(), caps.k_mot);
        acand.push_back({nst, std::move(code), local.norm(), ai == static_cast<size_t>(raw.ego_index)});
    }
    std::vector<double> agent_keys(acand.size());
    for (size_t i = 0; i < acand.size(); ++i)
        agent_keys[i] = acand[i].is_ego ? -1.0 : acand[i].dist;  // ego always survives the cap
    for (int i : capped_order(agent_keys, caps.max_agents)) {
        if (acand[i].is_ego) tile.ego_index = tile.n_agents();
        tile.agents.push_back(acand[i].st);
        tile.codes.push_back(std::move(acand[i].code));
    }

    tile.lane_mask.assign(tile.lanes.size(), false);
    tile.agent_mask.assign(tile.agents.size(), false);
    tile.edges = build_typed_edges(tile);
    return tile;
}

SceneTile se2_transform(const SceneTile& tile, const SE2& placement) {
    SceneTile out = tile;
    for (auto& lane : out.lanes)
        for (auto& p : lane.pts) p = placement.apply(p);
    for (auto& a : out.agents) {
        Vec2 p = placement.apply({a.x, a.y});
        double h = placement.apply_heading(a.heading());
        a.x = p.x;
        a.y = p.y;
        a.set_heading(h);
    }
    out.ego_pose = placement.compose(tile.ego_pose);
    return out;
}

int count_generated_lanes(const SceneTile& partitioned) {
    int n = 0;
    for (bool m : partitioned.lane_mask)
        if (!m) ++n;
    return n;
}

}  // namespace vw::scene
