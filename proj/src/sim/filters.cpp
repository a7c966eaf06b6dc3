#include "vectorworld/sim/filters.hpp"

#include <algorithm>
#include <cmath>

#include "vectorworld/metrics/metrics.hpp"
#include "vectorworld/scenegraph/ops.hpp"

namespace vw::sim {

using scene::ConnType;
using scene::SceneTile;
using scene::Vec2;

namespace {
void nearest_lane_heading(const SceneTile& tile, const Vec2& p, double* dist, double* heading) {
    double best = 1e18, h = 0.0;
    for (const auto& lane : tile.lanes) {
        for (size_t k = 0; k + 1 < lane.pts.size(); ++k) {
            Vec2 a = lane.pts[k], b = lane.pts[k + 1];
            Vec2 d = b - a;
            double len2 = d.dot(d);
            double u = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
            double dd = (p - (a + d * u)).norm();
            if (dd < best) {
                best = dd;
                h = std::atan2(d.y, d.x);
            }
        }
    }
    *dist = best;
    *heading = h;
}
}  // namespace

SceneTile validity_filters(const SceneTile& candidate, const FilterParams& params,
                           FilterReport* report) {
    FilterReport local;
    FilterReport& rep = report ? *report : local;
    SceneTile t = candidate;

    // (i) duplicate lanes: endpoint signature + length agreement
    {
        std::vector<int> keep;
        for (int i = 0; i < t.n_lanes(); ++i) {
            bool dup = false;
            for (int j : keep) {
                const auto& a = t.lanes[i].pts;
                const auto& b = t.lanes[j].pts;
                if ((a.front() - b.front()).norm() <= params.dedupe_tol &&
                    (a.back() - b.back()).norm() <= params.dedupe_tol &&
                    std::fabs(scene::arc_length(a) - scene::arc_length(b)) <=
                        params.dedupe_len_tol) {
                    dup = true;
                    break;
                }
            }
            if (dup) ++rep.duplicate_lanes;
            else keep.push_back(i);
        }
        if (static_cast<int>(keep.size()) != t.n_lanes()) {
            SceneTile out = t;
            out.lanes.clear();
            out.lane_mask.clear();
            for (int i : keep) {
                out.lanes.push_back(t.lanes[i]);
                out.lane_mask.push_back(t.lane_mask.empty() ? false : t.lane_mask[i]);
            }
            out.edges = scene::build_typed_edges(out);
            t = std::move(out);
        }
    }

    // (ii) overlapping agents: first-kept wins
    {
        std::vector<int> keep;
        for (int i = 0; i < t.n_agents(); ++i) {
            bool hit = false;
            for (int j : keep)
                if (metrics::boxes_collide(t.agents[i], t.agents[j])) {
                    hit = true;
                    break;
                }
            if (hit) ++rep.overlapping_agents;
            else keep.push_back(i);
        }
        if (static_cast<int>(keep.size()) != t.n_agents()) {
            SceneTile out = t;
            out.agents.clear();
            out.codes.clear();
            out.agent_mask.clear();
            for (int i : keep) {
                out.agents.push_back(t.agents[i]);
                out.codes.push_back(i < static_cast<int>(t.codes.size()) ? t.codes[i]
                                                                         : scene::MotionCode{});
                out.agent_mask.push_back(t.agent_mask.empty() ? false : t.agent_mask[i]);
            }
            t = std::move(out);
        }
    }

    // (iii) offroad vehicles: distance or heading inconsistency
    if (t.n_lanes() > 0) {
        std::vector<int> keep;
        for (int i = 0; i < t.n_agents(); ++i) {
            const auto& a = t.agents[i];
            bool drop = false;
            if (a.type == scene::AgentType::Vehicle) {
                double dist, lane_h;
                nearest_lane_heading(t, {a.x, a.y}, &dist, &lane_h);
                double dh = std::fabs(scene::wrap_angle(a.heading() - lane_h));
                if (dist > params.offroad_dist ||
                    (dist > 2.2 && dh > params.offroad_heading)) {
                    drop = true;
                }
            }
            if (drop) ++rep.offroad_vehicles;
            else keep.push_back(i);
        }
        if (static_cast<int>(keep.size()) != t.n_agents()) {
            SceneTile out = t;
            out.agents.clear();
            out.codes.clear();
            out.agent_mask.clear();
            for (int i : keep) {
                out.agents.push_back(t.agents[i]);
                out.codes.push_back(i < static_cast<int>(t.codes.size()) ? t.codes[i]
                                                                         : scene::MotionCode{});
                out.agent_mask.push_back(t.agent_mask.empty() ? false : t.agent_mask[i]);
            }
            t = std::move(out);
        }
    }

    // (iv) degree-2 chain merge, resampled to the behavior point count
    {
        int n = t.n_lanes();
        std::vector<int> succ(n, -1), pred(n, -1), out_deg(n, 0), in_deg(n, 0);
        for (auto [i, j] : t.edges.succ_pairs()) {
            out_deg[i]++;
            in_deg[j]++;
            succ[i] = j;
            pred[j] = i;
        }
        std::vector<bool> chained(n, false);
        SceneTile merged = t;
        merged.lanes.clear();
        merged.lane_mask.clear();
        for (int i = 0; i < n; ++i) {
            if (chained[i]) continue;
            // chain heads: no unique predecessor chain continuing into i
            bool head = !(in_deg[i] == 1 && out_deg[pred[i]] == 1);
            if (!head) continue;
            std::vector<Vec2> pts = t.lanes[i].pts;
            chained[i] = true;
            int cur = i;
            int links = 0;
            while (out_deg[cur] == 1 && succ[cur] >= 0 && in_deg[succ[cur]] == 1 &&
                   !chained[succ[cur]]) {
                cur = succ[cur];
                chained[cur] = true;
                pts.insert(pts.end(), t.lanes[cur].pts.begin() + 1, t.lanes[cur].pts.end());
                ++links;
            }
            if (links > 0) ++rep.merged_chains;
            scene::LanePolyline lane;
            lane.pts = scene::resample_polyline(pts, params.behavior_points);
            lane.attr = t.lanes[i].attr;
            merged.lanes.push_back(std::move(lane));
            merged.lane_mask.push_back(false);
        }
        // lanes inside cycles (never heads) pass through unmerged
        for (int i = 0; i < n; ++i) {
            if (chained[i]) continue;
            scene::LanePolyline lane;
            lane.pts = scene::resample_polyline(t.lanes[i].pts, params.behavior_points);
            lane.attr = t.lanes[i].attr;
            merged.lanes.push_back(std::move(lane));
            merged.lane_mask.push_back(false);
            chained[i] = true;
        }
        merged.edges = scene::build_typed_edges(merged);
        t = std::move(merged);
    }

    // (v) route extraction
    rep.route_lanes = extract_route_lanes(t);
    rep.route_found = !rep.route_lanes.empty();
    return t;
}

std::vector<int> extract_route_lanes(const scene::SceneTile& tile) {
    int n = tile.n_lanes();
    if (n == 0) return {};
    int start = 0;
    double best = 1e18;
    for (int i = 0; i < n; ++i)
        for (const auto& p : tile.lanes[i].pts) {
            double d = p.norm();
            if (d < best) {
                best = d;
                start = i;
            }
        }
    std::vector<std::vector<int>> succ(n);
    for (auto [i, j] : tile.edges.succ_pairs()) succ[i].push_back(j);

    std::vector<int> route{start};
    std::vector<bool> used(n, false);
    used[start] = true;
    int cur = start;
    while (true) {
        int next = -1;
        double best_turn = 1e18;
        const auto& cur_pts = tile.lanes[cur].pts;
        Vec2 ce = cur_pts.back() - cur_pts[cur_pts.size() - 2];
        double ch = std::atan2(ce.y, ce.x);
        for (int cand : succ[cur]) {
            if (used[cand]) continue;
            const auto& cp = tile.lanes[cand].pts;
            Vec2 cs = cp[1] - cp[0];
            double turn = std::fabs(scene::wrap_angle(std::atan2(cs.y, cs.x) - ch));
            if (turn < best_turn) {
                best_turn = turn;
                next = cand;
            }
        }
        if (next < 0) break;
        route.push_back(next);
        used[next] = true;
        cur = next;
    }
    return route;
}

}  // namespace vw::sim
