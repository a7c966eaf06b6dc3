#include "vectorworld/sim/world.hpp"

#include <algorithm>
#include <cmath>

#include "vectorworld/metrics/metrics.hpp"
#include "vectorworld/scenegraph/ops.hpp"

namespace vw::sim {

const WorldLane* World::lane_by_id(int id) const {
    for (const auto& l : lanes)
        if (l.id == id) return &l;
    return nullptr;
}

std::vector<scene::LanePolyline> World::lane_geoms() const {
    std::vector<scene::LanePolyline> out;
    out.reserve(lanes.size());
    for (const auto& l : lanes) out.push_back(l.geom);
    return out;
}

void World::add_lane(scene::LanePolyline geom) {
    lanes.push_back({next_lane_id++, std::move(geom)});
}

void World::append_route(const std::vector<int>& lane_ids) {
    for (int id : lane_ids) {
        const WorldLane* l = lane_by_id(id);
        if (!l) continue;
        size_t skip = route.empty() ? 0 : 1;
        // drop the duplicate join point when the chain is continuous
        if (!route.empty() && (route.back() - l->geom.pts.front()).norm() > 0.75) skip = 0;
        route.insert(route.end(), l->geom.pts.begin() + skip, l->geom.pts.end());
        route_lane_ids.push_back(id);
    }
    route_len = scene::arc_length(route);
}

void World::recompute_progress() {
    if (route.size() < 2) return;
    const Vec2 p{ego().state.x, ego().state.y};
    double best = 1e18, acc = 0.0, best_s = ego_progress;
    for (size_t i = 0; i + 1 < route.size(); ++i) {
        Vec2 a = route[i], b = route[i + 1];
        Vec2 d = b - a;
        double len = d.norm();
        double len2 = len * len;
        double u = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
        double dd = (p - (a + d * u)).norm();
        double s = acc + u * len;
        // prefer the match closest to the current progress on ties
        if (dd < best - 1e-9 ||
            (dd < best + 1e-9 && std::fabs(s - ego_progress) < std::fabs(best_s - ego_progress))) {
            best = dd;
            best_s = s;
        }
        acc += len;
    }
    ego_progress = best_s;
}

World world_from_tile(const SceneTile& tile, const WorldConfig& cfg) {
    FilterParams fp;
    FilterReport rep;
    SceneTile clean = validity_filters(tile, fp, &rep);

    World w;
    w.style = tile.style;
    w.tile_half = cfg.tile_half;
    for (const auto& lane : clean.lanes) w.add_lane(lane);
    for (int i = 0; i < clean.edges.n_lanes; ++i)
        for (int j = 0; j < clean.edges.n_lanes; ++j) {
            scene::ConnType t = clean.edges.get(i, j);
            if (t == scene::ConnType::None || t == scene::ConnType::Self) continue;
            w.lane_edges.emplace_back(w.lanes[i].id, w.lanes[j].id, t);
        }

    int ego_src = tile.ego_index >= 0 ? tile.ego_index : 0;
    // the ego may have been filtered; match by pose
    w.ego_index = -1;
    for (int i = 0; i < clean.n_agents(); ++i) {
        WorldAgent a;
        a.id = w.next_agent_id++;
        a.state = clean.agents[i];
        a.code = i < static_cast<int>(clean.codes.size()) ? clean.codes[i] : scene::MotionCode{};
        w.agents.push_back(std::move(a));
        if (tile.ego_index >= 0 &&
            std::hypot(clean.agents[i].x - tile.agents[ego_src].x,
                       clean.agents[i].y - tile.agents[ego_src].y) < 1e-6)
            w.ego_index = i;
    }
    if (w.agents.empty()) throw std::runtime_error("world_from_tile: no agents survived filtering");
    if (w.ego_index < 0) w.ego_index = 0;

    // route from the filter chain
    if (!rep.route_lanes.empty()) {
        std::vector<int> ids;
        for (int idx : rep.route_lanes) ids.push_back(w.lanes[idx].id);
        w.append_route(ids);
    }
    w.recompute_progress();

    // travel-up tile frame centered on the initial view
    double h = w.ego().state.heading();
    w.tile_frame = SE2{0.0, 0.0, scene::wrap_angle(h - M_PI / 2.0)};
    return w;
}

void warm_start(World& world) {
    for (auto& a : world.agents) {
        a.history =
            scene::unroll_pseudo_history(a.code, a.state, scene::kContextLen, scene::kSimDt,
                                         world.t_now);
    }
}

void cold_start(World& world) {
    for (auto& a : world.agents) {
        a.history.assign(scene::kContextLen, scene::TimedPose{});
        for (int k = 0; k < scene::kContextLen; ++k) {
            a.history[k] = {world.t_now - (scene::kContextLen - 1 - k) * scene::kSimDt, a.state.x,
                            a.state.y, a.state.heading(), 0.0};
        }
    }
}

bool need_outpaint(const World& world, double trigger) {
    if (trigger <= 0.0) return false;
    Vec2 local = world.tile_frame.inverse().apply({world.ego().state.x, world.ego().state.y});
    return world.tile_half - local.y < trigger;
}

std::optional<TermCause> check_termination(const World& world, const WorldConfig& cfg) {
    const auto& ego = world.ego();
    for (const auto& a : world.agents) {
        if (a.id == ego.id || !a.active) continue;
        if (metrics::boxes_collide(ego.state, a.state)) return TermCause::Collision;
    }
    if (world.route.size() >= 2) {
        double best = 1e18;
        for (size_t i = 0; i + 1 < world.route.size(); ++i) {
            Vec2 a = world.route[i], b = world.route[i + 1];
            Vec2 d = b - a;
            double len2 = d.dot(d);
            double u = len2 > 0 ? std::clamp((Vec2{ego.state.x, ego.state.y} - a).dot(d) / len2,
                                             0.0, 1.0)
                                : 0.0;
            best = std::min(best, (Vec2{ego.state.x, ego.state.y} - (a + d * u)).norm());
        }
        if (best > cfg.offroute_threshold) return TermCause::OffRoute;
    }
    double target = cfg.target_route_m > 0.0
                        ? std::min(cfg.target_route_m, world.route_len - cfg.success_margin)
                        : world.route_len - cfg.success_margin;
    if (world.route_len > 0.0 && world.ego_progress >= target) return TermCause::Success;
    if (world.k >= cfg.k_sim) return TermCause::Timeout;
    return std::nullopt;
}

SceneTile crop_world(const World& world, const SE2& frame, double half,
                     const scene::SceneCaps& caps) {
    SE2 inv = frame.inverse();
    SceneTile tile;
    tile.fov = 2.0 * half;
    tile.style = world.style;
    tile.ego_pose = frame;

    for (const auto& wl : world.lanes) {
        std::vector<Vec2> body(wl.geom.pts.size());
        for (size_t i = 0; i < body.size(); ++i) body[i] = inv.apply(wl.geom.pts[i]);
        for (auto& piece : scene::clip_to_square(body, half)) {
            scene::LanePolyline lp;
            lp.pts = scene::resample_polyline(piece, caps.lane_points);
            lp.attr = wl.geom.attr.empty() ? std::vector<double>{1.0} : wl.geom.attr;
            tile.lanes.push_back(std::move(lp));
            if (tile.n_lanes() >= caps.max_lanes) break;
        }
        if (tile.n_lanes() >= caps.max_lanes) break;
    }
    for (const auto& a : world.agents) {
        if (!a.active) continue;
        Vec2 local = inv.apply({a.state.x, a.state.y});
        if (std::fabs(local.x) > half || std::fabs(local.y) > half) continue;
        scene::AgentState st = a.state;
        st.x = local.x;
        st.y = local.y;
        st.set_heading(scene::wrap_angle(a.state.heading() - frame.theta));
        tile.agents.push_back(st);
        scene::MotionCode code = a.history.empty()
                                     ? a.code
                                     : scene::extract_motion_code(a.history, a.state.pose(),
                                                                  caps.k_mot);
        tile.codes.push_back(code);
        if (tile.n_agents() >= caps.max_agents) break;
    }
    tile.lane_mask.assign(tile.n_lanes(), true);
    tile.agent_mask.assign(tile.n_agents(), true);
    tile.edges = scene::build_typed_edges(tile);
    return tile;
}

}  // namespace vw::sim
