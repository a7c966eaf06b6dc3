#include <algorithm>
#include <cmath>

#include "vectorworld/metrics/metrics.hpp"
#include "vectorworld/scenegraph/ops.hpp"
#include "vectorworld/sim/world.hpp"

namespace vw::sim {

using scene::ConnType;

namespace {
// route tangent a little ahead of the ego, falling back to its heading
scene::Vec2 travel_direction(const World& world) {
    if (world.route.size() >= 2) {
        double want = std::min(world.ego_progress + 8.0, world.route_len - 0.5);
        double acc = 0.0;
        for (size_t i = 0; i + 1 < world.route.size(); ++i) {
            double seg = (world.route[i + 1] - world.route[i]).norm();
            if (acc + seg >= want || i + 2 == world.route.size()) {
                scene::Vec2 d = world.route[i + 1] - world.route[i];
                double n = d.norm();
                if (n > 1e-9) return d * (1.0 / n);
                break;
            }
            acc += seg;
        }
    }
    double h = world.ego().state.heading();
    return {std::cos(h), std::sin(h)};
}

// full tile shell over obs + frontier placeholders, masks and known
// edge types filled in
scene::SceneTile assemble_shell(const scene::SceneTile& obs, int n_new_lanes, int n_new_agents) {
    scene::SceneTile full = obs;
    for (int i = 0; i < n_new_lanes; ++i) {
        scene::LanePolyline lp;
        lp.pts.assign(obs.n_lanes() ? obs.lanes[0].pts.size() : 20, {0, 0});
        lp.attr = {1.0};
        full.lanes.push_back(std::move(lp));
        full.lane_mask.push_back(false);
    }
    for (int i = 0; i < n_new_agents; ++i) {
        full.agents.push_back({});
        full.codes.push_back({});
        full.agent_mask.push_back(false);
    }
    scene::TypedEdgeSet e;
    e.init(full.n_lanes(), full.n_agents());
    for (int i = 0; i < obs.edges.n_lanes; ++i)
        for (int j = 0; j < obs.edges.n_lanes; ++j) e.set(i, j, obs.edges.get(i, j));
    full.edges = std::move(e);
    return full;
}
}  // namespace

OutpaintEvent outpaint_tile(World& world, const GeneratorBundle& bundle, const OutpaintConfig& cfg,
                            const OracleSource* oracle, Rng& rng) {
    OutpaintEvent ev;
    ev.step = world.k;

    const auto& vcfg = bundle.vae->config();
    scene::SceneCaps caps;
    caps.lane_points = vcfg.lane_points;
    caps.k_mot = vcfg.k_mot;
    caps.max_lanes = vcfg.count_max;

    // next tile frame: ahead along the route with 50% overlap, +y up
    scene::Vec2 dir = travel_direction(world);
    scene::Vec2 center = scene::Vec2{world.tile_frame.tx, world.tile_frame.ty} +
                         dir * world.tile_half;
    scene::SE2 frame{center.x, center.y, std::atan2(dir.y, dir.x) - M_PI / 2.0};

    scene::SceneTile obs = crop_world(world, frame, world.tile_half, caps);
    if (obs.n_lanes() == 0) {
        ev.failed = true;
        return ev;
    }
    int n_obs_l = obs.n_lanes();
    int n_obs_a = obs.n_agents();

    // oracle continuation fixes the frontier element counts
    scene::SceneTile truth;
    bool use_oracle = oracle != nullptr;
    int n_new_l = 0, n_new_a = 0;
    if (use_oracle) {
        scene::RawScene cont = (*oracle)(frame);
        scene::SceneTile cand;
        cand.fov = 2.0 * world.tile_half;
        scene::SE2 inv = frame.inverse();
        for (const auto& lane : cont.lanes) {
            std::vector<scene::Vec2> body(lane.pts.size());
            for (size_t i = 0; i < body.size(); ++i) body[i] = inv.apply(lane.pts[i]);
            for (auto& piece : scene::clip_to_square(body, world.tile_half)) {
                // keep only frontier pieces (ahead of the overlap seam)
                double max_y = -1e18;
                for (const auto& p : piece) max_y = std::max(max_y, p.y);
                if (max_y <= 0.0) continue;
                scene::LanePolyline lp;
                lp.pts = scene::resample_polyline(piece, caps.lane_points);
                lp.attr = {1.0};
                // skip duplicates of observed lanes
                bool dup = false;
                for (const auto& ol : obs.lanes)
                    if ((ol.pts.front() - lp.pts.front()).norm() < 0.5 &&
                        (ol.pts.back() - lp.pts.back()).norm() < 0.5)
                        dup = true;
                if (!dup) cand.lanes.push_back(std::move(lp));
            }
        }
        for (const auto& tr : cont.agents) {
            scene::AgentState st = tr.state_at(tr.current);
            scene::Vec2 local = inv.apply({st.x, st.y});
            if (std::fabs(local.x) > world.tile_half || local.y <= 0.0) continue;
            scene::AgentState body = st;
            body.x = local.x;
            body.y = local.y;
            body.set_heading(scene::wrap_angle(st.heading() - frame.theta));
            cand.agents.push_back(body);
            int lo = std::max(0, tr.current - (scene::kContextLen - 1));
            std::vector<scene::TimedPose> recent(tr.states.begin() + lo,
                                                 tr.states.begin() + tr.current + 1);
            cand.codes.push_back(scene::extract_motion_code(recent, st.pose(), caps.k_mot));
        }
        n_new_l = std::min(static_cast<int>(cand.lanes.size()), cfg.max_new_lanes);
        n_new_a = std::min(static_cast<int>(cand.agents.size()), cfg.frontier_agents);
        truth = assemble_shell(obs, n_new_l, n_new_a);
        for (int i = 0; i < n_new_l; ++i) truth.lanes[n_obs_l + i] = cand.lanes[i];
        for (int i = 0; i < n_new_a; ++i) {
            truth.agents[n_obs_a + i] = cand.agents[i];
            truth.codes[n_obs_a + i] = cand.codes[i];
        }
        truth.edges = scene::build_typed_edges(truth);
        for (int i = 0; i < truth.n_lanes(); ++i)
            truth.lane_mask[i] = i < n_obs_l;
        for (int i = 0; i < truth.n_agents(); ++i)
            truth.agent_mask[i] = i < n_obs_a;
    } else {
        // lane-count head proposes the frontier size
        vae::Posterior post = bundle.vae->encode(obs, true);
        int count = 0;
        for (int j = 1; j < post.count_probs.cols(); ++j)
            if (post.count_probs[j] > post.count_probs[count]) count = j;
        n_new_l = std::clamp(count, 0, cfg.max_new_lanes);
        n_new_a = cfg.frontier_agents;
    }
    if (n_new_l == 0) {
        ev.failed = true;
        return ev;
    }

    scene::SceneTile shell = use_oracle ? truth : assemble_shell(obs, n_new_l, n_new_a);

    // clamped latent state: observed tokens from the encoder, frontier
    // tokens filled with noise by the sampler
    dyn::LatentState init;
    init.z_lane = diff::Tensor::zeros(n_obs_l + n_new_l, vcfg.d_lane);
    init.z_agent = diff::Tensor::zeros(n_obs_a + n_new_a, vcfg.d_agent);
    init.lane_clamped.assign(n_obs_l + n_new_l, false);
    init.agent_clamped.assign(n_obs_a + n_new_a, false);
    for (int i = 0; i < n_obs_l; ++i) init.lane_clamped[i] = true;
    for (int i = 0; i < n_obs_a; ++i) init.agent_clamped[i] = true;
    dyn::LatentState z_obs = dyn::encode_tile(*bundle.vae, obs, true, bundle.stats);
    for (int i = 0; i < n_obs_l; ++i)
        for (int d = 0; d < vcfg.d_lane; ++d) init.z_lane.at(i, d) = z_obs.z_lane.at(i, d);
    for (int i = 0; i < n_obs_a; ++i)
        for (int d = 0; d < vcfg.d_agent; ++d) init.z_agent.at(i, d) = z_obs.z_agent.at(i, d);

    dit::DitCond cond = dyn::make_cond(bundle.gen->config(), shell, false);

    dyn::FieldFn field;
    dyn::LatentState z_truth;
    if (use_oracle) {
        z_truth = dyn::encode_tile(*bundle.vae, truth, false, bundle.stats);
        z_truth.lane_clamped = init.lane_clamped;
        z_truth.agent_clamped = init.agent_clamped;
        field = [&z_truth](const diff::Tensor& zl, const diff::Tensor& za, double t, double) {
            dit::FieldOut u;
            u.lane = diff::Tensor::zeros(zl.rows(), zl.cols());
            u.agent = diff::Tensor::zeros(za.rows(), za.cols());
            for (size_t i = 0; i < u.lane.size(); ++i)
                u.lane[i] = (zl[i] - z_truth.z_lane[i]) / t;
            for (size_t i = 0; i < u.agent.size(); ++i)
                u.agent[i] = (za[i] - z_truth.z_agent[i]) / t;
            return u;
        };
    } else {
        field = dyn::learned_field(*bundle.gen, cond, cfg.guidance);
    }

    Rng srng = rng.fork(1000003ULL * static_cast<uint64_t>(world.k));
    dyn::LatentState z = dyn::sample(cfg.mode, field, cfg.k_steps, &bundle.sched, init, srng);
    scene::SceneTile decoded = dyn::decode_latents(*bundle.vae, z, bundle.stats,
                                                   2.0 * world.tile_half, world.style);
    decoded.lane_mask = shell.lane_mask;
    decoded.agent_mask = shell.agent_mask;

    // frontier-only candidate cleanup: dedupe against observed lanes,
    // drop overlapping or offroad agents
    std::vector<int> kept_lanes;
    for (int i = n_obs_l; i < decoded.n_lanes(); ++i) {
        bool dup = false;
        for (int j = 0; j < n_obs_l && !dup; ++j) {
            if ((decoded.lanes[i].pts.front() - decoded.lanes[j].pts.front()).norm() <=
                    cfg.filters.dedupe_tol &&
                (decoded.lanes[i].pts.back() - decoded.lanes[j].pts.back()).norm() <=
                    cfg.filters.dedupe_tol)
                dup = true;
        }
        for (int j : kept_lanes) {
            if ((decoded.lanes[i].pts.front() - decoded.lanes[j].pts.front()).norm() <=
                    cfg.filters.dedupe_tol &&
                (decoded.lanes[i].pts.back() - decoded.lanes[j].pts.back()).norm() <=
                    cfg.filters.dedupe_tol)
                dup = true;
        }
        if (!dup) kept_lanes.push_back(i);
    }

    // stitch frontier lanes into the world
    scene::SceneTile placed = scene::se2_transform(decoded, frame);
    std::map<int, int> row_to_id;
    for (int i = 0; i < n_obs_l; ++i) {
        // map observed rows back to source world lanes by proximity
        int best = -1;
        double bd = 1e18;
        for (const auto& wl : world.lanes) {
            double d = (wl.geom.pts.front() - placed.lanes[i].pts.front()).norm() +
                       (wl.geom.pts.back() - placed.lanes[i].pts.back()).norm();
            if (d < bd) {
                bd = d;
                best = wl.id;
            }
        }
        if (best >= 0 && bd < 4.0) row_to_id[i] = best;
    }
    for (int i : kept_lanes) {
        row_to_id[i] = world.next_lane_id;
        world.add_lane(placed.lanes[i]);
        ++ev.new_lanes;
    }

    // extend the world lane graph geometrically, matching how the
    // initial tile derived its edges; seam EPD is reported over succ
    // edges spanning old and new lanes
    double seam_sum = 0.0;
    int seam_n = 0;
    std::vector<int> new_ids;
    for (int i : kept_lanes) new_ids.push_back(row_to_id[i]);
    auto heading_of = [](const scene::LanePolyline& l, bool at_end) {
        scene::Vec2 d = at_end ? l.pts.back() - l.pts[l.pts.size() - 2] : l.pts[1] - l.pts[0];
        return std::atan2(d.y, d.x);
    };
    for (const auto& a : world.lanes) {
        for (const auto& b : world.lanes) {
            if (a.id == b.id) continue;
            bool a_new = std::find(new_ids.begin(), new_ids.end(), a.id) != new_ids.end();
            bool b_new = std::find(new_ids.begin(), new_ids.end(), b.id) != new_ids.end();
            if (!a_new && !b_new) continue;
            double gap = (a.geom.pts.back() - b.geom.pts.front()).norm();
            if (gap > 1.0) continue;
            double dh = std::fabs(scene::wrap_angle(heading_of(a.geom, true) -
                                                    heading_of(b.geom, false)));
            if (dh > M_PI / 6) continue;
            bool dup = false;
            for (auto [x, y, t] : world.lane_edges)
                if (x == a.id && y == b.id && t == ConnType::Succ) dup = true;
            if (dup) continue;
            world.lane_edges.emplace_back(a.id, b.id, ConnType::Succ);
            if (a_new != b_new) {
                seam_sum += gap;
                ++seam_n;
            }
        }
    }
    ev.seam_epd = seam_n > 0 ? seam_sum / seam_n : -1.0;

    // frontier agents: overlap and offroad screening, then warm start
    for (int i = n_obs_a; i < placed.n_agents(); ++i) {
        const scene::AgentState& st = placed.agents[i];
        bool ok = true;
        for (const auto& a : world.agents)
            if (a.active && metrics::boxes_collide(st, a.state)) ok = false;
        if (ok && st.type == scene::AgentType::Vehicle) {
            double best = 1e18;
            for (const auto& wl : world.lanes)
                for (const auto& p : wl.geom.pts)
                    best = std::min(best, (p - scene::Vec2{st.x, st.y}).norm());
            if (best > cfg.filters.offroad_dist) ok = false;
        }
        if (!ok) continue;
        WorldAgent a;
        a.id = world.next_agent_id++;
        a.state = st;
        a.code = decoded.codes[i];
        a.history = scene::unroll_pseudo_history(a.code, a.state, scene::kContextLen,
                                                 scene::kSimDt, world.t_now);
        world.agents.push_back(std::move(a));
        ++ev.new_agents;
    }

    // extend the route along new succ edges
    if (!world.route_lane_ids.empty()) {
        int tail = world.route_lane_ids.back();
        std::vector<int> extension;
        bool grown = true;
        while (grown) {
            grown = false;
            double best_turn = 1e18;
            int next = -1;
            const WorldLane* tl = world.lane_by_id(tail);
            if (!tl) break;
            scene::Vec2 te = tl->geom.pts.back() - tl->geom.pts[tl->geom.pts.size() - 2];
            double th = std::atan2(te.y, te.x);
            for (auto [a, b, t] : world.lane_edges) {
                if (t != ConnType::Succ || a != tail) continue;
                if (std::find(world.route_lane_ids.begin(), world.route_lane_ids.end(), b) !=
                        world.route_lane_ids.end() ||
                    std::find(extension.begin(), extension.end(), b) != extension.end())
                    continue;
                const WorldLane* nl = world.lane_by_id(b);
                if (!nl) continue;
                scene::Vec2 ns = nl->geom.pts[1] - nl->geom.pts[0];
                double turn = std::fabs(scene::wrap_angle(std::atan2(ns.y, ns.x) - th));
                if (turn < best_turn) {
                    best_turn = turn;
                    next = b;
                }
            }
            if (next >= 0 && best_turn < M_PI / 3) {
                extension.push_back(next);
                tail = next;
                grown = true;
            }
        }
        if (!extension.empty()) world.append_route(extension);
    }

    world.tile_frame = frame;
    return ev;
}

}  // namespace vw::sim
