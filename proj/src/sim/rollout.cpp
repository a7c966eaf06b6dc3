#include <algorithm>
#include <cmath>

#include "vectorworld/scenegraph/ops.hpp"
#include "vectorworld/sim/world.hpp"

namespace vw::sim {

namespace {
void push_history(WorldAgent& a, double t_now) {
    a.history.push_back({t_now, a.state.x, a.state.y, a.state.heading(), a.state.speed});
    if (a.history.size() > scene::kContextLen)
        a.history.erase(a.history.begin(), a.history.end() - scene::kContextLen);
}

// lead vehicle ahead of the ego within the route corridor
std::optional<Lead> find_lead(const World& world) {
    const auto& ego = world.ego();
    if (world.route.size() < 2) return std::nullopt;
    std::optional<Lead> best;
    for (const auto& a : world.agents) {
        if (a.id == ego.id || !a.active) continue;
        // progress and lateral offset of the candidate along the route
        scene::Vec2 p{a.state.x, a.state.y};
        double acc = 0.0, best_d = 1e18, s_at = 0.0;
        for (size_t i = 0; i + 1 < world.route.size(); ++i) {
            scene::Vec2 r0 = world.route[i], r1 = world.route[i + 1];
            scene::Vec2 d = r1 - r0;
            double len = d.norm(), len2 = len * len;
            double u = len2 > 0 ? std::clamp((p - r0).dot(d) / len2, 0.0, 1.0) : 0.0;
            double dd = (p - (r0 + d * u)).norm();
            if (dd < best_d) {
                best_d = dd;
                s_at = acc + u * len;
            }
            acc += len;
        }
        if (best_d > 2.5) continue;  // outside the corridor
        double gap = s_at - world.ego_progress - (a.state.length + ego.state.length) / 2.0;
        if (gap <= 0.0 || gap > 60.0) continue;
        if (!best || gap < best->gap) best = Lead{gap, a.state.speed};
    }
    return best;
}

void ego_step(World& world, const IdmParams& idm, double dt) {
    auto& ego = world.ego();
    double a = idm_acceleration(ego.state.speed, find_lead(world), idm);
    double v = std::max(0.0, ego.state.speed + a * dt);

    // pure pursuit on the route
    double heading = ego.state.heading();
    if (world.route.size() >= 2) {
        double look = std::clamp(1.5 + 0.8 * v, 3.0, 12.0);
        double target_s = std::min(world.ego_progress + look, world.route_len);
        double acc = 0.0;
        scene::Vec2 target = world.route.back();
        for (size_t i = 0; i + 1 < world.route.size(); ++i) {
            double seg = (world.route[i + 1] - world.route[i]).norm();
            if (acc + seg >= target_s) {
                double u = seg > 0 ? (target_s - acc) / seg : 0.0;
                target = world.route[i] + (world.route[i + 1] - world.route[i]) * u;
                break;
            }
            acc += seg;
        }
        double desired = std::atan2(target.y - ego.state.y, target.x - ego.state.x);
        double err = scene::wrap_angle(desired - heading);
        double max_turn = 1.5 * dt;
        heading = scene::wrap_angle(heading + std::clamp(err, -max_turn, max_turn));
    }
    ego.state.x += v * dt * std::cos(heading);
    ego.state.y += v * dt * std::sin(heading);
    ego.state.set_heading(heading);
    ego.state.speed = v;
}
}  // namespace

EpisodeLog rollout(World world, const RolloutOptions& opt, NpcRunner* npc, uint64_t seed) {
    EpisodeLog log;
    log.seed = seed;
    log.route_length = world.route_len;
    Rng rng(seed);

    if (opt.warm) warm_start(world);
    else cold_start(world);

    // clamp-stability fingerprint of the pre-existing lane geometry
    auto lane_fingerprint = [&world](int upto_id) {
        double acc = 0.0;
        for (const auto& l : world.lanes) {
            if (l.id >= upto_id) continue;
            for (const auto& p : l.geom.pts) acc += p.x * 1.000000119 + p.y;
        }
        return acc;
    };
    int initial_lane_count = world.next_lane_id;
    double initial_fp = lane_fingerprint(initial_lane_count);

    while (true) {
        auto cause = check_termination(world, opt.world);
        if (cause) {
            log.cause = *cause;
            break;
        }

        StepRecord rec;
        rec.k = world.k;

        // simultaneous decisions: NPCs act on the pre-step observation
        struct Pending {
            size_t idx;
            dsim::HybridAction act;
            bool violation;
        };
        std::vector<Pending> pending;
        if (npc && npc->model) {
            auto lane_view = world.lane_geoms();
            for (size_t i = 0; i < world.agents.size(); ++i) {
                auto& a = world.agents[i];
                if (!a.active || static_cast<int>(i) == world.ego_index) continue;
                if (a.state.type == scene::AgentType::Pedestrian) continue;
                std::vector<scene::AgentState> nbs;
                for (size_t o = 0; o < world.agents.size(); ++o)
                    if (o != i && world.agents[o].active) nbs.push_back(world.agents[o].state);
                dsim::PolicyContext ctx = dsim::featurize_context(
                    npc->model->config(), lane_view, nbs, a.history, a.state);
                dsim::PolicyOutput out = npc->model->forward(ctx, npc->kappa);
                Rng arng = rng.fork(static_cast<uint64_t>(world.k) * 131 + a.id);
                dsim::HybridAction act = dsim::hybrid_step(out, npc->model->vocab(), npc->limits,
                                                           a.state.speed, opt.world.dt, arng,
                                                           npc->deterministic);
                bool viol = dsim::violates(act.applied, opt.world.dt, a.state.speed, npc->limits);
                pending.push_back({i, act, viol});
            }
        }

        ego_step(world, opt.idm, opt.world.dt);
        for (const auto& p : pending) {
            auto& a = world.agents[p.idx];
            a.state = dsim::apply_delta(a.state, p.act.applied, opt.world.dt);
            ++log.action_steps;
            if (p.violation) ++log.violation_steps;
            AgentRecord ar;
            ar.id = a.id;
            ar.x = a.state.x;
            ar.y = a.state.y;
            ar.heading = a.state.heading();
            ar.speed = a.state.speed;
            ar.token = p.act.token;
            ar.violation = p.violation;
            rec.agents.push_back(ar);
        }

        world.k += 1;
        world.t_now += opt.world.dt;
        for (auto& a : world.agents)
            if (a.active) push_history(a, world.t_now);
        world.recompute_progress();

        // deactivate agents outside the ego-centered FOV box
        const auto& ego = world.ego();
        scene::SE2 ego_inv = ego.state.pose().inverse();
        for (auto& a : world.agents) {
            if (!a.active || a.id == ego.id) continue;
            scene::Vec2 local = ego_inv.apply({a.state.x, a.state.y});
            double half = opt.world.agent_fov / 2.0;
            if (std::fabs(local.x) > half || std::fabs(local.y) > half) a.active = false;
        }

        if (opt.bundle && need_outpaint(world, opt.world.trigger_dist)) {
            OutpaintEvent ev = outpaint_tile(world, *opt.bundle, opt.outpaint, opt.oracle, rng);
            log.outpaints.push_back(ev);
            if (lane_fingerprint(initial_lane_count) != initial_fp) ++log.clamp_violations;
        }

        rec.ego_x = ego.state.x;
        rec.ego_y = ego.state.y;
        rec.ego_heading = ego.state.heading();
        rec.ego_speed = ego.state.speed;
        log.steps.push_back(std::move(rec));
    }

    log.route_progress = world.ego_progress;
    log.route_length = world.route_len;
    return log;
}

}  // namespace vw::sim
