#include "vectorworld/deltasim/train.hpp"

#include <cmath>

#include "vectorworld/metrics/metrics.hpp"
#include "vectorworld/scenegraph/ops.hpp"

namespace vw::dsim {

using scene::RawScene;
using scene::Vec2;

namespace {
bool trainable(const scene::RawAgentTrack& tr) {
    return tr.type != scene::AgentType::Pedestrian;
}

Delta body_delta(const scene::TimedPose& a, const scene::TimedPose& b) {
    scene::SE2 rel = scene::SE2{a.x, a.y, a.heading}.inverse().compose({b.x, b.y, b.heading});
    return {rel.tx, rel.ty, rel.theta};
}

void nearest_lane(const RawScene& scene, const Vec2& p, double* dist, Vec2* tangent) {
    double best = 1e18;
    Vec2 tan{1, 0};
    for (const auto& lane : scene.lanes) {
        for (size_t k = 0; k + 1 < lane.pts.size(); ++k) {
            Vec2 a = lane.pts[k], b = lane.pts[k + 1];
            Vec2 d = b - a;
            double len2 = d.dot(d);
            double u = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
            double dd = (p - (a + d * u)).norm();
            if (dd < best) {
                best = dd;
                double n = d.norm();
                tan = n > 1e-12 ? d * (1.0 / n) : Vec2{1, 0};
            }
        }
    }
    *dist = best;
    *tangent = tan;
}
}  // namespace

std::vector<double> agent_rewards(const RawScene& scene, int agent, const RewardWeights& rw) {
    const auto& tr = scene.agents[agent];
    int n = static_cast<int>(tr.states.size());
    std::vector<double> rewards(n, 0.0);
    for (int k = 0; k + 1 < n; ++k) {
        const auto& cur = tr.states[k];
        const auto& nxt = tr.states[k + 1];
        double dist, progress;
        Vec2 tan;
        nearest_lane(scene, cur.pos(), &dist, &tan);
        progress = (nxt.pos() - cur.pos()).dot(tan);
        double r = progress;
        if (dist > rw.offroad_dist && tr.type == scene::AgentType::Vehicle) r -= rw.offroad;
        scene::AgentState self = tr.state_at(k);
        for (size_t o = 0; o < scene.agents.size(); ++o) {
            if (static_cast<int>(o) == agent) continue;
            int ok = std::min(k, static_cast<int>(scene.agents[o].states.size()) - 1);
            if (metrics::boxes_collide(self, scene.agents[o].state_at(ok))) {
                r -= rw.collision;
                break;
            }
        }
        rewards[k] = r;
    }
    return rewards;
}

std::vector<Delta> collect_deltas(const std::vector<RawScene>& scenes, int stride) {
    std::vector<Delta> deltas;
    for (const auto& scene : scenes) {
        for (const auto& tr : scene.agents) {
            if (!trainable(tr)) continue;
            for (size_t k = scene::kContextLen - 1; k + 1 < tr.states.size(); k += stride)
                deltas.push_back(body_delta(tr.states[k], tr.states[k + 1]));
        }
    }
    return deltas;
}

DecisionTable build_decision_table(const std::vector<RawScene>& scenes, const KDisksVocab& vocab,
                                   const RtgConfig& rtg, const PolicyConfig& cfg, int stride,
                                   const RewardWeights& rw) {
    DecisionTable table;
    for (size_t s = 0; s < scenes.size(); ++s) {
        const RawScene& scene = scenes[s];
        for (size_t a = 0; a < scene.agents.size(); ++a) {
            const auto& tr = scene.agents[a];
            if (!trainable(tr)) continue;
            std::vector<double> rewards = agent_rewards(scene, static_cast<int>(a), rw);
            std::vector<double> rtgs = rtg_values(rewards, rtg);
            for (size_t k = cfg.ctx_len - 1; k + 1 < tr.states.size(); k += stride) {
                DecisionTable::Entry e;
                e.scene = static_cast<int>(s);
                e.agent = static_cast<int>(a);
                e.step = static_cast<int>(k);
                Delta d = body_delta(tr.states[k], tr.states[k + 1]);
                Tokenized tok = tokenize_action(d, tr.length, tr.width, vocab);
                e.token = tok.index;
                e.residual = tok.residual;
                e.rtg_bin = rtg.bin_of(rtgs[k]);
                table.entries.push_back(e);
            }
        }
    }
    return table;
}

PolicyContext featurize_decision(const RawScene& scene, const DecisionTable::Entry& e,
                                 const PolicyConfig& cfg) {
    const auto& tr = scene.agents[e.agent];
    scene::AgentState self = tr.state_at(e.step);
    std::vector<scene::AgentState> neighbors;
    for (size_t o = 0; o < scene.agents.size(); ++o) {
        if (static_cast<int>(o) == e.agent) continue;
        int ok = std::min(e.step, static_cast<int>(scene.agents[o].states.size()) - 1);
        neighbors.push_back(scene.agents[o].state_at(ok));
    }
    int lo = std::max(0, e.step - (cfg.ctx_len - 1));
    std::vector<scene::TimedPose> hist(tr.states.begin() + lo, tr.states.begin() + e.step + 1);
    return featurize_context(cfg, scene.lanes, neighbors, hist, self);
}

void train_npc(PolicyModel& model, const std::vector<RawScene>& scenes, const DecisionTable& table,
               const NpcTrainConfig& cfg, const KinematicLimits& lim, std::ostream* log) {
    if (table.entries.empty()) throw std::runtime_error("train_npc: empty decision table");
    diff::AdamWConfig oc = cfg.opt;
    oc.total_steps = cfg.steps;
    diff::AdamW opt(model.store(), oc);
    Rng rng(cfg.seed);

    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<diff::Bindings> sample_grads(cfg.batch);
        std::vector<double> sample_loss(cfg.batch, 0.0);
#pragma omp parallel for schedule(dynamic)
        for (int b = 0; b < cfg.batch; ++b) {
            Rng srng = rng.fork(static_cast<uint64_t>(step) * 4096 + b);
            const auto& e = table.entries[srng.uniform_int(0, static_cast<int>(table.entries.size()) - 1)];
            PolicyContext ctx = featurize_decision(scenes[e.scene], e, model.config());
            PolicyTargets t{e.token, e.residual, e.rtg_bin};
            sample_loss[b] = model.loss_grad(ctx, t, cfg.weights, scene::kSimDt, lim, &sample_grads[b]);
        }
        diff::Bindings accum;
        double loss_sum = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            loss_sum += sample_loss[b];
            for (auto& [name, g] : sample_grads[b]) {
                auto it = accum.find(name);
                if (it == accum.end()) accum.emplace(name, std::move(g));
                else
                    for (size_t i = 0; i < it->second.size(); ++i) it->second[i] += g[i];
            }
        }
        for (auto& [name, g] : accum)
            for (size_t i = 0; i < g.size(); ++i) g[i] /= cfg.batch;
        opt.step(accum);
        if (log && cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == cfg.steps))
            (*log) << "npc step " << step << " loss " << loss_sum / cfg.batch << std::endl;
    }
}

}  // namespace vw::dsim
