#include "vectorworld/vae/train.hpp"

#include <cmath>

#include "vectorworld/scenegraph/ops.hpp"

namespace vw::vae {

using scene::SceneTile;

void train_vae(VaeModel& model, const std::vector<SceneTile>& tiles, const VaeTrainConfig& cfg,
               std::ostream* log) {
    if (tiles.empty()) throw std::runtime_error("train_vae: no tiles");
    scene::SceneCaps caps;
    caps.lane_points = model.config().lane_points;
    caps.k_mot = model.config().k_mot;
    std::vector<SceneTile> part;
    part.reserve(tiles.size());
    for (const auto& t : tiles) part.push_back(scene::partition_scene(scene::se2_transform(t, scene::SE2{0, 0, M_PI / 2}), caps));

    diff::AdamWConfig oc = cfg.opt;
    oc.total_steps = cfg.steps;
    diff::AdamW opt(model.store(), oc);
    Rng rng(cfg.seed);

    int warmup = std::max(1, static_cast<int>(cfg.steps * cfg.beta_warmup_frac));
    for (int step = 0; step < cfg.steps; ++step) {
        double beta = cfg.beta_final * std::min(1.0, static_cast<double>(step + 1) / warmup);
        std::vector<diff::Bindings> sample_grads(cfg.batch);
        std::vector<double> sample_loss(cfg.batch, 0.0);
#pragma omp parallel for schedule(dynamic)
        for (int b = 0; b < cfg.batch; ++b) {
            Rng srng = rng.fork(static_cast<uint64_t>(step) * 1000 + b);
            int idx = srng.uniform_int(0, static_cast<int>(tiles.size()) - 1);
            bool use_part = srng.uniform() < cfg.partition_fraction;
            const SceneTile& tile = use_part ? part[idx] : tiles[idx];
            if (tile.n_lanes() == 0) continue;
            auto breakdown = model.loss(tile, use_part, beta, cfg.weights, srng, &sample_grads[b]);
            sample_loss[b] = breakdown.total;
        }
        // deterministic merge in batch order
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
        if (log && cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == cfg.steps)) {
            vae::VaeLossBreakdown bd{};
            Rng vrng(777);
            for (int i = 0; i < 4; ++i) {
                auto b = model.loss(tiles[i % tiles.size()], false, beta, cfg.weights, vrng, nullptr);
                bd.statics += b.statics / 4; bd.motion += b.motion / 4; bd.lane += b.lane / 4;
                bd.conn += b.conn / 4; bd.count += b.count / 4; bd.kl += b.kl / 4;
            }
            (*log) << "vae step " << step << " loss " << loss_sum / cfg.batch << " | static "
                   << bd.statics << " motion " << bd.motion << " lane " << bd.lane << " conn "
                   << bd.conn << " count " << bd.count << " kl " << bd.kl << std::endl;
        }
    }
}

VaeValidation validate_vae(VaeModel& model, const std::vector<SceneTile>& tiles) {
    VaeValidation v;
    FeatureScales s = model.config().scales();
    double st_sum = 0, mot_sum = 0, lane_sum = 0;
    long st_n = 0, mot_n = 0, lane_n = 0;
    for (const auto& tile : tiles) {
        if (tile.n_lanes() == 0) continue;
        Posterior p = model.encode(tile, false);
        Decoded d = model.decode(p.mu_lane, tile.n_agents() > 0 ? p.mu_agent
                                                                : Tensor::zeros(0, model.config().d_agent));
        Tensor lt = lane_features(tile, s);
        for (size_t i = 0; i < lt.size(); ++i) {
            lane_sum += std::fabs(d.lane_geom[i] - lt[i]);
            ++lane_n;
        }
        if (tile.n_agents() > 0) {
            Tensor at = agent_static_features(tile, s);
            for (size_t i = 0; i < at.size(); ++i) {
                st_sum += std::fabs(d.agent_static[i] - at[i]);
                ++st_n;
            }
            Tensor mt = agent_motion_features(tile, model.config().k_mot);
            for (size_t i = 0; i < mt.size(); ++i) {
                mot_sum += std::fabs(d.motion[i] - mt[i]);
                ++mot_n;
            }
            for (int i = 0; i < tile.n_agents(); ++i) {
                double gate = p.gate_mean.at(i, 0);
                if (tile.codes[i].is_static) {
                    v.gate_static_mean += gate;
                    ++v.static_agents;
                } else {
                    v.gate_dynamic_mean += gate;
                    ++v.dynamic_agents;
                }
            }
        }
    }
    v.static_l1 = st_n ? st_sum / st_n : 0.0;
    v.motion_l1 = mot_n ? mot_sum / mot_n : 0.0;
    v.lane_l1 = lane_n ? lane_sum / lane_n : 0.0;
    if (v.static_agents) v.gate_static_mean /= v.static_agents;
    if (v.dynamic_agents) v.gate_dynamic_mean /= v.dynamic_agents;
    return v;
}

}  // namespace vw::vae
