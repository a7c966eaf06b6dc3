#include "vectorworld/dynamics/train.hpp"

#include "vectorworld/scenegraph/ops.hpp"

#include <chrono>
#include <cmath>

namespace vw::dyn {

using scene::SceneTile;

LatentStats compute_latent_stats(vae::VaeModel& vae, const std::vector<SceneTile>& tiles) {
    int dl = vae.config().d_lane, da = vae.config().d_agent;
    std::vector<double> lsum(dl, 0), lsq(dl, 0), asum(da, 0), asq(da, 0);
    long ln = 0, an = 0;
    for (const auto& tile : tiles) {
        vae::Posterior p = vae.encode(tile, false);
        for (int i = 0; i < p.mu_lane.rows(); ++i, ++ln)
            for (int d = 0; d < dl; ++d) {
                lsum[d] += p.mu_lane.at(i, d);
                lsq[d] += p.mu_lane.at(i, d) * p.mu_lane.at(i, d);
            }
        for (int i = 0; i < p.mu_agent.rows(); ++i, ++an)
            for (int d = 0; d < da; ++d) {
                asum[d] += p.mu_agent.at(i, d);
                asq[d] += p.mu_agent.at(i, d) * p.mu_agent.at(i, d);
            }
    }
    LatentStats s;
    s.lane_mean = Tensor::zeros(1, dl);
    s.lane_std = Tensor::zeros(1, dl);
    s.agent_mean = Tensor::zeros(1, da);
    s.agent_std = Tensor::zeros(1, da);
    for (int d = 0; d < dl; ++d) {
        double mu = ln ? lsum[d] / ln : 0.0;
        double var = ln ? std::max(1e-8, lsq[d] / ln - mu * mu) : 1.0;
        s.lane_mean[d] = mu;
        s.lane_std[d] = std::sqrt(var);
    }
    for (int d = 0; d < da; ++d) {
        double mu = an ? asum[d] / an : 0.0;
        double var = an ? std::max(1e-8, asq[d] / an - mu * mu) : 1.0;
        s.agent_mean[d] = mu;
        s.agent_std[d] = std::sqrt(var);
    }
    return s;
}

void store_latent_stats(diff::ParamStore& store, const LatentStats& stats) {
    store.add("meta.lane_mean", stats.lane_mean);
    store.add("meta.lane_std", stats.lane_std);
    store.add("meta.agent_mean", stats.agent_mean);
    store.add("meta.agent_std", stats.agent_std);
}

LatentStats load_latent_stats(const diff::ParamStore& store) {
    return {store.get("meta.lane_mean"), store.get("meta.lane_std"),
            store.get("meta.agent_mean"), store.get("meta.agent_std")};
}

LatentState encode_tile(vae::VaeModel& vae, const SceneTile& tile, bool partition_masking,
                        const LatentStats& stats) {
    vae::Posterior p = vae.encode(tile, partition_masking);
    LatentState z;
    z.z_lane = p.mu_lane;
    z.z_agent = tile.n_agents() > 0 ? p.mu_agent : Tensor::zeros(0, vae.config().d_agent);
    for (int i = 0; i < z.z_lane.rows(); ++i)
        for (int d = 0; d < z.z_lane.cols(); ++d)
            z.z_lane.at(i, d) = (z.z_lane.at(i, d) - stats.lane_mean[d]) / stats.lane_std[d];
    for (int i = 0; i < z.z_agent.rows(); ++i)
        for (int d = 0; d < z.z_agent.cols(); ++d)
            z.z_agent.at(i, d) = (z.z_agent.at(i, d) - stats.agent_mean[d]) / stats.agent_std[d];
    z.lane_clamped = tile.lane_mask;
    z.agent_clamped = tile.agent_mask;
    return z;
}

SceneTile decode_latents(vae::VaeModel& vae, const LatentState& z, const LatentStats& stats,
                         double fov, int style) {
    Tensor zl = z.z_lane, za = z.z_agent;
    for (int i = 0; i < zl.rows(); ++i)
        for (int d = 0; d < zl.cols(); ++d)
            zl.at(i, d) = zl.at(i, d) * stats.lane_std[d] + stats.lane_mean[d];
    for (int i = 0; i < za.rows(); ++i)
        for (int d = 0; d < za.cols(); ++d)
            za.at(i, d) = za.at(i, d) * stats.agent_std[d] + stats.agent_mean[d];
    vae::Decoded dec = vae.decode(zl, za);
    return vae.decoded_to_tile(dec, fov, style);
}

dit::DitCond make_cond(const dit::DitConfig& cfg, const SceneTile& tile, bool null_context) {
    dit::DitCond c;
    c.n_l = tile.n_lanes();
    c.n_a = tile.n_agents();
    int lc = 0, ac = 0;
    for (bool m : tile.lane_mask) lc += m ? 1 : 0;
    for (bool m : tile.agent_mask) ac += m ? 1 : 0;
    c.frac_lane_cond = tile.n_lanes() ? static_cast<double>(lc) / tile.n_lanes() : 0.0;
    c.frac_agent_cond = tile.n_agents() ? static_cast<double>(ac) / tile.n_agents() : 0.0;
    c.style = tile.style;
    c.null_context = null_context;
    c.l2l_types = vae::l2l_type_onehot_masked(tile);
    (void)cfg;
    return c;
}

namespace {
Tensor noise_like(const Tensor& t, Rng& rng) {
    Tensor out = Tensor::zeros(t.rows(), t.cols());
    for (size_t i = 0; i < out.size(); ++i) out[i] = rng.normal();
    return out;
}

struct PreparedSample {
    LatentState zt;
    Tensor target_lane, target_agent;
    Tensor corr_lane, corr_agent;
    double t = 0, delta = 0;
};

PreparedSample prepare_sample(dit::DitModel& model, Mode mode, const LatentState& z0, double t,
                              double r, const dit::DitCond& cond, Rng& noise_rng,
                              const NoiseSchedule* sched) {
    PreparedSample s;
    Tensor eps_l = noise_like(z0.z_lane, noise_rng);
    Tensor eps_a = noise_like(z0.z_agent, noise_rng);

    if (mode == Mode::Ddpm) {
        if (!sched) throw std::runtime_error("ddpm sample needs a schedule");
        int n = std::max(1, std::min(sched->steps, static_cast<int>(std::lround(t * sched->steps))));
        ddpm_forward_noise(z0, n, eps_l, eps_a, *sched, &s.zt);
        s.target_lane = Tensor::zeros(z0.z_lane.rows(), z0.z_lane.cols());
        s.target_agent = Tensor::zeros(z0.z_agent.rows(), z0.z_agent.cols());
        for (int i = 0; i < z0.z_lane.rows(); ++i)
            if (!z0.lane_clamped[i])
                for (int d = 0; d < z0.z_lane.cols(); ++d) s.target_lane.at(i, d) = eps_l.at(i, d);
        for (int i = 0; i < z0.z_agent.rows(); ++i)
            if (!z0.agent_clamped[i])
                for (int d = 0; d < z0.z_agent.cols(); ++d) s.target_agent.at(i, d) = eps_a.at(i, d);
        s.t = static_cast<double>(n) / sched->steps;
        s.delta = 0.0;
        s.corr_lane = Tensor::zeros(z0.z_lane.rows(), z0.z_lane.cols());
        s.corr_agent = Tensor::zeros(z0.z_agent.rows(), z0.z_agent.cols());
        return s;
    }

    flow_path(z0, eps_l, eps_a, t, &s.zt, &s.target_lane, &s.target_agent);
    s.t = t;
    s.delta = mode == Mode::MeanFlow ? t - r : 0.0;
    s.corr_lane = Tensor::zeros(z0.z_lane.rows(), z0.z_lane.cols());
    s.corr_agent = Tensor::zeros(z0.z_agent.rows(), z0.z_agent.cols());
    if (mode == Mode::MeanFlow && s.delta > 0.0) {
        // boundary velocity tangent, then the detached JVP correction
        dit::FieldOut v = model.forward(s.zt.z_lane, s.zt.z_agent, s.t, 0.0, cond);
        dit::FieldOut dudt = model.jvp_total_derivative(s.zt.z_lane, s.zt.z_agent, s.t, s.delta,
                                                        cond, v.lane, v.agent);
        for (size_t i = 0; i < s.corr_lane.size(); ++i) s.corr_lane[i] = s.delta * dudt.lane[i];
        for (size_t i = 0; i < s.corr_agent.size(); ++i) s.corr_agent[i] = s.delta * dudt.agent[i];
    }
    return s;
}
}  // namespace

double mode_loss_on_sample(dit::DitModel& model, Mode mode, const LatentState& z0, double t,
                           double r, const dit::DitCond& cond, Rng& noise_rng,
                           const NoiseSchedule* sched) {
    PreparedSample s = prepare_sample(model, mode, z0, t, r, cond, noise_rng, sched);
    return model.loss_grad(s.zt.z_lane, s.zt.z_agent, s.t, s.delta, cond, s.corr_lane,
                           s.corr_agent, s.target_lane, s.target_agent, 1.0, nullptr);
}

void train_generator(dit::DitModel& model, vae::VaeModel& vae, const std::vector<SceneTile>& tiles,
                     const GenTrainConfig& cfg, std::ostream* log) {
    if (tiles.empty()) throw std::runtime_error("train_generator: no tiles");
    LatentStats stats = load_latent_stats(*model.store());
    NoiseSchedule sched = NoiseSchedule::linear(cfg.ddpm_steps);

    // pre-encode latents and conditions once; partitioned variants
    // teach outpainting, unpartitioned ones teach initial generation
    scene::SceneCaps caps;
    caps.lane_points = vae.config().lane_points;
    caps.k_mot = vae.config().k_mot;
    std::vector<LatentState> z_full, z_part;
    std::vector<dit::DitCond> c_full, c_part, c_full_null, c_part_null;
    for (const auto& tile : tiles) {
        SceneTile part = scene::partition_scene(scene::se2_transform(tile, scene::SE2{0, 0, M_PI / 2}), caps);
        z_full.push_back(encode_tile(vae, tile, false, stats));
        z_part.push_back(encode_tile(vae, part, true, stats));
        c_full.push_back(make_cond(model.config(), tile, false));
        c_part.push_back(make_cond(model.config(), part, false));
        c_full_null.push_back(make_cond(model.config(), tile, true));
        c_part_null.push_back(make_cond(model.config(), part, true));
    }

    diff::AdamWConfig oc = cfg.opt;
    oc.total_steps = cfg.steps;
    diff::AdamW opt(model.store(), oc);
    Rng rng(cfg.seed);

    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<diff::Bindings> sample_grads(cfg.batch);
        std::vector<double> sample_loss(cfg.batch, 0.0), sample_w(cfg.batch, 0.0);
#pragma omp parallel for schedule(dynamic)
        for (int b = 0; b < cfg.batch; ++b) {
            Rng srng = rng.fork(static_cast<uint64_t>(step) * 1000 + b);
            int idx = srng.uniform_int(0, static_cast<int>(tiles.size()) - 1);
            bool use_part = srng.uniform() < cfg.partition_fraction;
            bool null_ctx = srng.uniform() < cfg.label_dropout;
            const LatentState& z0 = use_part ? z_part[idx] : z_full[idx];
            const dit::DitCond& cond = use_part ? (null_ctx ? c_part_null[idx] : c_part[idx])
                                                : (null_ctx ? c_full_null[idx] : c_full[idx]);
            if (!z0.any_unclamped()) continue;

            auto [t, r] = sample_times(cfg.times, srng);
            if (cfg.mode != Mode::MeanFlow) r = t;
            PreparedSample s = prepare_sample(model, cfg.mode, z0, t, r, cond, srng, &sched);

            double raw = model.loss_grad(s.zt.z_lane, s.zt.z_agent, s.t, s.delta, cond,
                                         s.corr_lane, s.corr_agent, s.target_lane, s.target_agent,
                                         1.0, &sample_grads[b]);
            sample_loss[b] = raw;
            sample_w[b] = cfg.mode == Mode::MeanFlow ? cfg.adaptive.weight(raw) : 1.0;
        }
        diff::Bindings accum;
        double loss_sum = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            loss_sum += sample_loss[b];
            double w = sample_w[b];
            for (auto& [name, g] : sample_grads[b]) {
                auto it = accum.find(name);
                if (it == accum.end()) {
                    Tensor scaled = g;
                    for (size_t i = 0; i < scaled.size(); ++i) scaled[i] *= w / cfg.batch;
                    accum.emplace(name, std::move(scaled));
                } else {
                    for (size_t i = 0; i < g.size(); ++i) it->second[i] += w / cfg.batch * g[i];
                }
            }
        }
        opt.step(accum);
        if (log && cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == cfg.steps)) {
            (*log) << "gen[" << mode_name(cfg.mode) << "] step " << step << " loss "
                   << loss_sum / cfg.batch << std::endl;
        }
    }
}

FieldFn learned_field(dit::DitModel& model, const dit::DitCond& cond, const GuidanceConfig& g,
                      long* graph_evals) {
    dit::DitCond null_cond = cond;
    null_cond.null_context = true;
    return [&model, cond, null_cond, g, graph_evals](const Tensor& zl, const Tensor& za, double t,
                                                     double delta) {
        dit::FieldOut u_c = model.forward(zl, za, t, delta, cond);
        if (graph_evals) ++*graph_evals;
        if (g.scale == 1.0) return u_c;
        dit::FieldOut u_u = model.forward(zl, za, t, delta, null_cond);
        if (graph_evals) ++*graph_evals;
        dit::FieldOut out;
        out.lane = cfg_combine(u_c.lane, u_u.lane, g.scale);
        out.agent = cfg_combine(u_c.agent, u_u.agent, g.scale);
        return out;
    };
}

SampledTile sample_initial_tile(dit::DitModel& model, vae::VaeModel& vae,
                                const LatentStats& stats, Mode mode, int k_steps,
                                const NoiseSchedule* sched, int n_l, int n_a, int style,
                                const GuidanceConfig& guidance, Rng& rng) {
    SceneTile shape;
    shape.lanes.resize(n_l);
    shape.agents.resize(n_a);
    shape.lane_mask.assign(n_l, false);
    shape.agent_mask.assign(n_a, false);
    shape.style = style;
    shape.edges.init(n_l, n_a);
    dit::DitCond cond = make_cond(model.config(), shape, false);

    LatentState init;
    init.z_lane = Tensor::zeros(n_l, model.config().d_lane);
    init.z_agent = Tensor::zeros(n_a, model.config().d_agent);
    init.lane_clamped.assign(n_l, false);
    init.agent_clamped.assign(n_a, false);

    SampledTile out;
    FieldFn field = learned_field(model, cond, guidance, &out.graph_evals);
    auto t0 = std::chrono::steady_clock::now();
    LatentState z = sample(mode, field, k_steps, sched, init, rng, &out.stats);
    out.tile = decode_latents(vae, z, stats, vae.config().fov, style);
    auto t1 = std::chrono::steady_clock::now();
    out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return out;
}

}  // namespace vw::dyn
