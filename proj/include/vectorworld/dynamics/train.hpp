#pragma once

#include <ostream>

#include "vectorworld/diffcore/optim.hpp"
#include "vectorworld/dynamics/dynamics.hpp"
#include "vectorworld/vae/model.hpp"

namespace vw::dyn {

// Per-dim standardization of the VAE latent space; the generator
// always works on standardized latents. Stored under meta.* names in
// the generator checkpoint.
struct LatentStats {
    Tensor lane_mean, lane_std, agent_mean, agent_std;
};

LatentStats compute_latent_stats(vae::VaeModel& vae, const std::vector<scene::SceneTile>& tiles);
void store_latent_stats(diff::ParamStore& store, const LatentStats& stats);
LatentStats load_latent_stats(const diff::ParamStore& store);

// posterior mean, standardized; clamp masks copied from the tile masks
LatentState encode_tile(vae::VaeModel& vae, const scene::SceneTile& tile, bool partition_masking,
                        const LatentStats& stats);

scene::SceneTile decode_latents(vae::VaeModel& vae, const LatentState& z, const LatentStats& stats,
                                double fov, int style);

dit::DitCond make_cond(const dit::DitConfig& cfg, const scene::SceneTile& tile, bool null_context);

struct GenTrainConfig {
    Mode mode = Mode::MeanFlow;
    int steps = 3000;
    int batch = 6;
    diff::AdamWConfig opt{1e-4, 0.9, 0.999, 1e-7, 1e-5, 10.0, 200, 0, false};
    TimeSamplerConfig times;
    AdaptiveWeightConfig adaptive;
    double label_dropout = 0.1;
    double partition_fraction = 0.5;
    int ddpm_steps = 100;
    uint64_t seed = 2;
    int log_every = 500;
};

// forward-only loss of one prepared sample; meanflow honors (t, r),
// flow and ddpm ignore r (ddpm maps t to the nearest discrete step)
double mode_loss_on_sample(dit::DitModel& model, Mode mode, const LatentState& z0, double t,
                           double r, const dit::DitCond& cond, Rng& noise_rng,
                           const NoiseSchedule* sched);

void train_generator(dit::DitModel& model, vae::VaeModel& vae,
                     const std::vector<scene::SceneTile>& tiles, const GenTrainConfig& cfg,
                     std::ostream* log);

// field wrappers for sampling
FieldFn learned_field(dit::DitModel& model, const dit::DitCond& cond, const GuidanceConfig& g,
                      long* graph_evals = nullptr);

struct SampledTile {
    scene::SceneTile tile;
    SampleStats stats;
    long graph_evals = 0;
    double wall_ms = 0.0;
};

SampledTile sample_initial_tile(dit::DitModel& model, vae::VaeModel& vae,
                                const LatentStats& stats, Mode mode, int k_steps,
                                const NoiseSchedule* sched, int n_l, int n_a, int style,
                                const GuidanceConfig& guidance, Rng& rng);

}  // namespace vw::dyn
