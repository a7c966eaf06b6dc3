#pragma once

#include <ostream>

#include "vectorworld/diffcore/optim.hpp"
#include "vectorworld/vae/model.hpp"

namespace vw::vae {

struct VaeTrainConfig {
    int steps = 3000;
    int batch = 8;
    diff::AdamWConfig opt{1e-4, 0.9, 0.999, 1e-7, 2e-5, 10.0, 200, 0, true};
    VaeLossWeights weights;
    double beta_final = 0.1;
    double beta_warmup_frac = 0.1;  // linear warm-up over the first 10% of steps
    double partition_fraction = 0.5;
    uint64_t seed = 1;
    int log_every = 500;
};

void train_vae(VaeModel& model, const std::vector<scene::SceneTile>& tiles,
               const VaeTrainConfig& cfg, std::ostream* log);

// true (unsmoothed) reconstruction L1 on held-out tiles, normalized
// units, plus the gate-activation split used as the Fig.-style
// diagnostic
struct VaeValidation {
    double static_l1 = 0.0;
    double motion_l1 = 0.0;
    double lane_l1 = 0.0;
    double gate_dynamic_mean = 0.0;
    double gate_static_mean = 0.0;
    int dynamic_agents = 0;
    int static_agents = 0;
};

VaeValidation validate_vae(VaeModel& model, const std::vector<scene::SceneTile>& tiles);

}  // namespace vw::vae
