#pragma once

#include <memory>
#include <mutex>

#include "vectorworld/diffcore/graph.hpp"
#include "vectorworld/scenegraph/types.hpp"
#include "vectorworld/util/rng.hpp"
#include "vectorworld/vae/features.hpp"

namespace vw::vae {

struct VaeConfig {
    int width = 64;
    int blocks = 2;
    int heads = 4;
    int edge_proj = 8;
    int d_lane = 24;
    int d_agent = 18;
    int lane_points = 20;
    int k_mot = 4;
    int count_max = 100;  // lane-count head over {0..count_max}
    double fov = 64.0;
    double logvar_bound = 10.0;
    uint64_t seed = 1;

    FeatureScales scales() const { return {fov / 2.0, 15.0, 10.0, 5.0}; }
};

struct Posterior {
    Tensor mu_lane, lv_lane;    // N_l x d_lane
    Tensor mu_agent, lv_agent;  // N_a x d_agent
    Tensor count_probs;         // 1 x (count_max+1)
    Tensor gate_mean;           // N_a x 1 diagnostic
};

struct Decoded {
    Tensor lane_geom;     // N_l x 2P, normalized
    Tensor agent_static;  // N_a x 7, normalized
    Tensor motion;        // N_a x 2K
    Tensor type_logits;   // N_a x 3
    Tensor conn_logits;   // N_l^2 x 6
};

struct VaeLossWeights {
    double motion = 1.0;
    double lane = 1.0;
    double conn = 1.0;
    double type = 1.0;
    double count = 0.5;
    double smooth = 0.1;
    double collision = 0.1;
    double endpoint = 0.1;
    double xy_extra = 2.0;      // weight on x,y inside the static term
    double static_extra = 4.0;  // motion-term weight on static agents
};

struct VaeLossBreakdown {
    double total = 0, statics = 0, motion = 0, lane = 0, conn = 0, type = 0, kl = 0,
           count = 0, smooth = 0, collision = 0, endpoint = 0;
};

// Motion-aware gated VAE over lane/agent tokens with a factorized
// scene transformer and a lane-count completion head.
class VaeModel {
public:
    VaeModel(std::shared_ptr<diff::ParamStore> store, VaeConfig cfg);

    const VaeConfig& config() const { return cfg_; }
    const std::shared_ptr<diff::ParamStore>& store() const { return store_; }

    // gate_bias is a test hook added to the pre-sigmoid gate logits
    Posterior encode(const scene::SceneTile& tile, bool partition_masking,
                     double gate_bias = 0.0);

    Decoded decode(const Tensor& z_lane, const Tensor& z_agent);

    static Tensor reparameterize(const Tensor& mu, const Tensor& logvar, const Tensor& eps);

    // de-normalization + argmax attributes; succ decisions take
    // precedence when enforcing pred/succ antisymmetry
    scene::SceneTile decoded_to_tile(const Decoded& d, double fov, int style) const;

    // full objective on one tile (targets are the tile itself);
    // when grad_out is set, parameter gradients are accumulated into it
    VaeLossBreakdown loss(const scene::SceneTile& tile, bool partition_masking, double beta,
                          const VaeLossWeights& w, Rng& noise_rng, diff::Bindings* grad_out);

    // frozen-encoder scene embedding: mean-pooled lane posterior means
    std::vector<double> scene_embedding(const scene::SceneTile& tile);

private:
    diff::Graph& encoder_graph(int n_l, int n_a);
    diff::Graph& decoder_graph(int n_l, int n_a);
    diff::Graph& loss_graph(int n_l, int n_a);
    diff::Bindings encoder_bindings(const scene::SceneTile& tile, bool partition_masking,
                                    double gate_bias) const;

    VaeConfig cfg_;
    std::shared_ptr<diff::ParamStore> store_;
    std::mutex cache_mu_;
    std::map<std::string, std::unique_ptr<diff::Graph>> cache_;
};

}  // namespace vw::vae
