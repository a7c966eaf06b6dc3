#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>

#include "vectorworld/deltasim/cost.hpp"
#include "vectorworld/deltasim/rtg.hpp"
#include "vectorworld/deltasim/vocab.hpp"
#include "vectorworld/scenegraph/types.hpp"

namespace vw::dsim {

using diff::Tensor;

struct PolicyConfig {
    int width = 64;
    int lanes_ctx = 6;
    int p_delta = 50;  // lane context points
    int neighbors_ctx = 6;
    int ctx_len = 13;
    int vocab = kVocabSize;
    int rtg_bins = 350;
    int rtg_emb = 16;
    double pos_scale = 40.0;  // agent FOV half-extent
    double speed_scale = 15.0;
    uint64_t seed = 3;
};

// body-frame context of one deciding agent
struct PolicyContext {
    Tensor lanes;      // lanes_ctx x (2 * p_delta + 1), last column is validity
    Tensor neighbors;  // neighbors_ctx x 8, last column is validity
    Tensor self_feat;  // 1 x (3 * ctx_len + 4)
    double inv_lanes = 0.0;
    double inv_neighbors = 0.0;
    double speed = 0.0;
};

PolicyContext featurize_context(const PolicyConfig& cfg,
                                const std::vector<scene::LanePolyline>& lanes_global,
                                const std::vector<scene::AgentState>& neighbors_global,
                                const std::vector<scene::TimedPose>& own_history,
                                const scene::AgentState& self);

struct PolicyOutput {
    Tensor logits;            // 1 x vocab, raw
    Tensor rtg_probs;         // 1 x bins, pre-tilt
    Tensor rtg_probs_tilted;  // what FiLM consumed
    Tensor residual;          // 1 x 3
};

struct PolicyTargets {
    int token = 0;
    Delta residual;
    int rtg_bin = 0;
};

struct PolicyLossWeights {
    double residual = 1.0;
    double rtg = 0.25;
    double dkal = 0.1;  // lambda_dkal
};

// One-pass return-conditioned decoder: the predicted RTG distribution
// is (optionally tilted and) turned into a soft embedding that FiLM-
// modulates the hidden state before the action heads, all inside a
// single forward evaluation.
class PolicyModel {
public:
    PolicyModel(std::shared_ptr<diff::ParamStore> store, PolicyConfig cfg, KDisksVocab vocab,
                RtgConfig rtg);

    const PolicyConfig& config() const { return cfg_; }
    const KDisksVocab& vocab() const { return vocab_; }
    const RtgConfig& rtg() const { return rtg_; }
    const std::shared_ptr<diff::ParamStore>& store() const { return store_; }

    PolicyOutput forward(const PolicyContext& ctx, double kappa);
    long forward_count() const { return forward_count_; }

    double loss_grad(const PolicyContext& ctx, const PolicyTargets& targets,
                     const PolicyLossWeights& w, double dt, const KinematicLimits& lim,
                     diff::Bindings* grad_accum);

private:
    diff::Graph& forward_graph();
    diff::Graph& train_graph(const KinematicLimits& lim, double dt);
    diff::Bindings bindings(const PolicyContext& ctx, double kappa) const;

    PolicyConfig cfg_;
    KDisksVocab vocab_;
    RtgConfig rtg_;
    std::shared_ptr<diff::ParamStore> store_;
    std::mutex cache_mu_;
    std::map<std::string, std::unique_ptr<diff::Graph>> cache_;
    std::atomic<long> forward_count_{0};
};

// sample from softmax(shaped logits) by inverse CDF on one uniform
// draw; deterministic mode takes the argmax
struct HybridAction {
    int token = 0;
    Delta applied;  // vocab row + alpha * residual
};
HybridAction hybrid_step(const PolicyOutput& out, const KDisksVocab& vocab,
                         const KinematicLimits& lim, double speed, double dt, Rng& rng,
                         bool deterministic = false);

// compose a body-frame delta with a global pose
scene::AgentState apply_delta(const scene::AgentState& state, const Delta& d, double dt);

}  // namespace vw::dsim
