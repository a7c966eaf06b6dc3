#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "vectorworld/diffcore/graph.hpp"
#include "vectorworld/scenegraph/types.hpp"

namespace vw::dit {

using diff::Tensor;

struct DitConfig {
    int width = 64;
    int blocks = 2;
    int heads = 4;
    int edge_proj = 8;
    int l2l_repeats = 2;
    int d_lane = 24;
    int d_agent = 18;
    int time_freqs = 8;
    int n_styles = 4;
    bool relational = true;       // edge bias + value gate on self stages
    bool cross_type_bias = true;  // edge bias on cross stages
    bool global_fusion = true;
    uint64_t seed = 2;

    int cond_dim() const { return 5 + n_styles; }
};

// conditioning context c: counts, mask summary, style label, null flag
struct DitCond {
    int n_l = 0, n_a = 0;
    double frac_lane_cond = 0.0, frac_agent_cond = 0.0;
    int style = 0;
    bool null_context = false;
    Tensor l2l_types;  // (n_l^2) x 6, masked to `none` where unknown

    Tensor vec(const DitConfig& cfg) const;
};

struct FieldOut {
    Tensor lane;   // N_l x d_lane
    Tensor agent;  // N_a x d_agent
};

// Factorized edge-gated relational DiT over latent tokens with dual
// time channels (t, delta). The field's meaning (noise / velocity /
// mean velocity) belongs to the dynamics module.
class DitModel {
public:
    DitModel(std::shared_ptr<diff::ParamStore> store, DitConfig cfg);

    const DitConfig& config() const { return cfg_; }
    const std::shared_ptr<diff::ParamStore>& store() const { return store_; }

    FieldOut forward(const Tensor& z_lane, const Tensor& z_agent, double t, double delta,
                     const DitCond& cond);

    // total derivative along the rectified path: tangent
    // (dz/dt, dt/dt, d(delta)/dt) = (v, 1, 0)
    FieldOut jvp_total_derivative(const Tensor& z_lane, const Tensor& z_agent, double t,
                                  double delta, const DitCond& cond, const Tensor& v_lane,
                                  const Tensor& v_agent);

    // mse of (u + corr - target) over all latent entries; corr carries
    // the detached delta * JVP term (zeros for ddpm/flow)
    double loss_grad(const Tensor& z_lane, const Tensor& z_agent, double t, double delta,
                     const DitCond& cond, const Tensor& corr_lane, const Tensor& corr_agent,
                     const Tensor& target_lane, const Tensor& target_agent, double weight,
                     diff::Bindings* grad_accum);

private:
    diff::Graph& field_graph(int n_l, int n_a);
    diff::Graph& train_graph(int n_l, int n_a);
    diff::Bindings bindings(const Tensor& z_lane, const Tensor& z_agent, double t, double delta,
                            const DitCond& cond) const;

    DitConfig cfg_;
    std::shared_ptr<diff::ParamStore> store_;
    std::mutex cache_mu_;
    std::map<std::string, std::unique_ptr<diff::Graph>> cache_;
};

}  // namespace vw::dit
