#include "vectorworld/dit/model.hpp"

#include "vectorworld/nn/builders.hpp"

namespace vw::dit {

using diff::Bindings;
using diff::Graph;
using nn::AttnSpec;
using nn::Builder;

Tensor DitCond::vec(const DitConfig& cfg) const {
    Tensor v = Tensor::zeros(1, cfg.cond_dim());
    v[0] = n_l / 100.0;
    v[1] = n_a / 30.0;
    v[2] = frac_lane_cond;
    v[3] = frac_agent_cond;
    v[4] = null_context ? 1.0 : 0.0;
    if (!null_context && style >= 0 && style < cfg.n_styles) v[5 + style] = 1.0;
    return v;
}

DitModel::DitModel(std::shared_ptr<diff::ParamStore> store, DitConfig cfg)
    : cfg_(cfg), store_(std::move(store)) {
    field_graph(2, 1);
}

namespace {
struct Backbone {
    int u_lane = -1, u_agent = -1;
};

Backbone build_backbone(Builder& b, const DitConfig& cfg, int n_l, int n_a) {
    Graph& g = b.graph();
    int tf = nn::time_feature_dim(cfg.time_freqs);

    int z_lane = g.input("z_lane", n_l, cfg.d_lane);
    int z_agent = n_a > 0 ? g.input("z_agent", n_a, cfg.d_agent) : -1;
    int temb_t = g.input("temb_t", 1, tf);
    int temb_dt = g.input("temb_dt", 1, tf);
    int cond_vec = g.input("cond_vec", 1, cfg.cond_dim());
    int l2l_types = g.input("l2l_types", n_l * n_l, scene::kNumConnTypes);

    int time_mlp = b.mlp2("dit.time", g.concat(temb_t, temb_dt, 1), cfg.width, cfg.width);
    int cond_mlp = b.mlp2("dit.cond", cond_vec, cfg.width, cfg.width);
    int base_cond = g.add(time_mlp, cond_mlp);

    int lanes = b.linear("dit.lane_embed", z_lane, cfg.width);
    int agents = n_a > 0 ? b.linear("dit.agent_embed", z_agent, cfg.width) : -1;

    AttnSpec self_spec{cfg.width, cfg.heads, cfg.edge_proj, scene::kNumConnTypes,
                       cfg.relational, cfg.relational};
    AttnSpec a2a_spec{cfg.width, cfg.heads, cfg.edge_proj, 0, cfg.relational, cfg.relational};
    AttnSpec cross_spec{cfg.width, cfg.heads, cfg.edge_proj, 0, cfg.cross_type_bias, false};

    for (int blk = 0; blk < cfg.blocks; ++blk) {
        std::string pre = "dit.b" + std::to_string(blk);
        int blk_cond = base_cond;
        if (cfg.global_fusion) {
            int pooled = n_a > 0
                             ? g.concat(g.mean_axis(lanes, 0), g.mean_axis(agents, 0), 1)
                             : g.concat(g.mean_axis(lanes, 0), g.mean_axis(lanes, 0), 1);
            int delta = b.mlp2(pre + ".global", pooled, cfg.width, cfg.width);
            blk_cond = g.add(base_cond, delta);
        }

        // stage order: A2L, L2L (repeated), L2A, A2A
        if (n_a > 0) {
            lanes = nn::attention_stage(b, pre + ".a2l", g.add(lanes, blk_cond), agents, n_l, n_a,
                                        std::nullopt, std::nullopt, cross_spec);
        } else {
            lanes = g.add(lanes, blk_cond);
        }
        for (int r = 0; r < cfg.l2l_repeats; ++r) {
            lanes = nn::attention_stage(b, pre + ".l2l" + std::to_string(r),
                                        g.add(lanes, blk_cond), lanes, n_l, n_l, l2l_types,
                                        std::nullopt, self_spec);
        }
        if (n_a > 0) {
            agents = nn::attention_stage(b, pre + ".l2a", g.add(agents, blk_cond), lanes, n_a, n_l,
                                         std::nullopt, std::nullopt, cross_spec);
            agents = nn::attention_stage(b, pre + ".a2a", g.add(agents, blk_cond), agents, n_a, n_a,
                                         std::nullopt, std::nullopt, a2a_spec);
        }
    }

    Backbone out;
    out.u_lane = b.linear("dit.head_lane", b.layernorm_affine("dit.head_lane_ln", lanes), cfg.d_lane);
    if (n_a > 0)
        out.u_agent =
            b.linear("dit.head_agent", b.layernorm_affine("dit.head_agent_ln", agents), cfg.d_agent);
    return out;
}
}  // namespace

Graph& DitModel::field_graph(int n_l, int n_a) {
    std::scoped_lock lk(cache_mu_);
    std::string key = "f/" + std::to_string(n_l) + "/" + std::to_string(n_a);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    auto g = std::make_unique<Graph>(store_);
    Builder b(*g, cfg_.seed);
    Backbone bb = build_backbone(b, cfg_, n_l, n_a);
    g->mark_output("u_lane", bb.u_lane);
    if (n_a > 0) g->mark_output("u_agent", bb.u_agent);
    return *cache_.emplace(key, std::move(g)).first->second;
}

Graph& DitModel::train_graph(int n_l, int n_a) {
    std::scoped_lock lk(cache_mu_);
    std::string key = "t/" + std::to_string(n_l) + "/" + std::to_string(n_a);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    auto gp = std::make_unique<Graph>(store_);
    Graph& g = *gp;
    Builder b(g, cfg_.seed);
    Backbone bb = build_backbone(b, cfg_, n_l, n_a);

    long total = static_cast<long>(n_l) * cfg_.d_lane + static_cast<long>(n_a) * cfg_.d_agent;
    int corr_lane = g.input("corr_lane", n_l, cfg_.d_lane);
    int tgt_lane = g.input("target_lane", n_l, cfg_.d_lane);
    int err = g.sum_all(g.square(g.sub(g.add(bb.u_lane, corr_lane), tgt_lane)));
    if (n_a > 0) {
        int corr_agent = g.input("corr_agent", n_a, cfg_.d_agent);
        int tgt_agent = g.input("target_agent", n_a, cfg_.d_agent);
        err = g.add(err, g.sum_all(g.square(g.sub(g.add(bb.u_agent, corr_agent), tgt_agent))));
    }
    int loss = g.scale(err, 1.0 / static_cast<double>(total));
    g.mark_output("loss", loss);
    g.mark_output("u_lane", bb.u_lane);
    if (n_a > 0) g.mark_output("u_agent", bb.u_agent);
    return *cache_.emplace(key, std::move(gp)).first->second;
}

Bindings DitModel::bindings(const Tensor& z_lane, const Tensor& z_agent, double t, double delta,
                            const DitCond& cond) const {
    Bindings in;
    in["z_lane"] = z_lane;
    if (z_agent.rows() > 0) in["z_agent"] = z_agent;
    in["temb_t"] = nn::time_features(t, cfg_.time_freqs);
    in["temb_dt"] = nn::time_features(delta, cfg_.time_freqs);
    in["cond_vec"] = cond.vec(cfg_);
    in["l2l_types"] = cond.l2l_types;
    return in;
}

FieldOut DitModel::forward(const Tensor& z_lane, const Tensor& z_agent, double t, double delta,
                           const DitCond& cond) {
    Graph& g = field_graph(z_lane.rows(), z_agent.rows());
    auto r = diff::evaluate(g, bindings(z_lane, z_agent, t, delta, cond));
    FieldOut out;
    out.lane = r.outputs.at("u_lane");
    out.agent = z_agent.rows() > 0 ? r.outputs.at("u_agent") : Tensor::zeros(0, cfg_.d_agent);
    return out;
}

FieldOut DitModel::jvp_total_derivative(const Tensor& z_lane, const Tensor& z_agent, double t,
                                        double delta, const DitCond& cond, const Tensor& v_lane,
                                        const Tensor& v_agent) {
    Graph& g = field_graph(z_lane.rows(), z_agent.rows());
    Bindings in = bindings(z_lane, z_agent, t, delta, cond);
    Bindings tan;
    for (const auto& [name, id] : g.inputs()) {
        const Tensor& bound = in.at(name);
        tan[name] = Tensor::zeros(bound.rows(), bound.cols());
    }
    tan["z_lane"] = v_lane;
    if (z_agent.rows() > 0) tan["z_agent"] = v_agent;
    // dt/dt = 1 flows through the host-side time features; the second
    // time channel is held fixed (d delta / dt = 0)
    tan["temb_t"] = nn::time_feature_tangent(t, cfg_.time_freqs);
    auto r = diff::jvp(g, in, tan);
    FieldOut out;
    out.lane = r.tangents.at("u_lane");
    out.agent = z_agent.rows() > 0 ? r.tangents.at("u_agent") : Tensor::zeros(0, cfg_.d_agent);
    return out;
}

double DitModel::loss_grad(const Tensor& z_lane, const Tensor& z_agent, double t, double delta,
                           const DitCond& cond, const Tensor& corr_lane, const Tensor& corr_agent,
                           const Tensor& target_lane, const Tensor& target_agent, double weight,
                           diff::Bindings* grad_accum) {
    Graph& g = train_graph(z_lane.rows(), z_agent.rows());
    Bindings in = bindings(z_lane, z_agent, t, delta, cond);
    in["corr_lane"] = corr_lane;
    in["target_lane"] = target_lane;
    if (z_agent.rows() > 0) {
        in["corr_agent"] = corr_agent;
        in["target_agent"] = target_agent;
    }
    if (!grad_accum) {
        auto r = diff::evaluate(g, in);
        return r.outputs.at("loss").item();
    }
    auto gr = diff::grad(g, in, "loss");
    for (const auto& [name, tns] : gr.wrt_params) {
        auto it = grad_accum->find(name);
        if (it == grad_accum->end()) {
            Tensor scaled = tns;
            for (size_t i = 0; i < scaled.size(); ++i) scaled[i] *= weight;
            grad_accum->emplace(name, std::move(scaled));
        } else {
            for (size_t i = 0; i < tns.size(); ++i) it->second[i] += weight * tns[i];
        }
    }
    return gr.value;
}

}  // namespace vw::dit
