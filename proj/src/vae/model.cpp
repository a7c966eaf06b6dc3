#include "vectorworld/vae/model.hpp"

#include <cmath>

#include "vectorworld/nn/builders.hpp"
#include "vectorworld/scenegraph/ops.hpp"

namespace vw::vae {

using diff::Bindings;
using diff::Graph;
using nn::AttnSpec;
using nn::Builder;
using scene::ConnType;
using scene::SceneTile;

VaeModel::VaeModel(std::shared_ptr<diff::ParamStore> store, VaeConfig cfg)
    : cfg_(cfg), store_(std::move(store)) {
    // touch every parameter once so checkpoints are complete even
    // before the first forward
    encoder_graph(2, 1);
    decoder_graph(2, 1);
}

namespace {

struct EncoderNodes {
    int mu_lane, lv_lane, mu_agent, lv_agent, count_logits, gate_mean;
    int lane_tokens, agent_tokens;
};

// Eq.-style gated fusion followed by the factorized scene transformer.
EncoderNodes build_encoder(Builder& b, const VaeConfig& cfg, int n_l, int n_a) {
    Graph& g = b.graph();
    int p2 = 2 * cfg.lane_points;
    int k2 = 2 * cfg.k_mot;

    int lane_feat = g.input("lane_feat", n_l, p2);
    int agent_static = g.input("agent_static", n_a, 7);
    int agent_motion = g.input("agent_motion", n_a, k2);
    int agent_type = g.input("agent_type", n_a, 3);
    int l2l_types = g.input("l2l_types", n_l * n_l, scene::kNumConnTypes);
    int mask_ll = g.input("mask_ll", n_l, n_l);
    int mask_al = n_a > 0 ? g.input("mask_al", n_a, n_l) : -1;
    int mask_aa = n_a > 0 ? g.input("mask_aa", n_a, n_a) : -1;
    int count_mask = g.input("count_mask", 1, n_l);
    int has_cond = g.input("has_cond", 1, 1);
    int gate_bias = g.input("gate_bias", 1, 1);

    int lanes = b.linear("enc.lane_embed", lane_feat, cfg.width);

    int agents = -1, gate_mean = -1;
    if (n_a > 0) {
        // selective static/motion fusion with a learned per-channel gate
        int st_in = g.concat(agent_static, agent_type, 1);
        int mot_in = g.concat(agent_motion, agent_type, 1);
        int all_in = g.concat({agent_static, agent_motion, agent_type}, 1);
        int f_st = b.mlp2("enc.f_st", st_in, cfg.width, cfg.width);
        int f_mot = b.mlp2("enc.f_mot", mot_in, cfg.width, cfg.width);
        int gate = g.sigmoid(g.add(b.mlp2("enc.f_gate", all_in, cfg.width, cfg.width), gate_bias));
        int one_minus = g.add_scalar(g.scale(gate, -1.0), 1.0);
        agents = g.add(g.mul(one_minus, f_st), g.mul(gate, f_mot));
        gate_mean = g.mean_axis(gate, 1);
    }

    AttnSpec ll{cfg.width, cfg.heads, cfg.edge_proj, scene::kNumConnTypes, true, true};
    AttnSpec plain{cfg.width, cfg.heads, cfg.edge_proj, 0, false, false};

    for (int blk = 0; blk < cfg.blocks; ++blk) {
        std::string pre = "enc.b" + std::to_string(blk);
        lanes = nn::attention_stage(b, pre + ".l2l", lanes, lanes, n_l, n_l, l2l_types, mask_ll, ll);
        if (n_a > 0) {
            agents = nn::attention_stage(b, pre + ".l2a", agents, lanes, n_a, n_l, std::nullopt,
                                         mask_al, plain);
            agents = nn::attention_stage(b, pre + ".a2a", agents, agents, n_a, n_a, std::nullopt,
                                         mask_aa, plain);
        }
    }

    EncoderNodes out{};
    out.lane_tokens = lanes;
    out.agent_tokens = agents;
    out.gate_mean = gate_mean;

    int lanes_ln = b.layernorm_affine("enc.lane_out_ln", lanes);
    out.mu_lane = b.linear("enc.mu_lane", lanes_ln, cfg.d_lane);
    int lvl = b.linear("enc.lv_lane", lanes_ln, cfg.d_lane);
    out.lv_lane = g.scale(g.tanh(g.scale(lvl, 1.0 / cfg.logvar_bound)), cfg.logvar_bound);

    if (n_a > 0) {
        int agents_ln = b.layernorm_affine("enc.agent_out_ln", agents);
        out.mu_agent = b.linear("enc.mu_agent", agents_ln, cfg.d_agent);
        int lva = b.linear("enc.lv_agent", agents_ln, cfg.d_agent);
        out.lv_agent = g.scale(g.tanh(g.scale(lva, 1.0 / cfg.logvar_bound)), cfg.logvar_bound);
    } else {
        out.mu_agent = out.lv_agent = -1;
    }

    // lane-count head: a learnable query attends to conditioned lanes
    int query = b.param("enc.count_query", 1, cfg.width);
    int qn = b.layernorm_affine("enc.count_lnq", query);
    int kn = b.layernorm_affine("enc.count_lnk", lanes);
    int att = nn::relational_attention(b, "enc.count_attn", qn, kn, 1, n_l, std::nullopt,
                                       count_mask, plain);
    int pooled = g.add(query, g.mul(att, has_cond));
    out.count_logits = b.linear("enc.count_head", g.tanh(b.linear("enc.count_mlp", pooled, cfg.width)),
                                cfg.count_max + 1);
    return out;
}

struct DecoderNodes {
    int lane_geom, agent_static, motion, type_logits, conn_logits;
};

DecoderNodes build_decoder(Builder& b, const VaeConfig& cfg, int n_l, int n_a,
                           int z_lane, int z_agent) {
    Graph& g = b.graph();
    AttnSpec plain{cfg.width, cfg.heads, cfg.edge_proj, 0, false, false};

    int lanes = b.linear("dec.lane_embed", z_lane, cfg.width);
    int agents = n_a > 0 ? b.linear("dec.agent_embed", z_agent, cfg.width) : -1;

    for (int blk = 0; blk < cfg.blocks; ++blk) {
        std::string pre = "dec.b" + std::to_string(blk);
        lanes = nn::attention_stage(b, pre + ".l2l", lanes, lanes, n_l, n_l, std::nullopt,
                                    std::nullopt, plain);
        if (n_a > 0) {
            agents = nn::attention_stage(b, pre + ".l2a", agents, lanes, n_a, n_l, std::nullopt,
                                         std::nullopt, plain);
            agents = nn::attention_stage(b, pre + ".a2a", agents, agents, n_a, n_a, std::nullopt,
                                         std::nullopt, plain);
        }
    }

    DecoderNodes out{};
    int lanes_ln = b.layernorm_affine("dec.lane_out_ln", lanes);
    out.lane_geom = b.linear("dec.lane_geom", lanes_ln, 2 * cfg.lane_points);

    if (n_a > 0) {
        int agents_ln = b.layernorm_affine("dec.agent_out_ln", agents);
        out.agent_static = b.linear("dec.agent_static", agents_ln, 7);
        out.motion = g.tanh(b.linear("dec.motion", agents_ln, 2 * cfg.k_mot));
        out.type_logits = b.linear("dec.type", agents_ln, 3);
    } else {
        out.agent_static = out.motion = out.type_logits = -1;
    }

    // connectivity from pairwise decoded lane features
    int proj = b.linear_nobias("dec.conn_proj", lanes_ln, cfg.edge_proj);
    int e = g.concat(g.matmul(b.pair_src(n_l, n_l), proj), g.matmul(b.pair_dst(n_l, n_l), proj), 1);
    out.conn_logits = b.linear("dec.conn_head", g.tanh(b.linear("dec.conn_mlp", e, 32)),
                               scene::kNumConnTypes);
    return out;
}

int charbonnier(Graph& g, int x) { return g.smooth_abs(x, 1e-6); }

// -sum(onehot * log softmax(logits)) / rows
int cross_entropy_mean(Graph& g, int logits, int onehot) {
    int logp = g.log(g.softmax_rows(logits));
    int rows = g.rows(logits);
    return g.scale(g.sum_all(g.mul(logp, onehot)), -1.0 / rows);
}

}  // namespace

Graph& VaeModel::encoder_graph(int n_l, int n_a) {
    std::scoped_lock lk(cache_mu_);
    std::string key = "enc/" + std::to_string(n_l) + "/" + std::to_string(n_a);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    auto g = std::make_unique<Graph>(store_);
    Builder b(*g, cfg_.seed);
    EncoderNodes n = build_encoder(b, cfg_, n_l, n_a);
    g->mark_output("mu_lane", n.mu_lane);
    g->mark_output("lv_lane", n.lv_lane);
    if (n_a > 0) {
        g->mark_output("mu_agent", n.mu_agent);
        g->mark_output("lv_agent", n.lv_agent);
        g->mark_output("gate_mean", n.gate_mean);
    }
    g->mark_output("count_logits", n.count_logits);
    g->mark_output("count_probs", g->softmax_rows(n.count_logits));
    return *cache_.emplace(key, std::move(g)).first->second;
}

Graph& VaeModel::decoder_graph(int n_l, int n_a) {
    std::scoped_lock lk(cache_mu_);
    std::string key = "dec/" + std::to_string(n_l) + "/" + std::to_string(n_a);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    auto g = std::make_unique<Graph>(store_);
    Builder b(*g, cfg_.seed);
    int z_lane = g->input("z_lane", n_l, cfg_.d_lane);
    int z_agent = n_a > 0 ? g->input("z_agent", n_a, cfg_.d_agent) : -1;
    DecoderNodes n = build_decoder(b, cfg_, n_l, n_a, z_lane, z_agent);
    g->mark_output("lane_geom", n.lane_geom);
    if (n_a > 0) {
        g->mark_output("agent_static", n.agent_static);
        g->mark_output("motion", n.motion);
        g->mark_output("type_logits", n.type_logits);
    }
    g->mark_output("conn_logits", n.conn_logits);
    return *cache_.emplace(key, std::move(g)).first->second;
}

Bindings VaeModel::encoder_bindings(const SceneTile& tile, bool partition_masking,
                                    double gate_bias) const {
    FeatureScales s = cfg_.scales();
    int n_l = tile.n_lanes();
    int n_a = tile.n_agents();
    Bindings in;
    in["lane_feat"] = lane_features(tile, s);
    in["l2l_types"] = l2l_type_onehot(tile);
    in["mask_ll"] = block_mask(tile.lane_mask, tile.lane_mask, partition_masking);
    if (n_a > 0) {
        in["agent_static"] = agent_static_features(tile, s);
        in["agent_motion"] = agent_motion_features(tile, cfg_.k_mot);
        in["agent_type"] = agent_type_onehot(tile);
        in["mask_al"] = block_mask(tile.agent_mask, tile.lane_mask, partition_masking);
        in["mask_aa"] = block_mask(tile.agent_mask, tile.agent_mask, partition_masking);
    } else {
        in["agent_static"] = Tensor::zeros(0, 7);
        in["agent_motion"] = Tensor::zeros(0, 2 * cfg_.k_mot);
        in["agent_type"] = Tensor::zeros(0, 3);
    }
    // count query attends conditioned lanes only
    Tensor cmask = Tensor::zeros(1, n_l);
    int cond = 0;
    for (int i = 0; i < n_l; ++i) {
        if (tile.lane_mask[i]) ++cond;
        else cmask.at(0, i) = -1e9;
    }
    in["count_mask"] = cmask;
    in["has_cond"] = Tensor::scalar(cond > 0 ? 1.0 : 0.0);
    in["gate_bias"] = Tensor::scalar(gate_bias);
    return in;
}

Posterior VaeModel::encode(const SceneTile& tile, bool partition_masking, double gate_bias) {
    if (tile.n_lanes() == 0) throw std::runtime_error("VaeModel::encode: empty tile");
    Graph& g = encoder_graph(tile.n_lanes(), tile.n_agents());
    auto r = diff::evaluate(g, encoder_bindings(tile, partition_masking, gate_bias));
    Posterior p;
    p.mu_lane = r.outputs.at("mu_lane");
    p.lv_lane = r.outputs.at("lv_lane");
    if (tile.n_agents() > 0) {
        p.mu_agent = r.outputs.at("mu_agent");
        p.lv_agent = r.outputs.at("lv_agent");
        p.gate_mean = r.outputs.at("gate_mean");
    }
    p.count_probs = r.outputs.at("count_probs");
    return p;
}

Decoded VaeModel::decode(const Tensor& z_lane, const Tensor& z_agent) {
    int n_l = z_lane.rows();
    int n_a = z_agent.rows();
    Graph& g = decoder_graph(n_l, n_a);
    Bindings in{{"z_lane", z_lane}};
    if (n_a > 0) in["z_agent"] = z_agent;
    auto r = diff::evaluate(g, in);
    Decoded d;
    d.lane_geom = r.outputs.at("lane_geom");
    if (n_a > 0) {
        d.agent_static = r.outputs.at("agent_static");
        d.motion = r.outputs.at("motion");
        d.type_logits = r.outputs.at("type_logits");
    }
    d.conn_logits = r.outputs.at("conn_logits");
    return d;
}

Tensor VaeModel::reparameterize(const Tensor& mu, const Tensor& logvar, const Tensor& eps) {
    Tensor z = mu;
    for (size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + std::exp(0.5 * logvar[i]) * eps[i];
    return z;
}

SceneTile VaeModel::decoded_to_tile(const Decoded& d, double fov, int style) const {
    FeatureScales s = cfg_.scales();
    SceneTile tile;
    tile.fov = fov;
    tile.style = style;
    int n_l = d.lane_geom.rows();
    int n_a = d.agent_static.empty() ? 0 : d.agent_static.rows();
    for (int i = 0; i < n_l; ++i) {
        scene::LanePolyline lane;
        lane_row_to_points(d.lane_geom, i, cfg_.lane_points, s, &lane.pts);
        lane.attr = {1.0};
        tile.lanes.push_back(std::move(lane));
    }
    for (int i = 0; i < n_a; ++i) {
        scene::AgentState a = agent_row_to_state(d.agent_static, i, s);
        int best = 0;
        for (int t = 1; t < 3; ++t)
            if (d.type_logits.at(i, t) > d.type_logits.at(i, best)) best = t;
        a.type = static_cast<scene::AgentType>(best);
        tile.agents.push_back(a);
        tile.codes.push_back(motion_row_to_code(d.motion, i, cfg_.k_mot));
    }
    tile.lane_mask.assign(n_l, false);
    tile.agent_mask.assign(n_a, false);

    tile.edges.init(n_l, n_a);
    for (int i = 0; i < n_l; ++i)
        for (int j = 0; j < n_l; ++j) {
            if (i == j) continue;
            int best = 0;
            for (int t = 1; t < scene::kNumConnTypes; ++t)
                if (d.conn_logits.at(i * n_l + j, t) > d.conn_logits.at(i * n_l + j, best)) best = t;
            if (static_cast<ConnType>(best) == ConnType::Self) best = 0;
            tile.edges.set(i, j, static_cast<ConnType>(best));
        }
    // pred/succ antisymmetry, succ decisions take precedence
    for (int i = 0; i < n_l; ++i)
        for (int j = 0; j < n_l; ++j) {
            if (i == j) continue;
            if (tile.edges.get(i, j) == ConnType::Succ) tile.edges.set(j, i, ConnType::Pred);
        }
    return tile;
}

Graph& VaeModel::loss_graph(int n_l, int n_a) {
    std::scoped_lock lk(cache_mu_);
    std::string key = "loss/" + std::to_string(n_l) + "/" + std::to_string(n_a);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
    auto gp = std::make_unique<Graph>(store_);
    Graph& g = *gp;
    Builder b(g, cfg_.seed);

    EncoderNodes enc = build_encoder(b, cfg_, n_l, n_a);

    int eps_lane = g.input("eps_lane", n_l, cfg_.d_lane);
    int z_lane = g.add(enc.mu_lane, g.mul(g.exp(g.scale(enc.lv_lane, 0.5)), eps_lane));
    int z_agent = -1;
    if (n_a > 0) {
        int eps_agent = g.input("eps_agent", n_a, cfg_.d_agent);
        z_agent = g.add(enc.mu_agent, g.mul(g.exp(g.scale(enc.lv_agent, 0.5)), eps_agent));
    }
    DecoderNodes dec = build_decoder(b, cfg_, n_l, n_a, z_lane, z_agent);

    // weights arrive as inputs so tests can scale terms directly
    int w_motion = g.input("w_motion", 1, 1);
    int w_lane = g.input("w_lane", 1, 1);
    int w_conn = g.input("w_conn", 1, 1);
    int w_type = g.input("w_type", 1, 1);
    int w_count = g.input("w_count", 1, 1);
    int w_smooth = g.input("w_smooth", 1, 1);
    int w_coll = g.input("w_coll", 1, 1);
    int w_end = g.input("w_end", 1, 1);
    int beta = g.input("beta", 1, 1);

    int p = cfg_.lane_points;

    // lane reconstruction
    int lane_err = charbonnier(g, g.sub(dec.lane_geom, g.input("lane_feat", n_l, 2 * p)));
    int loss_lane = g.mean_all(lane_err);

    // static / motion / type reconstruction
    int loss_static = -1, loss_motion = -1, loss_type = -1, kl_agent = -1;
    if (n_a > 0) {
        int xy_w = g.input("xy_weight", 1, 7);
        int st_err = charbonnier(g, g.sub(dec.agent_static, g.input("agent_static", n_a, 7)));
        loss_static = g.mean_all(g.mul(st_err, xy_w));

        int static_w = g.input("static_weight", n_a, 1);
        int mot_err = charbonnier(g, g.sub(dec.motion, g.input("agent_motion", n_a, 2 * cfg_.k_mot)));
        loss_motion = g.mean_all(g.mul(mot_err, static_w));

        loss_type = cross_entropy_mean(g, dec.type_logits, g.input("agent_type", n_a, 3));
    }

    // connectivity / count
    int loss_conn = cross_entropy_mean(g, dec.conn_logits, g.input("l2l_types", n_l * n_l, 6));
    int loss_count = cross_entropy_mean(g, enc.count_logits,
                                        g.input("count_target", 1, cfg_.count_max + 1));

    // KL, mean per token
    auto kl_term = [&](int mu, int lv) {
        int t = g.add_scalar(g.sub(g.add(g.square(mu), g.exp(lv)), lv), -1.0);
        return g.scale(g.sum_all(t), 0.5);
    };
    int kl_sum = kl_term(enc.mu_lane, enc.lv_lane);
    if (n_a > 0) {
        kl_agent = kl_term(enc.mu_agent, enc.lv_agent);
        kl_sum = g.add(kl_sum, kl_agent);
    }
    int loss_kl = g.scale(kl_sum, 1.0 / (n_l + std::max(0, n_a)));

    // smoothness: second difference of decoded lane points
    int xs = dec.lane_geom;
    auto second_diff = [&](int c0) {
        int a = g.slice(xs, 0, n_l, c0, c0 + p - 2);
        int m = g.slice(xs, 0, n_l, c0 + 1, c0 + p - 1);
        int c = g.slice(xs, 0, n_l, c0 + 2, c0 + p);
        return g.square(g.add(g.sub(c, g.scale(m, 2.0)), a));
    };
    int loss_smooth = g.mean_all(g.add(second_diff(0), second_diff(p)));

    // collision: smooth hinge on circle-overlap depth of decoded agents
    int loss_coll = -1;
    if (n_a > 1) {
        int pos = g.slice(dec.agent_static, 0, n_a, 0, 2);
        int p1 = g.matmul(b.pair_src(n_a, n_a), pos);
        int p2 = g.matmul(b.pair_dst(n_a, n_a), pos);
        int d2 = g.sum_axis(g.square(g.sub(p1, p2)), 1);
        int dist = g.exp(g.scale(g.log(g.add_scalar(d2, 1e-12)), 0.5));
        int depth = g.sub(g.input("pair_radius", n_a * n_a, 1), dist);
        int hinge = g.scale(g.softplus(g.scale(depth, 10.0)), 0.1);
        int pairw = g.input("pair_weight", n_a * n_a, 1);
        loss_coll = g.mul(g.sum_all(g.mul(hinge, pairw)), g.input("inv_pairs", 1, 1));
    }

    // endpoint: decoded succ-pair endpoint gaps
    int ends = g.concat(g.slice(xs, 0, n_l, p - 1, p), g.slice(xs, 0, n_l, 2 * p - 1, 2 * p), 1);
    int starts = g.concat(g.slice(xs, 0, n_l, 0, 1), g.slice(xs, 0, n_l, p, p + 1), 1);
    int gap = charbonnier(g, g.sub(g.matmul(b.pair_src(n_l, n_l), ends),
                                   g.matmul(b.pair_dst(n_l, n_l), starts)));
    int succ_w = g.input("succ_weight", n_l * n_l, 1);
    int loss_end = g.mul(g.sum_all(g.mul(g.mean_axis(gap, 1), succ_w)), g.input("inv_succ", 1, 1));

    int total = g.add(g.mul(loss_lane, w_lane), g.mul(loss_conn, w_conn));
    total = g.add(total, g.mul(loss_count, w_count));
    total = g.add(total, g.mul(loss_kl, beta));
    total = g.add(total, g.mul(loss_smooth, w_smooth));
    total = g.add(total, g.mul(loss_end, w_end));
    if (n_a > 0) {
        total = g.add(total, loss_static);
        total = g.add(total, g.mul(loss_motion, w_motion));
        total = g.add(total, g.mul(loss_type, w_type));
    }
    if (loss_coll != -1) total = g.add(total, g.mul(loss_coll, w_coll));

    g.mark_output("loss", total);
    g.mark_output("t_lane", loss_lane);
    g.mark_output("t_conn", loss_conn);
    g.mark_output("t_count", loss_count);
    g.mark_output("t_kl", loss_kl);
    g.mark_output("t_smooth", loss_smooth);
    g.mark_output("t_end", loss_end);
    if (n_a > 0) {
        g.mark_output("t_static", loss_static);
        g.mark_output("t_motion", loss_motion);
        g.mark_output("t_type", loss_type);
    }
    if (loss_coll != -1) g.mark_output("t_coll", loss_coll);
    return *cache_.emplace(key, std::move(gp)).first->second;
}

VaeLossBreakdown VaeModel::loss(const SceneTile& tile, bool partition_masking, double beta,
                                const VaeLossWeights& w, Rng& noise_rng, Bindings* grad_out) {
    int n_l = tile.n_lanes();
    int n_a = tile.n_agents();
    Graph& g = loss_graph(n_l, n_a);

    Bindings in = encoder_bindings(tile, partition_masking, 0.0);
    Tensor eps_l = Tensor::zeros(n_l, cfg_.d_lane);
    for (size_t i = 0; i < eps_l.size(); ++i) eps_l[i] = noise_rng.normal();
    in["eps_lane"] = std::move(eps_l);
    if (n_a > 0) {
        Tensor eps_a = Tensor::zeros(n_a, cfg_.d_agent);
        for (size_t i = 0; i < eps_a.size(); ++i) eps_a[i] = noise_rng.normal();
        in["eps_agent"] = std::move(eps_a);

        Tensor xyw = Tensor::zeros(1, 7);
        for (int c = 0; c < 7; ++c) xyw.at(0, c) = c < 2 ? w.xy_extra : 1.0;
        in["xy_weight"] = std::move(xyw);

        Tensor stw = Tensor::zeros(n_a, 1);
        for (int i = 0; i < n_a; ++i)
            stw.at(i, 0) = tile.codes[i].is_static ? w.static_extra : 1.0;
        in["static_weight"] = std::move(stw);
    }
    if (n_a > 1) {
        FeatureScales s = cfg_.scales();
        Tensor pr = Tensor::zeros(n_a * n_a, 1);
        Tensor pw = Tensor::zeros(n_a * n_a, 1);
        int n_pairs = 0;
        for (int i = 0; i < n_a; ++i)
            for (int j = 0; j < n_a; ++j) {
                if (i == j) continue;
                if (tile.agents[i].type != scene::AgentType::Vehicle ||
                    tile.agents[j].type != scene::AgentType::Vehicle)
                    continue;
                pr.at(i * n_a + j, 0) = 0.5 * (tile.agents[i].width + tile.agents[j].width) / s.pos;
                pw.at(i * n_a + j, 0) = 1.0;
                ++n_pairs;
            }
        in["pair_radius"] = std::move(pr);
        in["pair_weight"] = std::move(pw);
        in["inv_pairs"] = Tensor::scalar(n_pairs > 0 ? 1.0 / n_pairs : 0.0);
    }

    int count_target = partition_masking ? scene::count_generated_lanes(tile) : n_l;
    Tensor ct = Tensor::zeros(1, cfg_.count_max + 1);
    ct.at(0, std::min(count_target, cfg_.count_max)) = 1.0;
    in["count_target"] = std::move(ct);

    Tensor sw = Tensor::zeros(n_l * n_l, 1);
    int n_succ = 0;
    for (int i = 0; i < n_l; ++i)
        for (int j = 0; j < n_l; ++j)
            if (tile.edges.get(i, j) == ConnType::Succ) {
                sw.at(i * n_l + j, 0) = 1.0;
                ++n_succ;
            }
    in["succ_weight"] = std::move(sw);
    in["inv_succ"] = Tensor::scalar(n_succ > 0 ? 1.0 / n_succ : 0.0);

    in["w_motion"] = Tensor::scalar(w.motion);
    in["w_lane"] = Tensor::scalar(w.lane);
    in["w_conn"] = Tensor::scalar(w.conn);
    in["w_type"] = Tensor::scalar(w.type);
    in["w_count"] = Tensor::scalar(w.count);
    in["w_smooth"] = Tensor::scalar(w.smooth);
    in["w_coll"] = Tensor::scalar(w.collision);
    in["w_end"] = Tensor::scalar(w.endpoint);
    in["beta"] = Tensor::scalar(beta);

    VaeLossBreakdown out;
    diff::Bindings outputs;
    if (grad_out) {
        auto gr = diff::grad(g, in, "loss");
        out.total = gr.value;
        for (const auto& [name, t] : gr.wrt_params) {
            auto it = grad_out->find(name);
            if (it == grad_out->end()) {
                grad_out->emplace(name, t);
            } else {
                for (size_t i = 0; i < t.size(); ++i) it->second[i] += t[i];
            }
        }
        outputs = std::move(gr.outputs);
    } else {
        auto r = diff::evaluate(g, in);
        out.total = r.outputs.at("loss").item();
        outputs = std::move(r.outputs);
    }
    auto term = [&](const char* k) { return outputs.count(k) ? outputs.at(k).item() : 0.0; };
    out.lane = term("t_lane");
    out.conn = term("t_conn");
    out.count = term("t_count");
    out.kl = term("t_kl");
    out.smooth = term("t_smooth");
    out.endpoint = term("t_end");
    out.statics = term("t_static");
    out.motion = term("t_motion");
    out.type = term("t_type");
    out.collision = term("t_coll");
    return out;
}

std::vector<double> VaeModel::scene_embedding(const SceneTile& tile) {
    Posterior p = encode(tile, false);
    std::vector<double> e(cfg_.d_lane, 0.0);
    int n = p.mu_lane.rows();
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < cfg_.d_lane; ++d) e[d] += p.mu_lane.at(i, d);
    for (auto& v : e) v /= std::max(1, n);
    return e;
}

}  // namespace vw::vae
