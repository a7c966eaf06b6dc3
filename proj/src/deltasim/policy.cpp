#include "vectorworld/deltasim/policy.hpp"

#include <algorithm>
#include <cmath>

#include "vectorworld/nn/builders.hpp"
#include "vectorworld/scenegraph/ops.hpp"

namespace vw::dsim {

using diff::Bindings;
using diff::Graph;
using nn::Builder;
using scene::SE2;
using scene::Vec2;

PolicyContext featurize_context(const PolicyConfig& cfg,
                                const std::vector<scene::LanePolyline>& lanes_global,
                                const std::vector<scene::AgentState>& neighbors_global,
                                const std::vector<scene::TimedPose>& own_history,
                                const scene::AgentState& self) {
    if (own_history.empty()) throw std::runtime_error("featurize_context: empty context window");
    PolicyContext ctx;
    ctx.speed = self.speed;
    SE2 inv = self.pose().inverse();

    // nearest lanes, resampled to p_delta points in the body frame
    std::vector<std::pair<double, int>> order;
    for (size_t i = 0; i < lanes_global.size(); ++i) {
        double best = 1e18;
        for (const auto& p : lanes_global[i].pts)
            best = std::min(best, (p - Vec2{self.x, self.y}).norm());
        if (best <= 2.0 * cfg.pos_scale) order.emplace_back(best, static_cast<int>(i));
    }
    std::sort(order.begin(), order.end());

    int lc = 2 * cfg.p_delta + 1;
    ctx.lanes = Tensor::zeros(cfg.lanes_ctx, lc);
    int used_lanes = std::min(cfg.lanes_ctx, static_cast<int>(order.size()));
    for (int r = 0; r < used_lanes; ++r) {
        const auto& lane = lanes_global[order[r].second];
        std::vector<Vec2> body(lane.pts.size());
        for (size_t k = 0; k < lane.pts.size(); ++k) body[k] = inv.apply(lane.pts[k]);
        std::vector<Vec2> rs = scene::resample_polyline(body, cfg.p_delta);
        for (int k = 0; k < cfg.p_delta; ++k) {
            ctx.lanes.at(r, k) = rs[k].x / cfg.pos_scale;
            ctx.lanes.at(r, cfg.p_delta + k) = rs[k].y / cfg.pos_scale;
        }
        ctx.lanes.at(r, lc - 1) = 1.0;
    }
    ctx.inv_lanes = used_lanes > 0 ? 1.0 / used_lanes : 0.0;

    // nearest neighbors
    std::vector<std::pair<double, int>> norder;
    for (size_t i = 0; i < neighbors_global.size(); ++i) {
        double d = std::hypot(neighbors_global[i].x - self.x, neighbors_global[i].y - self.y);
        if (d > 1e-9 && d <= 2.0 * cfg.pos_scale) norder.emplace_back(d, static_cast<int>(i));
    }
    std::sort(norder.begin(), norder.end());
    ctx.neighbors = Tensor::zeros(cfg.neighbors_ctx, 8);
    int used_nb = std::min(cfg.neighbors_ctx, static_cast<int>(norder.size()));
    for (int r = 0; r < used_nb; ++r) {
        const auto& nb = neighbors_global[norder[r].second];
        Vec2 p = inv.apply({nb.x, nb.y});
        double h = scene::wrap_angle(nb.heading() - self.heading());
        ctx.neighbors.at(r, 0) = p.x / cfg.pos_scale;
        ctx.neighbors.at(r, 1) = p.y / cfg.pos_scale;
        ctx.neighbors.at(r, 2) = nb.speed / cfg.speed_scale;
        ctx.neighbors.at(r, 3) = std::cos(h);
        ctx.neighbors.at(r, 4) = std::sin(h);
        ctx.neighbors.at(r, 5) = nb.length / 10.0;
        ctx.neighbors.at(r, 6) = nb.width / 5.0;
        ctx.neighbors.at(r, 7) = 1.0;
    }
    ctx.inv_neighbors = used_nb > 0 ? 1.0 / used_nb : 0.0;

    // own recent window: body-frame (x, y, v) per step, newest last
    ctx.self_feat = Tensor::zeros(1, 3 * cfg.ctx_len + 4);
    int n = static_cast<int>(own_history.size());
    for (int k = 0; k < cfg.ctx_len; ++k) {
        int src = std::max(0, n - cfg.ctx_len + k);
        Vec2 p = inv.apply(own_history[src].pos());
        ctx.self_feat.at(0, 3 * k) = p.x / cfg.pos_scale;
        ctx.self_feat.at(0, 3 * k + 1) = p.y / cfg.pos_scale;
        ctx.self_feat.at(0, 3 * k + 2) = own_history[src].speed / cfg.speed_scale;
    }
    ctx.self_feat.at(0, 3 * cfg.ctx_len + static_cast<int>(self.type)) = 1.0;
    ctx.self_feat.at(0, 3 * cfg.ctx_len + 3) = self.speed / cfg.speed_scale;
    return ctx;
}

PolicyModel::PolicyModel(std::shared_ptr<diff::ParamStore> store, PolicyConfig cfg,
                         KDisksVocab vocab, RtgConfig rtg)
    : cfg_(cfg), vocab_(std::move(vocab)), rtg_(rtg), store_(std::move(store)) {
    forward_graph();
}

namespace {
struct PolicyNodes {
    int logits, rtg_probs, rtg_probs_tilted, residual, hidden;
};

PolicyNodes build_policy(Builder& b, const PolicyConfig& cfg, const RtgConfig& rtg) {
    Graph& g = b.graph();
    int lc = 2 * cfg.p_delta + 1;

    int lanes = g.input("lanes", cfg.lanes_ctx, lc);
    int neighbors = g.input("neighbors", cfg.neighbors_ctx, 8);
    int self_feat = g.input("self_feat", 1, 3 * cfg.ctx_len + 4);
    int inv_lanes = g.input("inv_lanes", 1, 1);
    int inv_nb = g.input("inv_neighbors", 1, 1);
    int kappa = g.input("kappa", 1, 1);

    // permutation-invariant pooling over valid rows
    int lane_valid = g.cols_of(lanes, lc - 1, lc);
    int lane_emb = g.mul(b.mlp2("pol.lane", lanes, cfg.width, cfg.width), lane_valid);
    int lane_pool = g.mul(g.sum_axis(lane_emb, 0), inv_lanes);

    int nb_valid = g.cols_of(neighbors, 7, 8);
    int nb_emb = g.mul(b.mlp2("pol.nb", neighbors, cfg.width, cfg.width), nb_valid);
    int nb_pool = g.mul(g.sum_axis(nb_emb, 0), inv_nb);

    int self_emb = b.mlp2("pol.self", self_feat, cfg.width, cfg.width);

    int trunk_in = g.concat({lane_pool, nb_pool, self_emb}, 1);
    int h = g.tanh(b.linear("pol.trunk1", trunk_in, cfg.width));
    h = g.tanh(b.linear("pol.trunk2", h, cfg.width));

    // single-pass RTG conditioning: predicted distribution -> optional
    // exponential tilt -> soft expectation -> FiLM
    PolicyNodes out{};
    int rtg_logits = b.linear("pol.rtg", h, rtg.bins);
    out.rtg_probs = g.softmax_rows(rtg_logits);
    Tensor vals = Tensor::zeros(1, rtg.bins);
    for (int j = 0; j < rtg.bins; ++j) vals[j] = rtg.bin_value(j);
    int tilted_logits = g.add(rtg_logits, g.mul(kappa, g.constant(vals)));
    out.rtg_probs_tilted = g.softmax_rows(tilted_logits);

    int emb_table = b.param("pol.rtg_emb", rtg.bins, cfg.rtg_emb);
    int soft_e = g.matmul(out.rtg_probs_tilted, emb_table);
    int film = b.linear("pol.film", g.tanh(soft_e), 2 * cfg.width);
    int gamma = g.cols_of(film, 0, cfg.width);
    int beta = g.cols_of(film, cfg.width, 2 * cfg.width);
    int mod = g.add(g.mul(h, g.add_scalar(gamma, 1.0)), beta);
    out.hidden = mod;

    out.logits = b.linear("pol.token", mod, cfg.vocab);
    out.residual = g.scale(g.tanh(b.linear("pol.residual", mod, 3)), 0.5);
    return out;
}
}  // namespace

Graph& PolicyModel::forward_graph() {
    std::scoped_lock lk(cache_mu_);
    auto it = cache_.find("fwd");
    if (it != cache_.end()) return *it->second;
    auto g = std::make_unique<Graph>(store_);
    Builder b(*g, cfg_.seed);
    PolicyNodes n = build_policy(b, cfg_, rtg_);
    g->mark_output("logits", n.logits);
    g->mark_output("rtg_probs", n.rtg_probs);
    g->mark_output("rtg_probs_tilted", n.rtg_probs_tilted);
    g->mark_output("residual", n.residual);
    return *cache_.emplace("fwd", std::move(g)).first->second;
}

Graph& PolicyModel::train_graph(const KinematicLimits& lim, double dt) {
    std::scoped_lock lk(cache_mu_);
    auto it = cache_.find("train");
    if (it != cache_.end()) return *it->second;
    auto gp = std::make_unique<Graph>(store_);
    Graph& g = *gp;
    Builder b(g, cfg_.seed);
    PolicyNodes n = build_policy(b, cfg_, rtg_);

    int token_onehot = g.input("token_onehot", 1, cfg_.vocab);
    int rtg_onehot = g.input("rtg_onehot", 1, rtg_.bins);
    int res_target = g.input("res_target", 1, 3);
    int w_res = g.input("w_res", 1, 1);
    int w_rtg = g.input("w_rtg", 1, 1);
    int w_dkal = g.input("w_dkal", 1, 1);
    int lambda_dkal = g.input("lambda_dkal", 1, 1);

    int ce_token = g.scale(g.sum_all(g.mul(g.log(g.softmax_rows(n.logits)), token_onehot)), -1.0);
    // the RTG head is supervised pre-tilt
    int ce_rtg = g.scale(g.sum_all(g.mul(g.log(n.rtg_probs), rtg_onehot)), -1.0);
    int res_err = g.sum_all(g.smooth_abs(g.sub(n.residual, res_target), 1e-6));

    // DKAL on raw logits against the speed-dependent differentiable cost
    int cost = kinematic_cost_graph(b, "speed", vocab_, dt, lim);
    int ctr_l = g.sub(n.logits, g.mean_axis(n.logits, 1));
    int ctr_c = g.sub(cost, g.mean_axis(cost, 1));
    int dkal = g.sum_all(g.square(g.add(ctr_l, g.mul(lambda_dkal, ctr_c))));

    int total = g.add(ce_token, g.mul(res_err, w_res));
    total = g.add(total, g.mul(ce_rtg, w_rtg));
    total = g.add(total, g.mul(dkal, w_dkal));
    g.mark_output("loss", total);
    g.mark_output("ce_token", ce_token);
    g.mark_output("ce_rtg", ce_rtg);
    g.mark_output("res_err", res_err);
    g.mark_output("dkal", dkal);
    g.mark_output("cost_row", cost);
    return *cache_.emplace("train", std::move(gp)).first->second;
}

Bindings PolicyModel::bindings(const PolicyContext& ctx, double kappa) const {
    Bindings in;
    in["lanes"] = ctx.lanes;
    in["neighbors"] = ctx.neighbors;
    in["self_feat"] = ctx.self_feat;
    in["inv_lanes"] = Tensor::scalar(ctx.inv_lanes);
    in["inv_neighbors"] = Tensor::scalar(ctx.inv_neighbors);
    in["kappa"] = Tensor::scalar(kappa);
    return in;
}

PolicyOutput PolicyModel::forward(const PolicyContext& ctx, double kappa) {
    Graph& g = forward_graph();
    auto r = diff::evaluate(g, bindings(ctx, kappa));
    ++forward_count_;
    PolicyOutput out;
    out.logits = r.outputs.at("logits");
    out.rtg_probs = r.outputs.at("rtg_probs");
    out.rtg_probs_tilted = r.outputs.at("rtg_probs_tilted");
    out.residual = r.outputs.at("residual");
    return out;
}

double PolicyModel::loss_grad(const PolicyContext& ctx, const PolicyTargets& targets,
                              const PolicyLossWeights& w, double dt, const KinematicLimits& lim,
                              diff::Bindings* grad_accum) {
    Graph& g = train_graph(lim, dt);
    Bindings in = bindings(ctx, 0.0);
    Tensor th = Tensor::zeros(1, cfg_.vocab);
    th[targets.token] = 1.0;
    in["token_onehot"] = std::move(th);
    Tensor rh = Tensor::zeros(1, rtg_.bins);
    rh[targets.rtg_bin] = 1.0;
    in["rtg_onehot"] = std::move(rh);
    in["res_target"] = Tensor(1, 3, {targets.residual.dx, targets.residual.dy,
                                     targets.residual.dtheta});
    in["w_res"] = Tensor::scalar(w.residual);
    in["w_rtg"] = Tensor::scalar(w.rtg);
    in["w_dkal"] = Tensor::scalar(w.dkal);
    in["lambda_dkal"] = Tensor::scalar(lim.dkal);
    in["speed"] = Tensor::scalar(ctx.speed);

    if (!grad_accum) {
        auto r = diff::evaluate(g, in);
        return r.outputs.at("loss").item();
    }
    auto gr = diff::grad(g, in, "loss");
    for (const auto& [name, t] : gr.wrt_params) {
        auto it = grad_accum->find(name);
        if (it == grad_accum->end()) grad_accum->emplace(name, t);
        else
            for (size_t i = 0; i < t.size(); ++i) it->second[i] += t[i];
    }
    return gr.value;
}

HybridAction hybrid_step(const PolicyOutput& out, const KDisksVocab& vocab,
                         const KinematicLimits& lim, double speed, double dt, Rng& rng,
                         bool deterministic) {
    std::vector<double> logits(out.logits.values());
    std::vector<double> cost = kinematic_cost(speed, vocab, dt, lim);
    std::vector<double> shaped = shape_logits(logits, cost, lim.shaping);

    // softmax over shaped logits
    double m = shaped[0];
    for (double v : shaped) m = std::max(m, v);
    std::vector<double> p(shaped.size());
    double z = 0.0;
    for (size_t i = 0; i < shaped.size(); ++i) {
        p[i] = std::exp(shaped[i] - m);
        z += p[i];
    }
    for (auto& v : p) v /= z;

    HybridAction a;
    if (deterministic) {
        a.token = 0;
        for (size_t i = 1; i < p.size(); ++i)
            if (p[i] > p[a.token]) a.token = static_cast<int>(i);
    } else {
        double u = rng.uniform();
        double acc = 0.0;
        a.token = static_cast<int>(p.size()) - 1;
        for (size_t i = 0; i < p.size(); ++i) {
            acc += p[i];
            if (u < acc) {
                a.token = static_cast<int>(i);
                break;
            }
        }
    }
    const Delta& base = vocab[a.token];
    a.applied = {base.dx + lim.refine * out.residual[0], base.dy + lim.refine * out.residual[1],
                 base.dtheta + lim.refine * out.residual[2]};
    return a;
}

scene::AgentState apply_delta(const scene::AgentState& state, const Delta& d, double dt) {
    SE2 next = state.pose().compose(SE2{d.dx, d.dy, d.dtheta});
    scene::AgentState out = state;
    out.x = next.tx;
    out.y = next.ty;
    out.set_heading(next.theta);
    out.speed = std::hypot(d.dx, d.dy) / dt;
    return out;
}

}  // namespace vw::dsim
