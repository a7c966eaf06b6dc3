#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fd_oracle.hpp"
#include "vectorworld/deltasim/train.hpp"
#include "vectorworld/scenegraph/synthetic.hpp"

using namespace vw::dsim;
namespace scene = vw::scene;
using vw::Rng;

namespace {
std::vector<Delta> grid_deltas(int n) {
    // distinct deltas spanning plausible one-step motion
    std::vector<Delta> out;
    Rng rng(77);
    out.push_back({0, 0, 0});
    while (static_cast<int>(out.size()) < n) {
        out.push_back({rng.uniform(0.0, 1.2), rng.uniform(-0.15, 0.15), rng.uniform(-0.12, 0.12)});
    }
    return out;
}

PolicyConfig tiny_policy_cfg() {
    PolicyConfig cfg;
    cfg.width = 24;
    cfg.lanes_ctx = 3;
    cfg.p_delta = 10;
    cfg.neighbors_ctx = 3;
    cfg.rtg_bins = 20;
    cfg.rtg_emb = 8;
    cfg.vocab = 16;
    return cfg;
}
}  // namespace

TEST_CASE("build_vocab: fixed point, forced zero row, determinism") {
    auto samples = grid_deltas(384);
    KDisksVocab v1 = build_vocab(samples, 9);
    REQUIRE(v1.size() == 384);
    CHECK(v1[0].dx == 0.0);
    CHECK(v1[0].dy == 0.0);
    CHECK(v1[0].dtheta == 0.0);

    // 384 distinct samples are a fixed point: vocabulary equals them
    int matched = 0;
    for (const auto& s : samples) {
        for (const auto& c : v1.rows)
            if (c.dx == s.dx && c.dy == s.dy && c.dtheta == s.dtheta) {
                ++matched;
                break;
            }
    }
    CHECK(matched == 384);

    KDisksVocab v2 = build_vocab(samples, 9);
    for (int i = 0; i < 384; ++i) {
        CHECK(v1[i].dx == v2[i].dx);
        CHECK(v1[i].dtheta == v2[i].dtheta);
    }

    std::vector<Delta> few(100, {1, 0, 0});
    CHECK_THROWS_AS(build_vocab(few, 1), std::runtime_error);
}

TEST_CASE("vocab csv round trip") {
    auto samples = grid_deltas(384);
    KDisksVocab v = build_vocab(samples, 9);
    save_vocab_csv("vocab_test.csv", v);
    KDisksVocab l = load_vocab_csv("vocab_test.csv");
    REQUIRE(l.size() == v.size());
    for (int i = 0; i < v.size(); ++i) {
        CHECK(l[i].dx == v[i].dx);
        CHECK(l[i].dy == v[i].dy);
        CHECK(l[i].dtheta == v[i].dtheta);
    }
    std::remove("vocab_test.csv");
}

TEST_CASE("tokenize_action: exact row, tie to lowest index, exact round trip") {
    auto samples = grid_deltas(384);
    KDisksVocab v = build_vocab(samples, 9);

    Tokenized t = tokenize_action(v[37], 4.8, 2.0, v);
    CHECK(t.index == 37);
    CHECK(t.residual.dx == 0.0);
    CHECK(t.residual.dy == 0.0);
    CHECK(t.residual.dtheta == 0.0);

    // exact algebraic round trip for arbitrary deltas
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        Delta d{rng.uniform(-0.5, 1.5), rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.2)};
        Tokenized tk = tokenize_action(d, 4.8, 2.0, v);
        CHECK(v[tk.index].dx + tk.residual.dx == doctest::Approx(d.dx).epsilon(1e-15));
        CHECK(v[tk.index].dy + tk.residual.dy == doctest::Approx(d.dy).epsilon(1e-15));
        CHECK(v[tk.index].dtheta + tk.residual.dtheta == doctest::Approx(d.dtheta).epsilon(1e-15));
    }

    // tie break: two identical rows, the lower index wins
    KDisksVocab tie;
    tie.rows = {{0, 0, 0}, {1, 0, 0}, {1, 0, 0}};
    Tokenized tt = tokenize_action({1, 0, 0}, 4.0, 2.0, tie);
    CHECK(tt.index == 1);
}

TEST_CASE("rtg: geometric sums and binning") {
    RtgConfig test_cfg;
    test_cfg.discount = 0.5;
    test_cfg.horizon = 3;
    std::vector<double> ones(10, 1.0);
    auto rtg = rtg_values(ones, test_cfg);
    CHECK(rtg[0] == doctest::Approx(1.75));

    RtgConfig paper;
    std::vector<double> r50(200, 1.0);
    auto rtg2 = rtg_values(r50, paper);
    CHECK(rtg2[0] == doctest::Approx((1.0 - std::pow(0.97, 50)) / 0.03).epsilon(1e-9));

    std::vector<double> zeros(5, 0.0);
    auto rtg3 = rtg_values(zeros, paper);
    CHECK(rtg3[0] == 0.0);
    CHECK(paper.bin_value(paper.bin_of(0.0)) == doctest::Approx(0.0).epsilon(0.2));
}

TEST_CASE("tilt_rtg: identity, limit, worked normalization") {
    std::vector<double> p{0.5, 0.5};
    std::vector<double> vals{0.0, 1.0};
    auto same = tilt_rtg(p, vals, 0.0);
    CHECK(same[0] == doctest::Approx(0.5));

    auto tilted = tilt_rtg(p, vals, std::log(2.0));
    CHECK(tilted[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(tilted[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    auto extreme = tilt_rtg({0.25, 0.5, 0.25, 0.0}, {0, 1, 2, 3}, 200.0);
    CHECK(extreme[2] == doctest::Approx(1.0));  // highest-value bin with p > 0

    // monotonicity of the expectation in kappa over random distributions
    Rng rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = rng.uniform_int(2, 8);
        std::vector<double> q(n), v(n);
        double z = 0;
        for (int i = 0; i < n; ++i) {
            q[i] = rng.uniform() + 1e-9;
            z += q[i];
            v[i] = i;  // ascending values
        }
        for (auto& x : q) x /= z;
        double prev = -1e18;
        for (double kappa : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
            double e = expected_value(tilt_rtg(q, v, kappa), v);
            CHECK(e >= prev - 1e-9);
            prev = e;
        }
    }
}

TEST_CASE("kinematic cost: anchors and host/graph agreement") {
    KDisksVocab v;
    v.rows = {{0.8, 0.0, 0.0},   // straight within limits
              {0.5, 0.05, 0.2},  // 2 rad/s yaw at dt=0.1
              {0.7, 0.7, M_PI / 2}};
    KinematicLimits lim;
    double dt = 0.1;
    TokenKinematics tk = token_kinematics(v, dt);
    CHECK(tk.yaw_rate[1] == doctest::Approx(2.0));
    CHECK(tk.curvature[2] == doctest::Approx(std::fabs(2.0 * std::sin(M_PI / 4)) /
                                             std::hypot(0.7, 0.7)));

    auto cost = kinematic_cost(8.0, v, dt, lim);  // token 0 matches this speed
    CHECK(cost[0] < 0.05);  // softplus tails only

    // graph evaluation matches the host function and differentiates
    auto store = std::make_shared<vw::diff::ParamStore>();
    vw::diff::Graph g(store);
    vw::nn::Builder b(g, 1);
    int c = kinematic_cost_graph(b, "speed", v, dt, lim);
    g.mark_output("cost", c);
    g.mark_output("sum", g.sum_all(c));
    auto r = vw::diff::evaluate(g, {{"speed", vw::diff::Tensor::scalar(8.0)}});
    for (int i = 0; i < v.size(); ++i)
        CHECK(r.outputs.at("cost")[i] == doctest::Approx(cost[i]).epsilon(1e-9));

    auto gr = vw::diff::grad(g, {{"speed", vw::diff::Tensor::scalar(8.0)}}, "sum");
    auto fd = vw::testing::fd_grad_inputs(g, {{"speed", vw::diff::Tensor::scalar(8.0)}}, "sum", 1e-6);
    CHECK(vw::testing::rel_err(gr.wrt_inputs.at("speed"), fd.at("speed")) <= 1e-5);
}

TEST_CASE("shape_logits anchors and shift invariance") {
    std::vector<double> l{0.0, 0.0};
    std::vector<double> c{0.0, 10.0};
    auto unshaped = shape_logits(l, c, 0.0);
    CHECK(unshaped[1] == 0.0);
    auto shaped = shape_logits(l, c, 1.0);
    CHECK(shaped[0] == 0.0);
    CHECK(shaped[1] == -10.0);

    // constant cost: softmax unchanged
    std::vector<double> lc{1.0, 2.0, 3.0};
    std::vector<double> constc{5.0, 5.0, 5.0};
    auto s = shape_logits(lc, constc, 2.0);
    for (size_t i = 0; i < 3; ++i) CHECK(s[i] == lc[i] - 10.0);
}

TEST_CASE("dkal: worked value, shift invariance, non-negativity, zero at alignment") {
    CHECK(dkal_loss({1, -1}, {1, -1}, 1.0) == doctest::Approx(8.0));
    double base = dkal_loss({0.3, -0.7, 1.1}, {2.0, 0.0, -1.0}, 0.5);
    double shifted = dkal_loss({10.3, 9.3, 11.1}, {2.0, 0.0, -1.0}, 0.5);
    CHECK(base == doctest::Approx(shifted).epsilon(1e-12));
    CHECK(base >= 0.0);
    // l = -lambda C (plus constant) zeroes the loss
    CHECK(dkal_loss({-1.0, 0.0, 0.5}, {2.0, 0.0, -1.0}, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("shaping argmax dominance: large lambda selects min-cost tokens") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 16;
        std::vector<double> l(n), c(n);
        for (int i = 0; i < n; ++i) {
            l[i] = rng.normal();
            c[i] = rng.uniform(0.0, 5.0);
        }
        double cmin = *std::min_element(c.begin(), c.end());
        auto shaped = shape_logits(l, c, 1e6);
        int arg = 0;
        for (int i = 1; i < n; ++i)
            if (shaped[i] > shaped[arg]) arg = i;
        CHECK(c[arg] <= cmin + 1e-6);
    }
}

TEST_CASE("policy: single forward per decision, set invariance, determinism") {
    auto store = std::make_shared<vw::diff::ParamStore>();
    PolicyConfig cfg = tiny_policy_cfg();
    auto samples = grid_deltas(cfg.vocab);
    KDisksVocab vocab;
    vocab.rows = samples;
    RtgConfig rtg;
    rtg.bins = cfg.rtg_bins;
    PolicyModel model(store, cfg, vocab, rtg);

    // small scene context
    scene::RawScene raw = scene::generate_synthetic_scene(3, 0);
    scene::AgentState self = raw.agents[0].state_at(raw.agents[0].current);
    std::vector<scene::AgentState> nbs;
    for (size_t i = 1; i < raw.agents.size(); ++i)
        nbs.push_back(raw.agents[i].state_at(raw.agents[i].current));
    std::vector<scene::TimedPose> hist(raw.agents[0].states.begin(),
                                       raw.agents[0].states.begin() + raw.agents[0].current + 1);
    PolicyContext ctx = featurize_context(cfg, raw.lanes, nbs, hist, self);

    long before = model.forward_count();
    PolicyOutput o1 = model.forward(ctx, 0.0);
    CHECK(model.forward_count() == before + 1);

    // valid RTG distribution
    double sum = 0.0;
    for (size_t i = 0; i < o1.rtg_probs.size(); ++i) sum += o1.rtg_probs[i];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    // permuting neighbors leaves the output identical
    if (nbs.size() >= 2) {
        std::swap(nbs[0], nbs[1]);
        PolicyContext ctx2 = featurize_context(cfg, raw.lanes, nbs, hist, self);
        PolicyOutput o2 = model.forward(ctx2, 0.0);
        for (size_t i = 0; i < o1.logits.size(); ++i)
            CHECK(o1.logits[i] == doctest::Approx(o2.logits[i]).epsilon(1e-12));
    }

    PolicyOutput o3 = model.forward(ctx, 0.0);
    for (size_t i = 0; i < o1.logits.size(); ++i) CHECK(o1.logits[i] == o3.logits[i]);

    // kappa = 0 keeps the tilted distribution equal to the raw one
    for (size_t i = 0; i < o1.rtg_probs.size(); ++i)
        CHECK(o1.rtg_probs[i] == doctest::Approx(o1.rtg_probs_tilted[i]).epsilon(1e-12));

    // empty context window is an error
    CHECK_THROWS_AS(featurize_context(cfg, raw.lanes, nbs, {}, self), std::runtime_error);
}

TEST_CASE("policy training loss gradient matches finite differences") {
    auto store = std::make_shared<vw::diff::ParamStore>();
    PolicyConfig cfg = tiny_policy_cfg();
    auto samples = grid_deltas(cfg.vocab);
    KDisksVocab vocab;
    vocab.rows = samples;
    RtgConfig rtg;
    rtg.bins = cfg.rtg_bins;
    PolicyModel model(store, cfg, vocab, rtg);

    scene::RawScene raw = scene::generate_synthetic_scene(5, 0);
    DecisionTable table = build_decision_table({raw}, vocab, rtg, cfg, 7);
    REQUIRE_FALSE(table.entries.empty());
    PolicyContext ctx = featurize_decision(raw, table.entries[0], cfg);
    PolicyTargets t{table.entries[0].token, table.entries[0].residual, table.entries[0].rtg_bin};

    KinematicLimits lim;
    PolicyLossWeights w;
    vw::diff::Bindings grads;
    model.loss_grad(ctx, t, w, 0.1, lim, &grads);

    for (const std::string pname : {"pol.token.w", "pol.film.w", "pol.rtg.w"}) {
        vw::diff::Tensor& p = store->get(pname);
        const vw::diff::Tensor& g = grads.at(pname);
        for (size_t probe = 0; probe < 3; ++probe) {
            size_t i = (probe * 101) % p.size();
            double save = p[i], h = 1e-5;
            p[i] = save + h;
            double fp = model.loss_grad(ctx, t, w, 0.1, lim, nullptr);
            p[i] = save - h;
            double fm = model.loss_grad(ctx, t, w, 0.1, lim, nullptr);
            p[i] = save;
            CHECK(vw::testing::rel_err(g[i], (fp - fm) / (2 * h)) <= 1e-4);
        }
    }
}

TEST_CASE("hybrid_step: alpha=0 pure discrete, zero token keeps pose, argmax mode") {
    PolicyConfig cfg = tiny_policy_cfg();
    auto samples = grid_deltas(cfg.vocab);
    KDisksVocab vocab;
    vocab.rows = samples;

    PolicyOutput out;
    out.logits = vw::diff::Tensor::zeros(1, cfg.vocab);
    out.logits[3] = 50.0;  // dominant token
    out.residual = vw::diff::Tensor(1, 3, {0.1, 0.1, 0.1});
    KinematicLimits lim;
    lim.shaping = 0.0;
    lim.refine = 0.0;  // alpha = 0
    Rng rng(7);
    HybridAction a = hybrid_step(out, vocab, lim, 5.0, 0.1, rng);
    CHECK(a.token == 3);
    CHECK(a.applied.dx == vocab[3].dx);

    // applying the zero token with zero residual keeps the pose
    scene::AgentState st;
    st.x = 4.0;
    st.y = 2.0;
    st.set_heading(0.3);
    scene::AgentState moved = apply_delta(st, {0, 0, 0}, 0.1);
    CHECK(moved.x == doctest::Approx(4.0));
    CHECK(moved.y == doctest::Approx(2.0));
    CHECK(moved.heading() == doctest::Approx(0.3));
    CHECK(moved.speed == 0.0);

    // deterministic mode with one feasible token under huge lambda
    KinematicLimits hard;
    hard.shaping = 1e6;
    out.logits = vw::diff::Tensor::zeros(1, cfg.vocab);
    HybridAction det = hybrid_step(out, vocab, hard, 20.0, 0.1, rng, true);
    auto cost = kinematic_cost(20.0, vocab, 0.1, hard);
    int cheapest = 0;
    for (int i = 1; i < cfg.vocab; ++i)
        if (cost[i] < cost[cheapest]) cheapest = i;
    CHECK(det.token == cheapest);
}
