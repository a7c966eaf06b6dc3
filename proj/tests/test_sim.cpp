#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vectorworld/metrics/closedloop.hpp"
#include "vectorworld/scenegraph/synthetic.hpp"
#include "vectorworld/scenegraph/ops.hpp"
#include "vectorworld/sim/world.hpp"

using namespace vw;
using namespace vw::sim;
namespace sg = vw::scene;

namespace {
World straight_world(uint64_t seed = 0) {
    sg::RawScene raw = sg::generate_synthetic_scene(seed, 0);
    sg::SceneTile tile = sg::normalize_to_ego(raw, sg::SceneCaps{});
    WorldConfig cfg;
    return world_from_tile(tile, cfg);
}
}  // namespace

TEST_CASE("idm anchors") {
    IdmParams p;
    CHECK(idm_acceleration(p.v0, std::nullopt, p) == doctest::Approx(0.0));
    CHECK(idm_acceleration(0.0, std::nullopt, p) == doctest::Approx(p.a_max));
    // lead at exactly s* with matched speeds: a = -a_max
    double v = 10.0;
    double s_star = p.s0 + v * p.T;
    CHECK(idm_acceleration(v, Lead{s_star, v}, p) == doctest::Approx(-p.a_max));
}

TEST_CASE("warm start: static scene repeats poses; idempotent") {
    World w = straight_world(3);
    warm_start(w);
    for (const auto& a : w.agents) {
        REQUIRE(a.history.size() == sg::kContextLen);
        if (a.code.is_static) {
            for (const auto& h : a.history) {
                CHECK(h.x == a.state.x);
                CHECK(h.speed == 0.0);
            }
        }
    }
    auto snapshot = w.agents;
    warm_start(w);
    for (size_t i = 0; i < w.agents.size(); ++i)
        for (int k = 0; k < sg::kContextLen; ++k) {
            CHECK(w.agents[i].history[k].x == snapshot[i].history[k].x);
            CHECK(w.agents[i].history[k].y == snapshot[i].history[k].y);
        }
}

TEST_CASE("warm vs cold: step-0 speed discontinuity is smaller warm") {
    World w = straight_world(5);
    int dynamic = 0;
    for (auto& a : w.agents) {
        if (a.code.is_static) continue;
        ++dynamic;
        warm_start(w);
        double implied_warm =
            (scene::Vec2{a.history.back().x, a.history.back().y} -
             scene::Vec2{a.history[a.history.size() - 2].x, a.history[a.history.size() - 2].y})
                .norm() /
            sg::kSimDt;
        cold_start(w);
        double implied_cold =
            (scene::Vec2{a.history.back().x, a.history.back().y} -
             scene::Vec2{a.history[a.history.size() - 2].x, a.history[a.history.size() - 2].y})
                .norm() /
            sg::kSimDt;
        double disc_warm = std::fabs(a.state.speed - implied_warm);
        double disc_cold = std::fabs(a.state.speed - implied_cold);
        CHECK(disc_warm < disc_cold);
    }
    CHECK(dynamic > 0);
}

TEST_CASE("need_outpaint thresholds") {
    World w = straight_world(0);
    // ego starts near the tile center: no trigger at tau=10
    CHECK_FALSE(need_outpaint(w, 10.0));
    // tau = 0 never triggers
    CHECK_FALSE(need_outpaint(w, 0.0));
    // move the ego to 5 m from the forward boundary
    auto& ego = w.ego();
    scene::Vec2 fwd{std::cos(ego.state.heading()), std::sin(ego.state.heading())};
    ego.state.x += fwd.x * (w.tile_half - 5.0);
    ego.state.y += fwd.y * (w.tile_half - 5.0);
    CHECK(need_outpaint(w, 10.0));
}

TEST_CASE("termination priority and causes") {
    World w = straight_world(7);
    WorldConfig cfg;
    cfg.k_sim = 400;

    // timeout when nothing else fires
    w.k = 400;
    auto c = check_termination(w, cfg);
    REQUIRE(c.has_value());
    CHECK(*c == TermCause::Timeout);
    w.k = 0;

    // off-route: teleport the ego away from the route
    World w2 = w;
    w2.ego().state.x += 100.0;
    w2.ego().state.y += 100.0;
    auto c2 = check_termination(w2, cfg);
    REQUIRE(c2.has_value());
    CHECK(*c2 == TermCause::OffRoute);

    // collision wins over everything
    World w3 = w2;
    for (auto& a : w3.agents) {
        if (a.id == w3.ego().id) continue;
        a.state = w3.ego().state;
        a.active = true;
        break;
    }
    auto c3 = check_termination(w3, cfg);
    REQUIRE(c3.has_value());
    CHECK(*c3 == TermCause::Collision);
}

TEST_CASE("validity filters: dedupe, chain merge, offroad, report") {
    sg::SceneTile t;
    sg::LanePolyline a, b, c;
    a.pts = sg::resample_polyline({{0, 0}, {10, 0}}, 5);
    b.pts = a.pts;  // exact duplicate
    c.pts = sg::resample_polyline({{10, 0}, {20, 0}}, 5);
    a.attr = b.attr = c.attr = {1.0};
    t.lanes = {a, b, c};
    t.lane_mask.assign(3, false);
    t.edges = sg::build_typed_edges(t);

    sg::AgentState v1;
    v1.x = 5;
    v1.y = 0;
    sg::AgentState v2 = v1;  // overlapping duplicate
    sg::AgentState far;
    far.x = 5;
    far.y = 50;  // offroad
    t.agents = {v1, v2, far};
    t.codes.resize(3);
    t.agent_mask.assign(3, false);

    FilterParams fp;
    FilterReport rep;
    sg::SceneTile clean = validity_filters(t, fp, &rep);
    CHECK(rep.duplicate_lanes == 1);
    CHECK(rep.overlapping_agents == 1);
    CHECK(rep.offroad_vehicles == 1);
    CHECK(rep.merged_chains == 1);  // a->c merged into one chain
    CHECK(clean.n_lanes() == 1);
    CHECK(clean.lanes[0].pts.size() == static_cast<size_t>(fp.behavior_points));
    CHECK(sg::arc_length(clean.lanes[0].pts) == doctest::Approx(20.0));
    CHECK(clean.n_agents() == 1);
    CHECK(rep.route_found);
}

TEST_CASE("rollout: empty-world guard, straight road, determinism") {
    World w = straight_world(0);
    RolloutOptions opt;
    opt.world.k_sim = 120;

    // terminate immediately at k = K_sim: zero steps
    RolloutOptions opt0 = opt;
    opt0.world.k_sim = 0;
    EpisodeLog l0 = rollout(w, opt0, nullptr, 1);
    CHECK(l0.steps.empty());
    CHECK(l0.cause == TermCause::Timeout);

    // straight pre-built road, IDM ego, no NPC policy, no outpainting
    EpisodeLog l1 = rollout(w, opt, nullptr, 1);
    CHECK(l1.steps.size() > 0);
    CHECK(l1.route_progress > 0.0);

    EpisodeLog l2 = rollout(w, opt, nullptr, 1);
    REQUIRE(l1.steps.size() == l2.steps.size());
    for (size_t i = 0; i < l1.steps.size(); ++i) {
        CHECK(l1.steps[i].ego_x == l2.steps[i].ego_x);
        CHECK(l1.steps[i].ego_speed == l2.steps[i].ego_speed);
    }
    CHECK(l1.cause == l2.cause);
}

TEST_CASE("episode log json round trip sanity") {
    World w = straight_world(2);
    RolloutOptions opt;
    opt.world.k_sim = 30;
    EpisodeLog log = rollout(w, opt, nullptr, 9);
    write_episode_log("episode_test.jsonl", log);
    std::string summary = episode_summary_json(log);
    CHECK(summary.find("\"record\":\"summary\"") != std::string::npos);
    std::remove("episode_test.jsonl");

    vw::metrics::MetricReport rep = vw::metrics::closed_loop_report({log}, opt.world.dt);
    CHECK(rep.get("episodes").value == 1);
}

#include "corridor_fixture.hpp"

#include "vectorworld/dit/model.hpp"
#include "vectorworld/vae/model.hpp"

TEST_CASE("outpaint: oracle field reproduces the continuation; clamps are bit-stable") {
    auto fx = vw::testing::make_corridor_fixture(4, 6.0, false);
    WorldConfig wc;
    wc.k_sim = 2500;
    wc.trigger_dist = 16.0;
    wc.target_route_m = 150.0;
    World w = world_from_tile(fx.initial_tile, wc);
    REQUIRE(w.route_len > 30.0);

    // untrained tiny models: the oracle field bypasses the generator but
    // exercises the full clamp/sample/decode/stitch path
    vae::VaeConfig vcfg;
    vcfg.width = 32;
    vcfg.heads = 2;
    vcfg.blocks = 1;
    vcfg.count_max = 24;
    auto vstore = std::make_shared<vw::diff::ParamStore>();
    vae::VaeModel vmodel(vstore, vcfg);
    dit::DitConfig gcfg;
    gcfg.width = 32;
    gcfg.heads = 2;
    gcfg.blocks = 1;
    gcfg.l2l_repeats = 1;
    auto gstore = std::make_shared<vw::diff::ParamStore>();
    dit::DitModel gmodel(gstore, gcfg);

    GeneratorBundle bundle;
    bundle.vae = &vmodel;
    bundle.gen = &gmodel;
    // identity standardization for the untrained latent space
    bundle.stats.lane_mean = vw::diff::Tensor::zeros(1, vcfg.d_lane);
    bundle.stats.lane_std = vw::diff::Tensor::full(1, vcfg.d_lane, 1.0);
    bundle.stats.agent_mean = vw::diff::Tensor::zeros(1, vcfg.d_agent);
    bundle.stats.agent_std = vw::diff::Tensor::full(1, vcfg.d_agent, 1.0);

    OutpaintConfig oc;
    oc.k_steps = 1;
    oc.frontier_agents = 0;
    auto oracle = fx.oracle_source();

    RolloutOptions opt;
    opt.world = wc;
    opt.outpaint = oc;
    opt.bundle = &bundle;
    opt.oracle = &oracle;

    EpisodeLog log = rollout(w, opt, nullptr, 11);
    CHECK(log.outpaints.size() >= 1);
    CHECK(log.clamp_violations == 0);

    // determinism across two identical runs
    World w2 = world_from_tile(fx.initial_tile, wc);
    EpisodeLog log2 = rollout(w2, opt, nullptr, 11);
    REQUIRE(log.steps.size() == log2.steps.size());
    for (size_t i = 0; i < log.steps.size(); i += 37)
        CHECK(log.steps[i].ego_x == log2.steps[i].ego_x);
    REQUIRE(log.outpaints.size() == log2.outpaints.size());
    for (size_t i = 0; i < log.outpaints.size(); ++i)
        CHECK(log.outpaints[i].seam_epd == log2.outpaints[i].seam_epd);

    // 22 consecutive outpaints driven manually: previously observed lane
    // geometry stays bit-stable throughout
    World wm = world_from_tile(fx.initial_tile, wc);
    warm_start(wm);
    std::vector<std::vector<scene::Vec2>> initial_geo;
    for (const auto& l : wm.lanes) initial_geo.push_back(l.geom.pts);
    Rng orng(90);
    int succeeded = 0;
    for (int it = 0; it < 22; ++it) {
        wm.k = it * 10;
        OutpaintEvent ev = outpaint_tile(wm, bundle, oc, &oracle, orng);
        if (!ev.failed && ev.new_lanes > 0) ++succeeded;
        scene::Vec2 fwd{std::cos(wm.ego().state.heading()), std::sin(wm.ego().state.heading())};
        wm.ego().state.x += fwd.x * wm.tile_half;
        wm.ego().state.y += fwd.y * wm.tile_half;
    }
    CHECK(succeeded >= 20);
    for (size_t i = 0; i < initial_geo.size(); ++i)
        for (size_t p = 0; p < initial_geo[i].size(); ++p) {
            CHECK(wm.lanes[i].geom.pts[p].x == initial_geo[i][p].x);
            CHECK(wm.lanes[i].geom.pts[p].y == initial_geo[i][p].y);
        }

    // the oracle field is exactly integrable: K=1 and K=5 recover the
    // same continuation
    World k1 = world_from_tile(fx.initial_tile, wc);
    World k5 = world_from_tile(fx.initial_tile, wc);
    warm_start(k1);
    warm_start(k5);
    OutpaintConfig oc5 = oc;
    oc5.k_steps = 5;
    Rng r1(91), r5(91);
    OutpaintEvent e1 = outpaint_tile(k1, bundle, oc, &oracle, r1);
    OutpaintEvent e5 = outpaint_tile(k5, bundle, oc5, &oracle, r5);
    REQUIRE_FALSE(e1.failed);
    REQUIRE(e1.new_lanes == e5.new_lanes);
    REQUIRE(k1.lanes.size() == k5.lanes.size());
    double worst = 0.0;
    for (size_t i = 0; i < k1.lanes.size(); ++i)
        for (size_t p = 0; p < k1.lanes[i].geom.pts.size(); ++p)
            worst = std::max(worst, (k1.lanes[i].geom.pts[p] - k5.lanes[i].geom.pts[p]).norm());
    CHECK(worst <= 1e-6);
}
