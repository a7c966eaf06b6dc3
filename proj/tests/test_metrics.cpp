#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vectorworld/metrics/closedloop.hpp"
#include "vectorworld/metrics/metrics.hpp"
#include "vectorworld/scenegraph/ops.hpp"
#include "vectorworld/scenegraph/synthetic.hpp"
#include "vectorworld/util/rng.hpp"

using namespace vw::metrics;
using namespace vw::scene;
using vw::Rng;

namespace {
SceneTile lane_tile(const std::vector<std::vector<Vec2>>& lane_pts) {
    SceneTile t;
    for (const auto& pts : lane_pts) {
        LanePolyline l;
        l.pts = resample_polyline(pts, 5);
        l.attr = {1.0};
        t.lanes.push_back(std::move(l));
    }
    t.lane_mask.assign(t.lanes.size(), false);
    t.edges = build_typed_edges(t);
    return t;
}

AgentState vehicle_at(double x, double y, double heading = 0.0, double speed = 0.0,
                      double len = 4.8, double wid = 2.0) {
    AgentState a;
    a.x = x;
    a.y = y;
    a.set_heading(heading);
    a.speed = speed;
    a.length = len;
    a.width = wid;
    a.type = AgentType::Vehicle;
    return a;
}
}  // namespace

TEST_CASE("embedding_fd: identical sets, point masses, 1D closed form") {
    Rng rng(4);
    std::vector<std::vector<double>> x;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> row(6);
        for (auto& v : row) v = rng.normal();
        x.push_back(row);
    }
    CHECK(embedding_fd(x, x).fd <= 1e-6);

    // point masses: reduces to the mean distance (jitter reported)
    std::vector<std::vector<double>> p(5, {0.0, 0.0}), q(5, {3.0, 4.0});
    auto r = embedding_fd(p, q);
    CHECK(r.jitter_applied);
    CHECK(r.fd == doctest::Approx(5.0).epsilon(1e-3));

    CHECK(gaussian_fd_1d(0.0, 1.0, 0.0, 4.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("jsd: identity, disjoint supports, worked example, symmetry, bounds") {
    std::vector<double> p{0.2, 0.8, 0.0};
    std::vector<double> q{0.0, 0.0, 1.0};
    CHECK(jsd_discrete(p, p) == doctest::Approx(0.0));
    CHECK(jsd_discrete(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(jsd_discrete({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(0.2157).epsilon(1e-3));
    // symmetry and bounds on random distributions
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> a(6), b(6);
        double sa = 0, sb = 0;
        for (int i = 0; i < 6; ++i) {
            a[i] = rng.uniform();
            b[i] = rng.uniform();
            sa += a[i];
            sb += b[i];
        }
        for (int i = 0; i < 6; ++i) {
            a[i] /= sa;
            b[i] /= sb;
        }
        double ab = jsd_discrete(a, b), ba = jsd_discrete(b, a);
        CHECK(ab == ba);
        CHECK(ab >= 0.0);
        CHECK(ab <= std::log(2.0) + 1e-12);
    }
}

TEST_CASE("histogram_jsd: identical samples give zero") {
    Rng rng(9);
    std::vector<double> s;
    for (int i = 0; i < 200; ++i) s.push_back(rng.uniform(0.0, 10.0));
    HistogramConfig cfg{50, 0.0, 10.0, 1.0};
    CHECK(histogram_jsd(s, s, cfg) == doctest::Approx(0.0));
}

TEST_CASE("route_length: single lane, chain, truncation") {
    // single 40 m lane with ego at its start
    SceneTile t1 = lane_tile({{{0, 0}, {40, 0}}});
    CHECK(route_length(t1).value() == doctest::Approx(40.0));

    // chain of two 10 m lanes, ego at the first lane's start
    SceneTile t2 = lane_tile({{{0, 0}, {10, 0}}, {{10, 0}, {20, 0}}});
    REQUIRE(t2.edges.get(0, 1) == ConnType::Succ);
    CHECK(route_length(t2).value() == doctest::Approx(20.0));

    // no successors, ego at the midpoint of a 10 m lane
    SceneTile t3 = lane_tile({{{-5, 0}, {5, 0}}});
    CHECK(route_length(t3).value() == doctest::Approx(5.0));

    SceneTile empty;
    CHECK_FALSE(route_length(empty).has_value());
}

TEST_CASE("endpoint_distance: connected corridor, 3-4-5 gap, null") {
    RawScene raw = generate_synthetic_scene(0, 0);
    SceneTile tile = normalize_to_ego(raw, SceneCaps{});
    auto epd = endpoint_distance(tile);
    REQUIRE(epd.has_value());
    CHECK(epd->mean <= 1e-9);

    SceneTile t = lane_tile({{{-10, 0}, {0, 0}}, {{3, 4}, {13, 4}}});
    t.edges.set(0, 1, ConnType::Succ);  // forced edge with a gap
    auto r = endpoint_distance(t);
    REQUIRE(r.has_value());
    CHECK(r->mean == doctest::Approx(5.0));

    SceneTile none = lane_tile({{{0, 0}, {10, 0}}});
    CHECK_FALSE(endpoint_distance(none).has_value());
}

TEST_CASE("static_collision_rate: coincident, far apart, 2-of-3") {
    SceneTile t;
    t.agents = {vehicle_at(0, 0), vehicle_at(0, 0)};
    CHECK(static_collision_rate(t).value() == doctest::Approx(100.0));

    SceneTile t2;
    t2.agents = {vehicle_at(0, 0), vehicle_at(100, 0)};
    CHECK(static_collision_rate(t2).value() == doctest::Approx(0.0));

    SceneTile t3;
    t3.agents = {vehicle_at(0, 0), vehicle_at(1.0, 0), vehicle_at(50, 0)};
    CHECK(static_collision_rate(t3).value() == doctest::Approx(100.0 * 2.0 / 3.0));

    // ordering invariance
    SceneTile t4 = t3;
    std::swap(t4.agents[0], t4.agents[2]);
    CHECK(static_collision_rate(t4).value() == static_collision_rate(t3).value());
}

TEST_CASE("topology: keypoint merging and self-comparison") {
    // two succ-connected lanes with coincident endpoints: 3 keypoints,
    // middle keypoint degree 2
    SceneTile t = lane_tile({{{0, 0}, {10, 0}}, {{10, 0}, {20, 0}}});
    KeypointGraph kg = build_keypoint_graph(t);
    CHECK(kg.n_keypoints == 3);
    int deg2 = 0;
    for (int d : kg.degree)
        if (d == 2) ++deg2;
    CHECK(deg2 == 1);

    // single isolated lane: 2 keypoints, both degree 1
    SceneTile iso = lane_tile({{{0, 0}, {15, 0}}});
    KeypointGraph kiso = build_keypoint_graph(iso);
    CHECK(kiso.n_keypoints == 2);
    CHECK(kiso.degree[0] == 1);
    CHECK(kiso.degree[1] == 1);

    // reference against itself: all four distances zero
    std::vector<SceneTile> scenes;
    for (uint64_t s = 0; s < 4; ++s)
        scenes.push_back(normalize_to_ego(generate_synthetic_scene(s, s % 4), SceneCaps{}));
    TopologyFd fd = topology_fd_suite(scenes, scenes);
    CHECK(fd.connectivity == doctest::Approx(0.0));
    CHECK(fd.density == doctest::Approx(0.0));
    CHECK(fd.reach == doctest::Approx(0.0));
    CHECK(fd.convenience == doctest::Approx(0.0));
}

TEST_CASE("topology: invariance to lane re-indexing and rigid transforms") {
    std::vector<SceneTile> a, b;
    for (uint64_t s = 10; s < 14; ++s) {
        SceneTile t = normalize_to_ego(generate_synthetic_scene(s, 3), SceneCaps{});
        a.push_back(t);
        SceneTile moved = se2_transform(t, SE2{50.0, -20.0, 1.3});
        std::reverse(moved.lanes.begin(), moved.lanes.end());
        std::reverse(moved.lane_mask.begin(), moved.lane_mask.end());
        moved.edges = build_typed_edges(moved);
        b.push_back(moved);
    }
    TopologyFd fd = topology_fd_suite(a, b);
    CHECK(fd.connectivity <= 1e-6);
    CHECK(fd.density <= 1e-6);
    CHECK(fd.reach <= 1e-6);
    CHECK(fd.convenience <= 1e-4);
}

TEST_CASE("agent_jsd_suite: identity and scaling") {
    std::vector<SceneTile> scenes;
    for (uint64_t s = 0; s < 6; ++s)
        scenes.push_back(normalize_to_ego(generate_synthetic_scene(s, s % 4), SceneCaps{}));
    MetricReport r = agent_jsd_suite(scenes, scenes);
    for (const char* k : {"jsd_nearest", "jsd_lateral", "jsd_angular", "jsd_length", "jsd_width",
                          "jsd_speed", "agent_jsd_mean"}) {
        REQUIRE(r.has(k));
        if (!r.get(k).null) CHECK(r.get(k).value == doctest::Approx(0.0));
    }
    // one-vehicle scenes: nearest-distance is null and excluded
    SceneTile solo;
    solo.agents = {vehicle_at(0, 0, 0, 5.0)};
    LanePolyline l;
    l.pts = resample_polyline({{-10, 0}, {10, 0}}, 5);
    solo.lanes = {l};
    solo.edges = build_typed_edges(solo);
    MetricReport r2 = agent_jsd_suite({solo}, {solo});
    CHECK(r2.get("jsd_nearest").null);
    CHECK_FALSE(r2.get("agent_jsd_mean").null);
}

TEST_CASE("ade: identical, constant offset, linear drift") {
    std::vector<std::vector<Vec2>> a{{{0, 0}, {1, 0}}};
    CHECK(ade(a, a, 2) == doctest::Approx(0.0));
    std::vector<std::vector<Vec2>> b{{{0, 2}, {1, 2}}};
    CHECK(ade(a, b, 2) == doctest::Approx(2.0));
    std::vector<std::vector<Vec2>> c{{{0, 0.5}, {1, 1.0}}};
    CHECK(ade(a, c, 2) == doctest::Approx(0.75));
}

TEST_CASE("spearman: monotone, ties, constant") {
    CHECK(spearman_rho({1, 2, 3, 4}, {2, 5, 9, 11}).value() == doctest::Approx(1.0));
    CHECK(spearman_rho({1, 2, 3, 4}, {9, 7, 4, 1}).value() == doctest::Approx(-1.0));
    CHECK(spearman_rho({1, 2, 3}, {10, 10, 20}).value() == doctest::Approx(0.866).epsilon(1e-3));
    CHECK_FALSE(spearman_rho({1, 2, 3}, {5, 5, 5}).has_value());
}

TEST_CASE("jerk p95 from speed series") {
    CHECK(jerk_p95({3, 3, 3, 3, 3}, 1.0) == doctest::Approx(0.0));
    // speeds (0,0,1,1): accelerations (0,1,0), jerks (1,-1)
    CHECK(jerk_p95({0, 0, 1, 1}, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("closed_loop_report: rates and conservation") {
    std::vector<vw::sim::EpisodeLog> eps(10);
    for (int i = 0; i < 10; ++i) {
        eps[i].cause = i < 4 ? vw::sim::TermCause::Success
                             : (i < 7 ? vw::sim::TermCause::Collision : vw::sim::TermCause::OffRoute);
        eps[i].route_progress = 50.0;
        vw::sim::StepRecord s;
        for (int k = 0; k < 5; ++k) {
            s.k = k;
            s.ego_speed = 5.0;
            eps[i].steps.push_back(s);
        }
    }
    MetricReport r = closed_loop_report(eps, 0.1);
    CHECK(r.get("success_rate").value == doctest::Approx(40.0));
    CHECK(r.get("failure_rate").value == doctest::Approx(60.0));
    double total = r.get("success_rate").value + r.get("collision_rate").value +
                   r.get("offroute_rate").value + r.get("timeout_rate").value;
    CHECK(total == doctest::Approx(100.0));
    CHECK(r.get("jerk_p95_mean").value == doctest::Approx(0.0));
}

TEST_CASE("metric purity: same input twice is bit-identical") {
    std::vector<SceneTile> scenes;
    for (uint64_t s = 0; s < 3; ++s)
        scenes.push_back(normalize_to_ego(generate_synthetic_scene(s, 1), SceneCaps{}));
    TopologyFd f1 = topology_fd_suite(scenes, scenes);
    TopologyFd f2 = topology_fd_suite(scenes, scenes);
    CHECK(f1.connectivity == f2.connectivity);
    CHECK(f1.convenience == f2.convenience);
    auto r1 = route_length(scenes[0]);
    auto r2 = route_length(scenes[0]);
    CHECK(r1.value() == r2.value());
}
