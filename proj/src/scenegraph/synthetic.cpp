#include <algorithm>
#include <cmath>

#include "vectorworld/scenegraph/ops.hpp"
#include "vectorworld/scenegraph/synthetic.hpp"

namespace vw::scene {

namespace {

constexpr double kLaneStep = 2.0;     // point spacing before resampling
constexpr double kLaneHalfGap = 1.75; // half lane width

Vec2 rot90(const Vec2& v) { return {-v.y, v.x}; }

struct Road {
    std::vector<Vec2> center;  // dense points, travel direction
};

// chop a dense centerline into lane segments with exactly coincident
// endpoints; returns the segment index range
std::pair<int, int> add_segments(RawScene& scene, const std::vector<Vec2>& center,
                                 int pieces) {
    int first = static_cast<int>(scene.lanes.size());
    size_t n = center.size();
    size_t base = 0;
    for (int p = 0; p < pieces; ++p) {
        size_t end = (n - 1) * (p + 1) / pieces;
        LanePolyline lane;
        for (size_t i = base; i <= end; ++i) lane.pts.push_back(center[i]);
        lane.attr = {1.0};
        scene.lanes.push_back(std::move(lane));
        if (p > 0) scene.succ_pairs.emplace_back(first + p - 1, first + p);
        base = end;
    }
    return {first, static_cast<int>(scene.lanes.size()) - 1};
}

std::vector<Vec2> straight_line(const Vec2& a, const Vec2& b) {
    double len = (b - a).norm();
    int n = std::max(2, static_cast<int>(std::ceil(len / kLaneStep)) + 1);
    std::vector<Vec2> pts(n);
    for (int i = 0; i < n; ++i) pts[i] = a + (b - a) * (static_cast<double>(i) / (n - 1));
    return pts;
}

std::vector<Vec2> bezier(const Vec2& a, const Vec2& ctrl, const Vec2& b, int n = 13) {
    std::vector<Vec2> pts(n);
    for (int i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / (n - 1);
        double u = 1.0 - t;
        pts[i] = a * (u * u) + ctrl * (2.0 * u * t) + b * (t * t);
    }
    pts.front() = a;
    pts.back() = b;
    return pts;
}

// chains of succ-connected lanes an agent can follow
struct Chain {
    std::vector<Vec2> path;
};

std::vector<Chain> build_chains(const RawScene& scene, Rng& rng) {
    int n = static_cast<int>(scene.lanes.size());
    std::vector<std::vector<int>> succ(n);
    std::vector<int> indeg(n, 0);
    for (auto [a, b] : scene.succ_pairs) {
        succ[a].push_back(b);
        indeg[b]++;
    }
    std::vector<Chain> chains;
    for (int s = 0; s < n; ++s) {
        if (indeg[s] != 0) continue;
        Chain c;
        int cur = s;
        while (true) {
            const auto& pts = scene.lanes[cur].pts;
            size_t skip = c.path.empty() ? 0 : 1;  // joins coincide
            c.path.insert(c.path.end(), pts.begin() + skip, pts.end());
            if (succ[cur].empty()) break;
            cur = succ[cur][rng.uniform_int(0, static_cast<int>(succ[cur].size()) - 1)];
        }
        chains.push_back(std::move(c));
    }
    return chains;
}

Vec2 point_at_arc(const std::vector<Vec2>& path, double s, Vec2* tangent_out) {
    double acc = 0.0;
    for (size_t i = 1; i < path.size(); ++i) {
        double seg = (path[i] - path[i - 1]).norm();
        if (acc + seg >= s || i + 1 == path.size()) {
            double u = seg > 0.0 ? std::clamp((s - acc) / seg, 0.0, 1.0) : 0.0;
            if (tangent_out) {
                Vec2 d = path[i] - path[i - 1];
                double dn = d.norm();
                *tangent_out = dn > 1e-12 ? d * (1.0 / dn) : Vec2{1.0, 0.0};
            }
            return path[i - 1] + (path[i] - path[i - 1]) * u;
        }
        acc += seg;
    }
    if (tangent_out) *tangent_out = {1.0, 0.0};
    return path.front();
}

RawAgentTrack track_along_path(const std::vector<Vec2>& path, double s0, double v_base,
                               double phase, const SyntheticParams& p) {
    RawAgentTrack tr;
    tr.states.resize(p.traj_steps);
    tr.current = p.current_index;
    double total = arc_length(path);
    double s = s0;
    for (int k = 0; k < p.traj_steps; ++k) {
        double t = (k - p.current_index) * kSimDt;
        double v = v_base * (1.0 + 0.15 * std::sin(2.0 * M_PI * t / 8.0 + phase));
        if (s >= total - 0.5) v = 0.0;  // hold at the path end
        Vec2 tan;
        Vec2 pos = point_at_arc(path, std::min(s, total), &tan);
        tr.states[k] = {t, pos.x, pos.y, std::atan2(tan.y, tan.x), v};
        s += v * kSimDt;
    }
    // rebuild the history side by walking backwards from s0
    s = s0;
    for (int k = p.current_index; k >= 0; --k) {
        double t = (k - p.current_index) * kSimDt;
        double v = v_base * (1.0 + 0.15 * std::sin(2.0 * M_PI * t / 8.0 + phase));
        Vec2 tan;
        Vec2 pos = point_at_arc(path, std::max(0.0, s), &tan);
        tr.states[k] = {t, pos.x, pos.y, std::atan2(tan.y, tan.x), v};
        if (k > 0) s -= v * kSimDt;
    }
    return tr;
}

RawAgentTrack parked_track(const Vec2& pos, double heading, const SyntheticParams& p) {
    RawAgentTrack tr;
    tr.parked = true;
    tr.states.resize(p.traj_steps);
    tr.current = p.current_index;
    for (int k = 0; k < p.traj_steps; ++k)
        tr.states[k] = {(k - p.current_index) * kSimDt, pos.x, pos.y, heading, 0.0};
    return tr;
}

bool overlaps_existing(const RawScene& scene, const RawAgentTrack& cand) {
    const TimedPose& a = cand.states[cand.current];
    double ra = std::max(cand.length, cand.width) * 0.5 + 1.0;
    for (const auto& other : scene.agents) {
        const TimedPose& b = other.states[other.current];
        double rb = std::max(other.length, other.width) * 0.5 + 1.0;
        if ((a.pos() - b.pos()).norm() < ra + rb) return true;
    }
    return false;
}

void place_agents(RawScene& scene, Rng& rng, const SyntheticParams& p) {
    auto chains = build_chains(scene, rng);
    if (chains.empty()) return;

    int want = rng.uniform_int(p.min_agents, p.max_agents);

    // ego first: a vehicle with room ahead
    for (int attempt = 0; attempt < 32; ++attempt) {
        const Chain& c = chains[rng.uniform_int(0, static_cast<int>(chains.size()) - 1)];
        double total = arc_length(c.path);
        if (total < 50.0) continue;
        double s0 = rng.uniform(5.0, std::max(6.0, total - 45.0));
        double v = rng.uniform(std::max(4.0, p.min_speed), p.max_speed);
        RawAgentTrack tr = track_along_path(c.path, s0, v, rng.uniform(0.0, 2.0 * M_PI), p);
        tr.type = AgentType::Vehicle;
        scene.agents.push_back(std::move(tr));
        scene.ego_index = 0;
        break;
    }
    if (scene.agents.empty()) {
        const Chain& c = chains[0];
        RawAgentTrack tr = track_along_path(c.path, 2.0, p.min_speed, 0.0, p);
        tr.type = AgentType::Vehicle;
        scene.agents.push_back(std::move(tr));
        scene.ego_index = 0;
    }

    for (int i = 0; i < want; ++i) {
        double roll = rng.uniform();
        RawAgentTrack tr;
        if (roll < p.parked_fraction) {
            const Chain& c = chains[rng.uniform_int(0, static_cast<int>(chains.size()) - 1)];
            double s = rng.uniform(3.0, std::max(4.0, arc_length(c.path) - 3.0));
            Vec2 tan;
            Vec2 pos = point_at_arc(c.path, s, &tan);
            Vec2 off = rot90(tan) * (rng.uniform() < 0.5 ? 2.6 : -2.6);
            tr = parked_track(pos + off, std::atan2(tan.y, tan.x), p);
            tr.type = AgentType::Vehicle;
        } else if (roll < p.parked_fraction + p.pedestrian_fraction) {
            const Chain& c = chains[rng.uniform_int(0, static_cast<int>(chains.size()) - 1)];
            double s = rng.uniform(0.0, arc_length(c.path));
            Vec2 tan;
            Vec2 pos = point_at_arc(c.path, s, &tan);
            Vec2 off = rot90(tan) * rng.uniform(4.0, 7.0);
            double walk_h = rng.uniform(0.0, 2.0 * M_PI);
            std::vector<Vec2> walk = straight_line(pos + off,
                                                   pos + off + Vec2{std::cos(walk_h), std::sin(walk_h)} * 20.0);
            tr = track_along_path(walk, 4.0, 1.2, 0.0, p);
            tr.type = AgentType::Pedestrian;
            tr.length = 0.6;
            tr.width = 0.6;
        } else {
            const Chain& c = chains[rng.uniform_int(0, static_cast<int>(chains.size()) - 1)];
            double total = arc_length(c.path);
            double s0 = rng.uniform(2.0, std::max(3.0, total * 0.7));
            bool cyclist = rng.uniform() < p.cyclist_fraction;
            double v = cyclist ? rng.uniform(2.0, 5.0) : rng.uniform(p.min_speed, p.max_speed);
            tr = track_along_path(c.path, s0, v, rng.uniform(0.0, 2.0 * M_PI), p);
            tr.type = cyclist ? AgentType::Cyclist : AgentType::Vehicle;
            if (cyclist) {
                tr.length = 1.8;
                tr.width = 0.6;
            }
        }
        if (!overlaps_existing(scene, tr)) scene.agents.push_back(std::move(tr));
    }
}

void build_straight(RawScene& scene, Rng& rng) {
    double phi = rng.uniform(0.0, 2.0 * M_PI);
    Vec2 dir{std::cos(phi), std::sin(phi)};
    Vec2 n = rot90(dir);
    Vec2 c{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
    Vec2 a = c - dir * 55.0;
    Vec2 b = c + dir * 55.0;
    add_segments(scene, straight_line(a - n * kLaneHalfGap, b - n * kLaneHalfGap), 4);
    add_segments(scene, straight_line(a - n * (kLaneHalfGap + 3.5), b - n * (kLaneHalfGap + 3.5)), 4);
    add_segments(scene, straight_line(b + n * kLaneHalfGap, a + n * kLaneHalfGap), 4);
}

void build_curve(RawScene& scene, Rng& rng) {
    double radius = rng.uniform(35.0, 70.0);
    double span = 100.0 / radius;
    double phi0 = rng.uniform(0.0, 2.0 * M_PI);
    Vec2 center{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
    auto arc_lane = [&](double r, bool reversed) {
        int n = std::max(2, static_cast<int>(std::ceil(r * span / kLaneStep)) + 1);
        std::vector<Vec2> pts(n);
        for (int i = 0; i < n; ++i) {
            double a = phi0 + span * i / (n - 1);
            pts[i] = center + Vec2{std::cos(a), std::sin(a)} * r;
        }
        if (reversed) std::reverse(pts.begin(), pts.end());
        return pts;
    };
    // travel direction is counter-clockwise for the two inner lanes
    add_segments(scene, arc_lane(radius - kLaneHalfGap, false), 4);
    add_segments(scene, arc_lane(radius - kLaneHalfGap - 3.5, false), 4);
    add_segments(scene, arc_lane(radius + kLaneHalfGap, true), 4);
}

void build_intersection(RawScene& scene, Rng& rng, int arms) {
    double phi = rng.uniform(0.0, 2.0 * M_PI);
    Vec2 c{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    double inner = 12.0, outer = 48.0;

    struct Approach {
        int in_last;   // segment id ending at the stop line
        int out_first; // segment id leaving the junction
        Vec2 in_end, out_start, in_dir, out_dir;
    };
    std::vector<Approach> apps;

    for (int k = 0; k < arms; ++k) {
        double a = phi + 2.0 * M_PI * k / arms;
        Vec2 u{std::cos(a), std::sin(a)};       // outward
        Vec2 r = rot90(u);
        Vec2 in_a = c + u * outer - r * kLaneHalfGap;
        Vec2 in_b = c + u * inner - r * kLaneHalfGap;
        Vec2 out_a = c + u * inner + r * kLaneHalfGap;
        Vec2 out_b = c + u * outer + r * kLaneHalfGap;
        auto [in_first, in_last] = add_segments(scene, straight_line(in_a, in_b), 2);
        auto [out_first, out_last] = add_segments(scene, straight_line(out_a, out_b), 2);
        (void)in_first;
        (void)out_last;
        apps.push_back({in_last, out_first, in_b, out_a, u * -1.0, u});
    }

    for (int i = 0; i < arms; ++i) {
        for (int j = 0; j < arms; ++j) {
            if (i == j) continue;  // no U-turns
            const Approach& A = apps[i];
            const Approach& B = apps[j];
            Vec2 ctrl = (A.in_end + B.out_start) * 0.5;
            double cross = A.in_dir.cross(B.out_dir);
            if (std::fabs(cross) > 1e-9) {
                // intersect the entry/exit tangent lines for a natural turn apex
                Vec2 d = B.out_start - A.in_end;
                double t = d.cross(B.out_dir) / cross;
                Vec2 cand = A.in_end + A.in_dir * t;
                if ((cand - c).norm() < inner * 2.5) ctrl = cand;
            }
            LanePolyline conn;
            conn.pts = bezier(A.in_end, ctrl, B.out_start);
            conn.attr = {1.0};
            int id = static_cast<int>(scene.lanes.size());
            scene.lanes.push_back(std::move(conn));
            scene.succ_pairs.emplace_back(A.in_last, id);
            scene.succ_pairs.emplace_back(id, B.out_first);
        }
    }
}

}  // namespace

const char* style_name(int style) {
    switch (style) {
        case 0: return "straight";
        case 1: return "curve";
        case 2: return "3way";
        case 3: return "4way";
    }
    return "straight";
}

RawScene generate_synthetic_scene(uint64_t seed, int style, const SyntheticParams& params) {
    Rng rng = Rng(seed).fork(1000 + static_cast<uint64_t>(style));
    RawScene scene;
    scene.style = style;
    scene.seed = seed;
    switch (style) {
        case 0: build_straight(scene, rng); break;
        case 1: build_curve(scene, rng); break;
        case 2: build_intersection(scene, rng, 3); break;
        case 3: build_intersection(scene, rng, 4); break;
        default: build_straight(scene, rng); break;
    }
    place_agents(scene, rng, params);
    return scene;
}

RawScene generate_corridor_window(uint64_t seed, const SE2& frame, double s_lo, double s_hi,
                                  const SyntheticParams& params) {
    constexpr double kSegLen = 16.0;
    RawScene scene;
    scene.style = 0;
    scene.seed = seed;

    long k_lo = static_cast<long>(std::floor(s_lo / kSegLen));
    long k_hi = static_cast<long>(std::ceil(s_hi / kSegLen));

    auto lane_point = [&](double s, double lat) { return frame.apply({s, lat}); };

    std::vector<int> fwd0_ids, fwd1_ids, rev_ids;
    for (long k = k_lo; k < k_hi; ++k) {
        double a = k * kSegLen, b = (k + 1) * kSegLen;
        for (int li = 0; li < 3; ++li) {
            double lat = li == 0 ? -kLaneHalfGap : (li == 1 ? -kLaneHalfGap - 3.5 : kLaneHalfGap);
            bool reversed = li == 2;
            LanePolyline lane;
            int n = static_cast<int>(kSegLen / kLaneStep) + 1;
            for (int i = 0; i < n; ++i) {
                double s = reversed ? b - (b - a) * i / (n - 1) : a + (b - a) * i / (n - 1);
                lane.pts.push_back(lane_point(s, lat));
            }
            lane.attr = {1.0};
            int id = static_cast<int>(scene.lanes.size());
            scene.lanes.push_back(std::move(lane));
            auto& ids = li == 0 ? fwd0_ids : (li == 1 ? fwd1_ids : rev_ids);
            ids.push_back(id);
        }
    }
    auto link = [&](const std::vector<int>& ids, bool reversed) {
        for (size_t i = 1; i < ids.size(); ++i) {
            if (reversed) scene.succ_pairs.emplace_back(ids[i], ids[i - 1]);
            else scene.succ_pairs.emplace_back(ids[i - 1], ids[i]);
        }
    };
    link(fwd0_ids, false);
    link(fwd1_ids, false);
    link(rev_ids, true);

    // one deterministic vehicle per segment grid slot, sparse
    for (long k = k_lo; k < k_hi; ++k) {
        Rng arng = Rng(seed).fork(7000 + static_cast<uint64_t>(k * 2 + 100000));
        if (arng.uniform() > 0.45) continue;
        double lat = arng.uniform() < 0.5 ? -kLaneHalfGap : -kLaneHalfGap - 3.5;
        double s0 = k * kSegLen + arng.uniform(2.0, kSegLen - 2.0);
        double v = arng.uniform(4.0, 7.5);
        std::vector<Vec2> path = straight_line(lane_point(s0 - 30.0, lat), lane_point(s0 + 80.0, lat));
        RawAgentTrack tr = track_along_path(path, 30.0, v, arng.uniform(0.0, 2.0 * M_PI), params);
        tr.type = AgentType::Vehicle;
        scene.agents.push_back(std::move(tr));
    }
    return scene;
}

}  // namespace vw::scene
