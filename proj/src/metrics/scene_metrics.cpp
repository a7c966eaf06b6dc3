#include <algorithm>
#include <queue>

#include "vectorworld/metrics/metrics.hpp"
#include "vectorworld/scenegraph/ops.hpp"

namespace vw::metrics {

std::optional<double> route_length(const SceneTile& tile) {
    int n = tile.n_lanes();
    if (n == 0) return std::nullopt;

    // ego-proximal lane and its closest point index; ties to the lowest
    // lane index (then the lowest point index)
    int best_lane = 0, best_pt = 0;
    double best_d = 1e18;
    for (int i = 0; i < n; ++i) {
        for (size_t k = 0; k < tile.lanes[i].pts.size(); ++k) {
            double d = tile.lanes[i].pts[k].norm();
            if (d < best_d - 1e-12) {
                best_d = d;
                best_lane = i;
                best_pt = static_cast<int>(k);
            }
        }
    }

    const auto& start_pts = tile.lanes[best_lane].pts;
    double trunc = 0.0;
    for (size_t k = best_pt + 1; k < start_pts.size(); ++k)
        trunc += (start_pts[k] - start_pts[k - 1]).norm();

    std::vector<std::vector<int>> succ(n);
    for (auto [i, j] : tile.edges.succ_pairs()) succ[i].push_back(j);

    // shortest-path distance where entering lane j costs arc(j); the
    // route length is the maximum over reachable lanes
    std::vector<double> dist(n, 1e18);
    dist[best_lane] = trunc;
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>, std::greater<>>
        pq;
    pq.push({trunc, best_lane});
    double best_total = trunc;
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        best_total = std::max(best_total, d);
        for (int v : succ[u]) {
            double w = scene::arc_length(tile.lanes[v].pts);
            if (d + w < dist[v]) {
                dist[v] = d + w;
                pq.push({dist[v], v});
            }
        }
    }
    return best_total;
}

std::optional<EpdResult> endpoint_distance(const SceneTile& tile) {
    auto pairs = tile.edges.succ_pairs();
    if (pairs.empty()) return std::nullopt;
    EpdResult r;
    r.edges = static_cast<int>(pairs.size());
    std::vector<double> gaps;
    for (auto [i, j] : pairs)
        gaps.push_back((tile.lanes[i].pts.back() - tile.lanes[j].pts.front()).norm());
    for (double g : gaps) r.mean += g;
    r.mean /= gaps.size();
    for (double g : gaps) r.stddev += (g - r.mean) * (g - r.mean);
    r.stddev = std::sqrt(r.stddev / gaps.size());
    return r;
}

std::vector<Vec2> vehicle_circles(const scene::AgentState& a, double* radius) {
    int count = std::max(1, static_cast<int>(std::ceil(a.length / a.width)));
    double r = a.width / 2.0;
    if (radius) *radius = r;
    std::vector<Vec2> centers(count);
    double span = std::max(0.0, a.length - a.width);
    for (int i = 0; i < count; ++i) {
        double lon = count > 1 ? -span / 2.0 + span * i / (count - 1) : 0.0;
        centers[i] = {a.x + lon * a.cos_h, a.y + lon * a.sin_h};
    }
    return centers;
}

bool boxes_collide(const scene::AgentState& a, const scene::AgentState& b) {
    double ra, rb;
    auto ca = vehicle_circles(a, &ra);
    auto cb = vehicle_circles(b, &rb);
    for (const auto& p : ca)
        for (const auto& q : cb)
            if ((p - q).norm() < ra + rb) return true;
    return false;
}

std::optional<double> static_collision_rate(const SceneTile& tile) {
    std::vector<int> vehicles;
    for (int i = 0; i < tile.n_agents(); ++i)
        if (tile.agents[i].type == scene::AgentType::Vehicle) vehicles.push_back(i);
    if (vehicles.empty()) return std::nullopt;
    int colliding = 0;
    for (size_t a = 0; a < vehicles.size(); ++a) {
        bool hit = false;
        for (size_t b = 0; b < vehicles.size() && !hit; ++b) {
            if (a == b) continue;
            hit = boxes_collide(tile.agents[vehicles[a]], tile.agents[vehicles[b]]);
        }
        if (hit) ++colliding;
    }
    return 100.0 * colliding / static_cast<double>(vehicles.size());
}

namespace {
struct AgentFeatures {
    std::vector<double> nearest, lateral, angular, length, width, speed;
};

void nearest_lane_point(const SceneTile& tile, const Vec2& p, double* dist, double* lane_heading) {
    double best = 1e18;
    double heading = 0.0;
    for (const auto& lane : tile.lanes) {
        for (size_t k = 0; k + 1 < lane.pts.size(); ++k) {
            Vec2 a = lane.pts[k], b = lane.pts[k + 1];
            Vec2 d = b - a;
            double len2 = d.dot(d);
            double u = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
            Vec2 q = a + d * u;
            double dd = (p - q).norm();
            if (dd < best) {
                best = dd;
                heading = std::atan2(d.y, d.x);
            }
        }
    }
    *dist = best;
    *lane_heading = heading;
}

void collect_features(const std::vector<SceneTile>& tiles, const AgentJsdConfig& cfg,
                      AgentFeatures& f) {
    for (const auto& tile : tiles) {
        std::vector<int> vehicles;
        for (int i = 0; i < tile.n_agents(); ++i)
            if (tile.agents[i].type == scene::AgentType::Vehicle) vehicles.push_back(i);
        for (size_t a = 0; a < vehicles.size(); ++a) {
            const auto& st = tile.agents[vehicles[a]];
            if (vehicles.size() >= 2) {
                double nd = 1e18;
                for (size_t b = 0; b < vehicles.size(); ++b) {
                    if (a == b) continue;
                    const auto& ot = tile.agents[vehicles[b]];
                    nd = std::min(nd, std::hypot(st.x - ot.x, st.y - ot.y));
                }
                f.nearest.push_back(nd);
            }
            if (tile.n_lanes() > 0) {
                double dist, lane_h;
                nearest_lane_point(tile, {st.x, st.y}, &dist, &lane_h);
                if (dist <= cfg.on_road_dist) {
                    f.lateral.push_back(dist);
                    f.angular.push_back(std::fabs(scene::wrap_angle(st.heading() - lane_h)));
                }
            }
            f.length.push_back(st.length);
            f.width.push_back(st.width);
            f.speed.push_back(st.speed);
        }
    }
}
}  // namespace

MetricReport agent_jsd_suite(const std::vector<SceneTile>& generated,
                             const std::vector<SceneTile>& reference,
                             const AgentJsdConfig& cfg) {
    AgentFeatures g, r;
    collect_features(generated, cfg, g);
    collect_features(reference, cfg, r);

    MetricReport report;
    double sum = 0.0;
    int used = 0;
    auto emit = [&](const char* name, const std::vector<double>& a, const std::vector<double>& b,
                    const HistogramConfig& hc) {
        if (a.empty() || b.empty()) {
            report.add(name, MetricValue::none("no samples on one side"));
            return;
        }
        double v = hc.scale * histogram_jsd(a, b, hc);
        report.add(name, MetricValue::of(v, static_cast<int>(a.size())));
        sum += v;
        ++used;
    };
    emit("jsd_nearest", g.nearest, r.nearest, cfg.nearest);
    emit("jsd_lateral", g.lateral, r.lateral, cfg.lateral);
    emit("jsd_angular", g.angular, r.angular, cfg.angular);
    emit("jsd_length", g.length, r.length, cfg.length);
    emit("jsd_width", g.width, r.width, cfg.width);
    emit("jsd_speed", g.speed, r.speed, cfg.speed);
    if (used > 0)
        report.add("agent_jsd_mean", MetricValue::of(sum / used, used));
    else
        report.add("agent_jsd_mean", MetricValue::none("no usable features"));
    return report;
}

double ade(const std::vector<std::vector<Vec2>>& simulated,
           const std::vector<std::vector<Vec2>>& reference, int horizon) {
    double sum = 0.0;
    long count = 0;
    for (size_t i = 0; i < simulated.size(); ++i) {
        int h = std::min({horizon, static_cast<int>(simulated[i].size()),
                          static_cast<int>(reference[i].size())});
        for (int t = 0; t < h; ++t) {
            sum += (simulated[i][t] - reference[i][t]).norm();
            ++count;
        }
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

namespace {
std::vector<double> average_ranks(const std::vector<double>& x) {
    size_t n = x.size();
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}
}  // namespace

std::optional<double> spearman_rho(const std::vector<double>& control,
                                   const std::vector<double>& response) {
    if (control.size() != response.size() || control.size() < 3) return std::nullopt;
    auto ra = average_ranks(control);
    auto rb = average_ranks(response);
    size_t n = ra.size();
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return std::nullopt;  // constant side
    return cov / std::sqrt(va * vb);
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    size_t idx = static_cast<size_t>(std::ceil(p / 100.0 * values.size()));
    if (idx > 0) --idx;
    return values[std::min(idx, values.size() - 1)];
}

double jerk_p95(const std::vector<double>& speed, double dt) {
    if (speed.size() < 3) return 0.0;
    std::vector<double> jerk;
    for (size_t i = 2; i < speed.size(); ++i)
        jerk.push_back(std::fabs(speed[i] - 2.0 * speed[i - 1] + speed[i - 2]) / (dt * dt));
    return percentile(jerk, 95.0);
}

}  // namespace vw::metrics
