#include <numeric>
#include <queue>

#include "vectorworld/metrics/metrics.hpp"
#include "vectorworld/scenegraph/ops.hpp"

namespace vw::metrics {

namespace {
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};
}  // namespace

KeypointGraph build_keypoint_graph(const SceneTile& tile, double merge_tol) {
    int n = tile.n_lanes();
    // endpoint instances: 2i = start of lane i, 2i+1 = end of lane i
    UnionFind uf(2 * n);

    for (auto [i, j] : tile.edges.succ_pairs()) uf.unite(2 * i + 1, 2 * j);

    std::vector<Vec2> pos(2 * n);
    for (int i = 0; i < n; ++i) {
        pos[2 * i] = tile.lanes[i].pts.front();
        pos[2 * i + 1] = tile.lanes[i].pts.back();
    }
    for (int a = 0; a < 2 * n; ++a)
        for (int b = a + 1; b < 2 * n; ++b)
            if ((pos[a] - pos[b]).norm() <= merge_tol) uf.unite(a, b);

    std::vector<int> label(2 * n, -1);
    int next = 0;
    for (int a = 0; a < 2 * n; ++a) {
        int r = uf.find(a);
        if (label[r] < 0) label[r] = next++;
        label[a] = label[r];
    }

    KeypointGraph kg;
    kg.n_keypoints = next;
    kg.degree.assign(next, 0);
    for (int i = 0; i < n; ++i) {
        int a = label[2 * i], b = label[2 * i + 1];
        kg.edges.emplace_back(a, b);
        kg.weights.push_back(scene::arc_length(tile.lanes[i].pts));
        kg.degree[a]++;
        kg.degree[b]++;
    }
    return kg;
}

namespace {
struct TopoSamples {
    std::vector<double> degrees, counts, reach, paths;
};

void collect(const SceneTile& tile, double merge_tol, TopoSamples& out) {
    KeypointGraph kg = build_keypoint_graph(tile, merge_tol);
    if (kg.n_keypoints == 0) return;
    for (int d : kg.degree) out.degrees.push_back(static_cast<double>(d));
    out.counts.push_back(static_cast<double>(kg.n_keypoints));

    // directed adjacency
    std::vector<std::vector<std::pair<int, double>>> adj(kg.n_keypoints);
    for (size_t e = 0; e < kg.edges.size(); ++e)
        adj[kg.edges[e].first].emplace_back(kg.edges[e].second, kg.weights[e]);

    for (int s = 0; s < kg.n_keypoints; ++s) {
        // Dijkstra from s
        std::vector<double> dist(kg.n_keypoints, 1e18);
        dist[s] = 0.0;
        std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                            std::greater<>> pq;
        pq.push({0.0, s});
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (d > dist[u]) continue;
            for (auto [v, w] : adj[u]) {
                if (d + w < dist[v]) {
                    dist[v] = d + w;
                    pq.push({dist[v], v});
                }
            }
        }
        int reached = 0;
        for (int v = 0; v < kg.n_keypoints; ++v) {
            if (v == s || dist[v] >= 1e18) continue;
            ++reached;
            out.paths.push_back(dist[v]);
        }
        out.reach.push_back(static_cast<double>(reached));
    }
}

double fd_of(const std::vector<double>& a, const std::vector<double>& b) {
    auto mv = [](const std::vector<double>& x) {
        double mu = 0.0;
        for (double v : x) mu += v;
        mu /= x.empty() ? 1.0 : static_cast<double>(x.size());
        double var = 0.0;
        for (double v : x) var += (v - mu) * (v - mu);
        if (x.size() > 1) var /= static_cast<double>(x.size() - 1);
        return std::make_pair(mu, var);
    };
    if (a.empty() || b.empty()) return 0.0;
    auto [m1, v1] = mv(a);
    auto [m2, v2] = mv(b);
    return gaussian_fd_1d(m1, v1, m2, v2);
}
}  // namespace

TopologyFd topology_fd_suite(const std::vector<SceneTile>& generated,
                             const std::vector<SceneTile>& reference, double merge_tol) {
    TopoSamples g, r;
    for (const auto& t : generated) collect(t, merge_tol, g);
    for (const auto& t : reference) collect(t, merge_tol, r);
    TopologyFd out;
    out.connectivity = 10.0 * fd_of(g.degrees, r.degrees);
    out.density = fd_of(g.counts, r.counts);
    out.reach = fd_of(g.reach, r.reach);
    out.convenience = 10.0 * fd_of(g.paths, r.paths);
    return out;
}

}  // namespace vw::metrics
