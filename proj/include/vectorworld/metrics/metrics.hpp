#pragma once

#include <optional>
#include <vector>

#include "vectorworld/metrics/report.hpp"
#include "vectorworld/scenegraph/types.hpp"

namespace vw::metrics {

using scene::SceneTile;
using scene::Vec2;

// --- Gaussian-moment Fréchet distances --------------------------------------

// cyclic Jacobi for symmetric matrices, row-major n x n
void sym_eig(std::vector<double> a, int n, std::vector<double>& evals,
             std::vector<double>& evecs);

struct FdOptions {
    double eig_clip_tol = -1e-8;   // eigenvalues below this are an error, above are clipped to 0
    double jitter = 1e-6;          // diagonal jitter for singular covariance
};

struct FdResult {
    double fd = 0.0;
    bool jitter_applied = false;
};

// FD = sqrt(max(D_F, 0)) with the product square root taken through a
// symmetric eigendecomposition. Sample covariance uses ddof=1.
FdResult embedding_fd(const std::vector<std::vector<double>>& generated,
                      const std::vector<std::vector<double>>& reference,
                      const FdOptions& opt = {});

double gaussian_fd_1d(double mu1, double var1, double mu2, double var2);

// --- histogram JSD ----------------------------------------------------------

struct HistogramConfig {
    int bins = 50;
    double lo = 0.0;
    double hi = 1.0;
    double scale = 1.0;  // applied to the reported value
};

// natural-log JSD of two normalized histograms; 0*log(0/x) = 0
double jsd_discrete(const std::vector<double>& p, const std::vector<double>& q);

// clip samples to [lo,hi], histogram, normalize, JSD (unscaled)
double histogram_jsd(const std::vector<double>& p_samples, const std::vector<double>& q_samples,
                     const HistogramConfig& cfg);

// --- lane-graph topology ----------------------------------------------------

struct KeypointGraph {
    int n_keypoints = 0;
    std::vector<std::pair<int, int>> edges;  // directed, one per lane
    std::vector<double> weights;             // lane arc lengths
    std::vector<int> degree;                 // undirected incidences
};

KeypointGraph build_keypoint_graph(const SceneTile& tile, double merge_tol = 0.5);

struct TopologyFd {
    double connectivity = 0.0;  // scaled by 10
    double density = 0.0;
    double reach = 0.0;
    double convenience = 0.0;   // scaled by 10
};

TopologyFd topology_fd_suite(const std::vector<SceneTile>& generated,
                             const std::vector<SceneTile>& reference,
                             double merge_tol = 0.5);

// --- per-scene structure metrics --------------------------------------------

// maximum reachable path length from the ego-proximal lane; empty graph
// gives nullopt
std::optional<double> route_length(const SceneTile& tile);

// mean (and spread) gap over directed succ edges
struct EpdResult {
    double mean = 0.0;
    double stddev = 0.0;
    int edges = 0;
};
std::optional<EpdResult> endpoint_distance(const SceneTile& tile);

// circle-approximated oriented boxes, vehicles only, percent
std::optional<double> static_collision_rate(const SceneTile& tile);

std::vector<Vec2> vehicle_circles(const scene::AgentState& a, double* radius);
bool boxes_collide(const scene::AgentState& a, const scene::AgentState& b);

// --- agent distributional JSD suite -----------------------------------------

struct AgentJsdConfig {
    HistogramConfig nearest{50, 0.0, 50.0, 10.0};
    HistogramConfig lateral{50, 0.0, 3.0, 10.0};
    HistogramConfig angular{50, 0.0, M_PI, 100.0};
    HistogramConfig length{50, 0.0, 15.0, 100.0};
    HistogramConfig width{50, 0.0, 4.0, 100.0};
    HistogramConfig speed{50, 0.0, 20.0, 100.0};
    double on_road_dist = 3.0;
};

// six scaled scalars plus their arithmetic mean; degenerate features
// come back null and are excluded from the mean
MetricReport agent_jsd_suite(const std::vector<SceneTile>& generated,
                             const std::vector<SceneTile>& reference,
                             const AgentJsdConfig& cfg = {});

// --- behavior metrics -------------------------------------------------------

// closed-loop displacement error over aligned horizons, moving agents
double ade(const std::vector<std::vector<Vec2>>& simulated,
           const std::vector<std::vector<Vec2>>& reference, int horizon);

// Spearman rank correlation with average ranks on ties; nullopt when a
// side is constant
std::optional<double> spearman_rho(const std::vector<double>& control,
                                   const std::vector<double>& response);

// p95 of |second difference| / dt^2 of a speed series (nearest rank)
double jerk_p95(const std::vector<double>& speed, double dt);

double percentile(std::vector<double> values, double p);

}  // namespace vw::metrics
