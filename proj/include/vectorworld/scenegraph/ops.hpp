#pragma once

#include <optional>

#include "vectorworld/scenegraph/types.hpp"
#include "vectorworld/util/rng.hpp"

namespace vw::scene {

// --- polylines -------------------------------------------------------------

double arc_length(const std::vector<Vec2>& pts);

// Uniform arc-length resampling; endpoints preserved exactly; a single
// point repeats.
std::vector<Vec2> resample_polyline(const std::vector<Vec2>& pts, int target);

// Split a polyline into maximal pieces inside the closed square
// |x|,|y| <= half, inserting boundary crossings.
std::vector<std::vector<Vec2>> clip_to_square(const std::vector<Vec2>& pts, double half);

// --- motion codes ----------------------------------------------------------

struct StaticThresholds {
    double max_displacement = 0.5;  // meters, strict <
    double mean_speed = 0.2;        // m/s, strict <
};

bool classify_static(const std::vector<TimedPose>& recent, const StaticThresholds& th = {});

MotionCode extract_motion_code(const std::vector<TimedPose>& recent, const SE2& current_pose,
                               int k_mot, const StaticThresholds& th = {});

// Deterministic inverse: de-normalize, re-project via the agent pose,
// timestamp backward from t_now at the simulation step size.
std::vector<TimedPose> unroll_pseudo_history(const MotionCode& code, const AgentState& state,
                                             int context_len, double dt, double t_now);

// --- typed edges -----------------------------------------------------------

struct EdgeThresholds {
    double conn_dist = 0.5;          // endpoint-to-startpoint, meters
    double heading_tol = 15.0 * M_PI / 180.0;
    double adj_lat_min = 2.0;
    double adj_lat_max = 5.0;
};

TypedEdgeSet build_typed_edges(const SceneTile& tile, const EdgeThresholds& th = {});

// --- tiles -----------------------------------------------------------------

// Ego to origin heading +x; closed-FOV crop; deterministic count caps
// (ascending min-distance, then original index). Throws without an ego.
SceneTile normalize_to_ego(const RawScene& raw, const SceneCaps& caps);

// Split lanes crossing y=0; elements entirely at y<=0 are masked true
// (conditioned), the rest false.
SceneTile partition_scene(const SceneTile& tile, const SceneCaps& caps);

// Rigid transform of every lane point and agent pose; motion codes are
// body-frame and stay bit-identical.
SceneTile se2_transform(const SceneTile& tile, const SE2& placement);

int count_generated_lanes(const SceneTile& partitioned);

}  // namespace vw::scene
