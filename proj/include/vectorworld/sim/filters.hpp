#pragma once

#include "vectorworld/scenegraph/types.hpp"

namespace vw::sim {

struct FilterParams {
    double dedupe_tol = 0.5;            // endpoint proximity, m
    double dedupe_len_tol = 0.5;        // arc-length agreement, m
    double offroad_dist = 3.0;          // nearest-lane distance, m
    double offroad_heading = M_PI / 4;  // 45 degrees
    int behavior_points = 50;           // resampling after chain merge
};

struct FilterReport {
    int duplicate_lanes = 0;
    int overlapping_agents = 0;
    int offroad_vehicles = 0;
    int merged_chains = 0;
    bool route_found = false;
    std::vector<int> route_lanes;  // indices into the cleaned tile
};

// Deterministic post-processing, applied in order: lane de-duplication
// (signature + endpoint proximity), overlapping-agent removal via
// oriented-box circle checks, offroad-vehicle removal, degree-2 chain
// merge resampled to the behavior-model point count, route extraction
// (null route allowed).
scene::SceneTile validity_filters(const scene::SceneTile& candidate, const FilterParams& params,
                                  FilterReport* report);

// route extraction alone: follow succ edges from the lane closest to
// the origin, preferring the straightest continuation
std::vector<int> extract_route_lanes(const scene::SceneTile& tile);

}  // namespace vw::sim
