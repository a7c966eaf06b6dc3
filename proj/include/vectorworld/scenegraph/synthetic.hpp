#pragma once

#include "vectorworld/scenegraph/types.hpp"
#include "vectorworld/util/rng.hpp"

namespace vw::scene {

struct SyntheticParams {
    int min_agents = 3;
    int max_agents = 6;
    double parked_fraction = 0.25;
    double cyclist_fraction = 0.12;
    double pedestrian_fraction = 0.08;
    int traj_steps = 121;    // 12 s at 0.1 s
    int current_index = 60;  // history behind, future ahead
    double min_speed = 3.0;
    double max_speed = 9.0;
};

constexpr int kNumStyles = 4;
const char* style_name(int style);  // straight, curve, 3way, 4way

// Deterministic per (seed, style): connected road layouts with exact
// pred/succ endpoint coincidence, lane-aligned kinematically smooth
// agent trajectories, and a parked (static) fraction.
RawScene generate_synthetic_scene(uint64_t seed, int style, const SyntheticParams& params = {});

// Infinite procedural corridor along the +x axis of `frame`, emitted
// as full segments on a fixed global grid so that overlapping windows
// reproduce bit-identical lanes. Used by the streaming oracle tile
// source; agents are spawned per segment.
RawScene generate_corridor_window(uint64_t seed, const SE2& frame, double s_lo, double s_hi,
                                  const SyntheticParams& params = {});

}  // namespace vw::scene
