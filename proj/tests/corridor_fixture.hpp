#pragma once

// Shared streaming fixture: an infinite procedural corridor world with
// an injected ego, plus the oracle tile source that reproduces the same
// corridor ahead of any requested tile frame.

#include <functional>

#include "vectorworld/scenegraph/ops.hpp"
#include "vectorworld/scenegraph/synthetic.hpp"
#include "vectorworld/sim/world.hpp"

namespace vw::testing {

struct CorridorFixture {
    scene::SceneTile initial_tile;
    scene::SE2 corridor_in_world;  // corridor frame expressed in world coords
    uint64_t seed = 0;

    sim::OracleSource oracle_source() const {
        scene::SE2 corr = corridor_in_world;
        uint64_t s = seed;
        return [corr, s](const scene::SE2& tile_frame) {
            scene::Vec2 center = corr.inverse().apply({tile_frame.tx, tile_frame.ty});
            return scene::generate_corridor_window(s, corr, center.x - 40.0, center.x + 40.0);
        };
    }
};

inline CorridorFixture make_corridor_fixture(uint64_t seed, double ego_speed = 6.0,
                                             bool include_agents = true) {
    scene::RawScene raw = scene::generate_corridor_window(seed, scene::SE2::identity(), -32.0, 40.0);
    if (!include_agents) raw.agents.clear();

    // inject a deterministic ego on the forward lane
    scene::RawAgentTrack ego;
    ego.type = scene::AgentType::Vehicle;
    int steps = 121, current = 60;
    ego.current = current;
    ego.states.resize(steps);
    for (int k = 0; k < steps; ++k) {
        double t = (k - current) * scene::kSimDt;
        ego.states[k] = {t, -20.0 + ego_speed * t, -1.75, 0.0, ego_speed};
    }
    raw.ego_index = static_cast<int>(raw.agents.size());
    raw.agents.push_back(std::move(ego));

    CorridorFixture fx;
    fx.seed = seed;
    fx.initial_tile = scene::normalize_to_ego(raw, scene::SceneCaps{});
    // the corridor frame was the identity in generator coordinates, so
    // in the ego-normalized world it sits at the inverse ego pose
    fx.corridor_in_world = fx.initial_tile.ego_pose.inverse();
    return fx;
}

}  // namespace vw::testing
