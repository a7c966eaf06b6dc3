#pragma once

#include <string>
#include <vector>

#include "vectorworld/scenegraph/se2.hpp"

namespace vw::scene {

enum class AgentType { Vehicle = 0, Pedestrian = 1, Cyclist = 2 };

const char* agent_type_name(AgentType t);
AgentType agent_type_from_name(const std::string& s);

// Unified 7-dim state [x, y, speed, cos h, sin h, length, width].
struct AgentState {
    double x = 0, y = 0, speed = 0, cos_h = 1, sin_h = 0, length = 4.8, width = 2.0;
    AgentType type = AgentType::Vehicle;

    double heading() const { return std::atan2(sin_h, cos_h); }
    SE2 pose() const { return {x, y, heading()}; }
    void set_heading(double h) { cos_h = std::cos(h); sin_h = std::sin(h); }
};

// Body-frame polyline of the recent path, normalized to [-1,1]; all
// zero when the agent is static.
struct MotionCode {
    std::vector<Vec2> points;
    bool is_static = true;

    bool all_zero() const {
        for (const auto& p : points)
            if (p.x != 0.0 || p.y != 0.0) return false;
        return true;
    }
};

struct LanePolyline {
    std::vector<Vec2> pts;
    std::vector<double> attr;  // semantic placeholder (constant on this corpus)
};

enum class ConnType { None = 0, Pred = 1, Succ = 2, Left = 3, Right = 4, Self = 5 };
constexpr int kNumConnTypes = 6;

// Complete directed lane-to-lane relation with one type per ordered
// pair; a2a and l2a/a2l relations are complete and implicit.
struct TypedEdgeSet {
    int n_lanes = 0;
    int n_agents = 0;
    std::vector<ConnType> l2l;  // n_lanes^2, row-major (src, dst)

    void init(int lanes, int agents) {
        n_lanes = lanes;
        n_agents = agents;
        l2l.assign(static_cast<size_t>(lanes) * lanes, ConnType::None);
        for (int i = 0; i < lanes; ++i) set(i, i, ConnType::Self);
    }
    ConnType get(int i, int j) const { return l2l[static_cast<size_t>(i) * n_lanes + j]; }
    void set(int i, int j, ConnType t) { l2l[static_cast<size_t>(i) * n_lanes + j] = t; }

    std::vector<std::pair<int, int>> succ_pairs() const;
};

struct TimedPose {
    double t = 0, x = 0, y = 0, heading = 0, speed = 0;
    Vec2 pos() const { return {x, y}; }
};

// One ego-centric tile; mask convention: true = conditioned / clamped.
struct SceneTile {
    std::vector<LanePolyline> lanes;
    std::vector<AgentState> agents;
    std::vector<MotionCode> codes;  // parallel to agents
    TypedEdgeSet edges;
    std::vector<bool> lane_mask;
    std::vector<bool> agent_mask;
    SE2 ego_pose;  // tile frame expressed in the global frame
    double fov = 64.0;
    int ego_index = -1;
    int style = 0;

    int n_lanes() const { return static_cast<int>(lanes.size()); }
    int n_agents() const { return static_cast<int>(agents.size()); }
};

// Generator output: full trajectories in a global frame.
struct RawAgentTrack {
    AgentType type = AgentType::Vehicle;
    double length = 4.8, width = 2.0;
    std::vector<TimedPose> states;
    int current = 0;  // index of "now"
    bool parked = false;

    const TimedPose& now() const { return states[current]; }
    AgentState state_at(int idx) const;
};

struct RawScene {
    std::vector<LanePolyline> lanes;
    std::vector<std::pair<int, int>> succ_pairs;  // construction ground truth
    std::vector<RawAgentTrack> agents;
    int ego_index = -1;
    int style = 0;
    uint64_t seed = 0;
};

// representation caps and defaults
struct SceneCaps {
    int max_lanes = 100;
    int max_agents = 30;
    int lane_points = 20;  // P
    int k_mot = 4;
    double fov = 64.0;
};

constexpr double kSimDt = 0.1;
constexpr int kContextLen = 13;      // (len-1) divisible by (k_mot-1)
constexpr double kMotionArcMax = 12.0;  // longitudinal window D, meters
constexpr double kMotionLatMax = 6.0;   // lateral window Y, meters

}  // namespace vw::scene
