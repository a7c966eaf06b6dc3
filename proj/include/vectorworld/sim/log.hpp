#pragma once

#include <string>
#include <vector>

#include "vectorworld/scenegraph/types.hpp"

namespace vw::sim {

enum class TermCause { Collision = 0, OffRoute = 1, Success = 2, Timeout = 3 };
const char* term_cause_name(TermCause c);

struct AgentRecord {
    int id = 0;
    double x = 0, y = 0, heading = 0, speed = 0;
    int token = -1;       // executed action token, NPCs only
    bool violation = false;
};

struct OutpaintEvent {
    int step = 0;
    double seam_epd = -1.0;  // <0 when no seam succ edges exist
    int new_lanes = 0;
    int new_agents = 0;
    bool failed = false;
};

struct StepRecord {
    int k = 0;
    double ego_x = 0, ego_y = 0, ego_heading = 0, ego_speed = 0;
    std::vector<AgentRecord> agents;
};

struct EpisodeLog {
    std::vector<StepRecord> steps;
    std::vector<OutpaintEvent> outpaints;
    TermCause cause = TermCause::Timeout;
    double route_progress = 0.0;
    double route_length = 0.0;
    long violation_steps = 0;  // NPC decisions violating kinematic limits
    long action_steps = 0;     // NPC decisions total
    long clamp_violations = 0;
    uint64_t seed = 0;

    std::vector<double> ego_speed_series() const {
        std::vector<double> v;
        v.reserve(steps.size());
        for (const auto& s : steps) v.push_back(s.ego_speed);
        return v;
    }
};

// JSON Lines: one record per step plus a trailing summary record.
void write_episode_log(const std::string& path, const EpisodeLog& log);
std::string episode_summary_json(const EpisodeLog& log);

}  // namespace vw::sim
