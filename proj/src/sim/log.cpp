#include "vectorworld/sim/log.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace vw::sim {

using nlohmann::json;

const char* term_cause_name(TermCause c) {
    switch (c) {
        case TermCause::Collision: return "collision";
        case TermCause::OffRoute: return "off-route";
        case TermCause::Success: return "success";
        case TermCause::Timeout: return "timeout";
    }
    return "timeout";
}

std::string episode_summary_json(const EpisodeLog& log) {
    json j;
    j["record"] = "summary";
    j["cause"] = term_cause_name(log.cause);
    j["steps"] = log.steps.size();
    j["route_progress"] = log.route_progress;
    j["route_length"] = log.route_length;
    j["violation_steps"] = log.violation_steps;
    j["action_steps"] = log.action_steps;
    j["clamp_violations"] = log.clamp_violations;
    j["seed"] = log.seed;
    json ev = json::array();
    for (const auto& o : log.outpaints) {
        ev.push_back({{"step", o.step},
                      {"seam_epd", o.seam_epd},
                      {"new_lanes", o.new_lanes},
                      {"new_agents", o.new_agents},
                      {"failed", o.failed}});
    }
    j["outpaints"] = std::move(ev);
    return j.dump();
}

void write_episode_log(const std::string& path, const EpisodeLog& log) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_episode_log: cannot open '" + path + "'");
    for (const auto& s : log.steps) {
        json j;
        j["record"] = "step";
        j["k"] = s.k;
        j["ego"] = {s.ego_x, s.ego_y, s.ego_heading, s.ego_speed};
        json agents = json::array();
        for (const auto& a : s.agents)
            agents.push_back({{"id", a.id},
                              {"pose", {a.x, a.y, a.heading, a.speed}},
                              {"token", a.token},
                              {"violation", a.violation}});
        j["agents"] = std::move(agents);
        os << j.dump() << "\n";
    }
    os << episode_summary_json(log) << "\n";
}

}  // namespace vw::sim
