#pragma once

#include <optional>

#include "vectorworld/deltasim/policy.hpp"
#include "vectorworld/dynamics/train.hpp"
#include "vectorworld/sim/filters.hpp"
#include "vectorworld/sim/idm.hpp"
#include "vectorworld/sim/log.hpp"

namespace vw::sim {

using scene::SceneTile;
using scene::SE2;
using scene::Vec2;

struct WorldConfig {
    int k_sim = 400;
    double dt = 0.1;
    double agent_fov = 80.0;          // deactivation box around the ego
    double trigger_dist = 16.0;       // tau
    double tile_half = 32.0;          // R
    double offroute_threshold = 4.0;  // lateral route deviation
    double success_margin = 2.0;
    double target_route_m = 0.0;      // success once reached, when > 0
    uint64_t seed = 0;
};

struct WorldLane {
    int id = 0;
    scene::LanePolyline geom;
};

struct WorldAgent {
    int id = 0;
    scene::AgentState state;
    std::vector<scene::TimedPose> history;  // newest last, window length kContextLen
    scene::MotionCode code;
    bool active = true;
};

class World {
public:
    std::vector<WorldLane> lanes;
    std::vector<std::tuple<int, int, scene::ConnType>> lane_edges;  // by lane id
    std::vector<WorldAgent> agents;
    int ego_index = 0;
    int style = 0;

    std::vector<Vec2> route;
    std::vector<int> route_lane_ids;
    double route_len = 0.0;
    double ego_progress = 0.0;

    SE2 tile_frame;  // +y is the travel direction
    double tile_half = 32.0;
    int k = 0;
    double t_now = 0.0;
    int next_lane_id = 0, next_agent_id = 0;

    WorldAgent& ego() { return agents[ego_index]; }
    const WorldAgent& ego() const { return agents[ego_index]; }
    const WorldLane* lane_by_id(int id) const;
    std::vector<scene::LanePolyline> lane_geoms() const;

    void add_lane(scene::LanePolyline geom);
    void append_route(const std::vector<int>& lane_ids);
    void recompute_progress();
};

// Behavior-facing world from an initial tile: validity filters are
// applied once here (including the degree-2 merge), the route is
// extracted, and the tile frame is oriented travel-up.
World world_from_tile(const SceneTile& tile, const WorldConfig& cfg);

// fills every context window by unrolling motion codes; idempotent
void warm_start(World& world);
void cold_start(World& world);  // repeated current poses, zero speed

bool need_outpaint(const World& world, double trigger);
std::optional<TermCause> check_termination(const World& world, const WorldConfig& cfg);

// --- outpainting -------------------------------------------------------------

struct GeneratorBundle {
    vae::VaeModel* vae = nullptr;
    dit::DitModel* gen = nullptr;
    dyn::LatentStats stats;
    dyn::NoiseSchedule sched = dyn::NoiseSchedule::linear(100);
};

struct OutpaintConfig {
    dyn::Mode mode = dyn::Mode::MeanFlow;
    int k_steps = 1;
    dyn::GuidanceConfig guidance;
    int frontier_agents = 2;
    int max_new_lanes = 10;
    FilterParams filters;
};

// supplies the true continuation scene for the oracle field
using OracleSource = std::function<scene::RawScene(const SE2& tile_frame)>;

OutpaintEvent outpaint_tile(World& world, const GeneratorBundle& bundle,
                            const OutpaintConfig& cfg, const OracleSource* oracle, Rng& rng);

// observation crop of the world into a tile frame (all conditioned)
SceneTile crop_world(const World& world, const SE2& frame, double half, const scene::SceneCaps& caps);

// --- rollout -----------------------------------------------------------------

struct NpcRunner {
    dsim::PolicyModel* model = nullptr;
    dsim::KinematicLimits limits;
    double kappa = 0.0;
    bool deterministic = false;
};

struct RolloutOptions {
    WorldConfig world;
    OutpaintConfig outpaint;
    const GeneratorBundle* bundle = nullptr;  // null disables outpainting
    const OracleSource* oracle = nullptr;
    bool warm = true;
    IdmParams idm;
};

EpisodeLog rollout(World world, const RolloutOptions& opt, NpcRunner* npc, uint64_t seed);

}  // namespace vw::sim
