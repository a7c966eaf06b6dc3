#pragma once

#include <ostream>

#include "vectorworld/deltasim/policy.hpp"
#include "vectorworld/diffcore/optim.hpp"

namespace vw::dsim {

// per-step rewards for the return-to-go signal: forward progress along
// the nearest lane minus collision and offroad penalties
struct RewardWeights {
    double collision = 10.0;
    double offroad = 2.0;
    double offroad_dist = 3.0;
};

std::vector<double> agent_rewards(const scene::RawScene& scene, int agent,
                                  const RewardWeights& rw);

// body-frame step deltas of every moving or parked vehicle/cyclist
std::vector<Delta> collect_deltas(const std::vector<scene::RawScene>& scenes, int stride);

struct DecisionTable {
    struct Entry {
        int scene = 0, agent = 0, step = 0;
        int token = 0;
        Delta residual;
        int rtg_bin = 0;
    };
    std::vector<Entry> entries;
};

DecisionTable build_decision_table(const std::vector<scene::RawScene>& scenes,
                                   const KDisksVocab& vocab, const RtgConfig& rtg,
                                   const PolicyConfig& cfg, int stride,
                                   const RewardWeights& rw = {});

PolicyContext featurize_decision(const scene::RawScene& scene, const DecisionTable::Entry& e,
                                 const PolicyConfig& cfg);

struct NpcTrainConfig {
    int steps = 2500;
    int batch = 24;
    diff::AdamWConfig opt{6e-5, 0.9, 0.999, 1e-7, 1e-4, 5.0, 200, 0, true};
    PolicyLossWeights weights;
    uint64_t seed = 3;
    int log_every = 500;
};

void train_npc(PolicyModel& model, const std::vector<scene::RawScene>& scenes,
               const DecisionTable& table, const NpcTrainConfig& cfg,
               const KinematicLimits& lim, std::ostream* log);

}  // namespace vw::dsim
