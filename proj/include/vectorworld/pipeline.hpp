#pragma once

#include <string>

#include "vectorworld/deltasim/train.hpp"
#include "vectorworld/dynamics/train.hpp"
#include "vectorworld/metrics/closedloop.hpp"
#include "vectorworld/metrics/metrics.hpp"
#include "vectorworld/plot/svg.hpp"
#include "vectorworld/scenegraph/io.hpp"
#include "vectorworld/scenegraph/synthetic.hpp"
#include "vectorworld/sim/world.hpp"
#include "vectorworld/util/config.hpp"
#include "vectorworld/vae/train.hpp"

namespace vw::pipeline {

// All run-time knobs resolved from the config file; paths may be
// overridden by VW_DATA_DIR / VW_CKPT_DIR / VW_REPORT_DIR.
struct Paths {
    std::string data_dir = "data";
    std::string ckpt_dir = "ckpts";
    std::string report_dir = "reports";
};

struct Setup {
    Config raw;
    Paths paths;
    uint64_t master_seed = 0;

    int train_scenes = 480;
    int val_scenes = 64;
    scene::SceneCaps caps;            // training-time caps
    scene::SyntheticParams synth;

    vae::VaeConfig vae;
    vae::VaeTrainConfig vae_train;

    dit::DitConfig gen;
    dyn::GenTrainConfig gen_train;

    dsim::PolicyConfig npc;
    dsim::RtgConfig rtg;
    dsim::KinematicLimits limits;
    dsim::NpcTrainConfig npc_train;
    dsim::RewardWeights rewards;
    int npc_stride = 4;

    sim::WorldConfig world;
    sim::OutpaintConfig outpaint;
    sim::IdmParams idm;
    double sample_cfg_scale = 1.0;

    int bench_samples = 24;
};

Setup load_setup(const std::string& config_path);
Setup setup_from_config(const Config& cfg);

// file names inside the configured directories
std::string dataset_tiles(const Setup& s);
std::string dataset_val_tiles(const Setup& s);
std::string dataset_tracks(const Setup& s);
std::string dataset_manifest(const Setup& s);
std::string vae_ckpt(const Setup& s);
std::string gen_ckpt(const Setup& s, dyn::Mode mode);
std::string npc_ckpt(const Setup& s);
std::string vocab_csv(const Setup& s);

// artifact stamping: "<path>.stamp" records config hash + seed
void stamp(const Setup& s, const std::string& artifact);

// the partitioned training variant: rotated a quarter turn so the
// conditioned half (y <= 0) is the region behind the travel direction,
// matching the streaming tile convention
scene::SceneTile partitioned_variant(const scene::SceneTile& tile, const scene::SceneCaps& caps);

// --- commands ---------------------------------------------------------------

void cmd_gen_data(const Setup& s, std::ostream& log);
void cmd_train_vae(const Setup& s, std::ostream& log);
void cmd_train_gen(const Setup& s, dyn::Mode mode, std::ostream& log);
void cmd_train_npc(const Setup& s, std::ostream& log);

struct SampleArgs {
    dyn::Mode mode = dyn::Mode::MeanFlow;
    int k_steps = 1;
    int count = 16;
    double cfg_scale = 1.0;
    std::string out;
};
void cmd_sample(const Setup& s, const SampleArgs& a, std::ostream& log);

struct EvalArgs {
    std::string generated;
    std::string reference;
    bool with_fd = true;
    std::string out_prefix;  // <prefix>.json / .csv
};
metrics::MetricReport cmd_eval(const Setup& s, const EvalArgs& a, std::ostream& log);

struct RolloutArgs {
    int episodes = 8;
    int workers = 2;
    std::string init = "model";  // model | dataset | corridor
    bool oracle_tiles = false;   // corridor-only oracle tile source
    bool streaming = true;
    bool warm = true;
    double kappa = 0.0;
    double lambda = 1.0;
    double target_route_m = 0.0;
    int k_sim = 400;
    std::string out_prefix;
};
metrics::MetricReport cmd_rollout(const Setup& s, const RolloutArgs& a, std::ostream& log,
                                  std::vector<sim::EpisodeLog>* logs_out = nullptr);

struct BenchArgs {
    int samples = 24;
    double cfg_scale = 1.0;
    std::string out_csv;
};
std::vector<plot::SweepRow> cmd_bench(const Setup& s, const BenchArgs& a, std::ostream& log);

void cmd_plot(const Setup& s, const std::string& csv_path, const std::string& svg_path,
              std::ostream& log);

// loaded model bundle for sampling / rollout commands
struct Models {
    std::shared_ptr<diff::ParamStore> vae_store;
    std::unique_ptr<vae::VaeModel> vae;
    std::shared_ptr<diff::ParamStore> gen_store;
    std::unique_ptr<dit::DitModel> gen;
    dyn::LatentStats stats;
    std::shared_ptr<diff::ParamStore> npc_store;
    std::unique_ptr<dsim::PolicyModel> npc;
};
Models load_models(const Setup& s, bool need_gen, bool need_npc);

}  // namespace vw::pipeline
