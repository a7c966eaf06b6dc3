#include "vectorworld/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <omp.h>

#include "vectorworld/diffcore/checkpoint.hpp"
#include "vectorworld/scenegraph/ops.hpp"
#include "vectorworld/scenegraph/synthetic.hpp"

namespace vw::pipeline {

namespace fs = std::filesystem;
using scene::SceneTile;

Setup load_setup(const std::string& config_path) {
    return setup_from_config(Config::from_file(config_path));
}

Setup setup_from_config(const Config& cfg) {
    Setup s;
    s.raw = cfg;
    s.paths.data_dir = cfg.get_str("paths.data_dir", "data");
    s.paths.ckpt_dir = cfg.get_str("paths.ckpt_dir", "ckpts");
    s.paths.report_dir = cfg.get_str("paths.report_dir", "reports");
    if (const char* e = std::getenv("VW_DATA_DIR")) s.paths.data_dir = e;
    if (const char* e = std::getenv("VW_CKPT_DIR")) s.paths.ckpt_dir = e;
    if (const char* e = std::getenv("VW_REPORT_DIR")) s.paths.report_dir = e;

    s.master_seed = cfg.get_u64("run.seed", 0);
    s.train_scenes = cfg.get_int("data.train_scenes", 480);
    s.val_scenes = cfg.get_int("data.val_scenes", 64);
    s.caps.max_lanes = cfg.get_int("data.cap_lanes", 16);
    s.caps.max_agents = cfg.get_int("data.cap_agents", 7);
    s.caps.lane_points = cfg.get_int("vae.lane_points", 20);
    s.caps.k_mot = cfg.get_int("vae.k_mot", 4);
    s.caps.fov = cfg.get_double("scene.fov", 64.0);
    s.synth.min_agents = cfg.get_int("data.min_agents", 3);
    s.synth.max_agents = cfg.get_int("data.max_agents", 6);
    s.synth.parked_fraction = cfg.get_double("data.parked_fraction", 0.25);

    s.vae.width = cfg.get_int("vae.width", 64);
    s.vae.blocks = cfg.get_int("vae.blocks", 2);
    s.vae.heads = cfg.get_int("vae.heads", 4);
    s.vae.edge_proj = cfg.get_int("vae.edge_proj", 8);
    s.vae.d_lane = cfg.get_int("vae.d_lane", 24);
    s.vae.d_agent = cfg.get_int("vae.d_agent", 18);
    s.vae.lane_points = s.caps.lane_points;
    s.vae.k_mot = s.caps.k_mot;
    s.vae.count_max = cfg.get_int("vae.count_max", 100);
    s.vae.fov = s.caps.fov;
    s.vae.seed = s.master_seed + 101;

    s.vae_train.steps = cfg.get_int("vae.steps", 2600);
    s.vae_train.batch = cfg.get_int("vae.batch", 8);
    s.vae_train.opt.lr = cfg.get_double("vae.lr", 1e-4);
    s.vae_train.opt.weight_decay = cfg.get_double("vae.weight_decay", 2e-5);
    s.vae_train.opt.grad_clip = cfg.get_double("vae.grad_clip", 10.0);
    s.vae_train.opt.warmup_steps = cfg.get_int("vae.warmup", 200);
    s.vae_train.opt.linear_decay = true;
    s.vae_train.beta_final = cfg.get_double("vae.beta", 0.1);
    s.vae_train.partition_fraction = cfg.get_double("vae.partition_fraction", 0.5);
    s.vae_train.weights.motion = cfg.get_double("vae.w_motion", 1.0);
    s.vae_train.weights.lane = cfg.get_double("vae.w_lane", 1.0);
    s.vae_train.weights.conn = cfg.get_double("vae.w_conn", 1.0);
    s.vae_train.weights.type = cfg.get_double("vae.w_type", 1.0);
    s.vae_train.weights.count = cfg.get_double("vae.w_count", 0.5);
    s.vae_train.weights.smooth = cfg.get_double("vae.w_smooth", 0.1);
    s.vae_train.weights.collision = cfg.get_double("vae.w_collision", 0.1);
    s.vae_train.weights.endpoint = cfg.get_double("vae.w_endpoint", 0.1);
    s.vae_train.seed = s.master_seed + 11;

    s.gen.width = cfg.get_int("gen.width", 64);
    s.gen.blocks = cfg.get_int("gen.blocks", 2);
    s.gen.heads = cfg.get_int("gen.heads", 4);
    s.gen.edge_proj = cfg.get_int("gen.edge_proj", 8);
    s.gen.l2l_repeats = cfg.get_int("gen.l2l_repeats", 2);
    s.gen.d_lane = s.vae.d_lane;
    s.gen.d_agent = s.vae.d_agent;
    s.gen.time_freqs = cfg.get_int("gen.time_freqs", 8);
    s.gen.relational = cfg.get_bool("gen.relational", true);
    s.gen.cross_type_bias = cfg.get_bool("gen.cross_type_bias", true);
    s.gen.global_fusion = cfg.get_bool("gen.global_fusion", true);
    s.gen.seed = s.master_seed + 202;

    s.gen_train.mode = dyn::mode_from_string(cfg.get_str("gen.mode", "meanflow"));
    s.gen_train.steps = cfg.get_int("gen.steps", 2400);
    s.gen_train.batch = cfg.get_int("gen.batch", 6);
    s.gen_train.opt.lr = cfg.get_double("gen.lr", 1e-4);
    s.gen_train.opt.weight_decay = cfg.get_double("gen.weight_decay", 1e-5);
    s.gen_train.opt.grad_clip = cfg.get_double("gen.grad_clip", 10.0);
    s.gen_train.opt.warmup_steps = cfg.get_int("gen.warmup", 200);
    s.gen_train.times.frac_r_eq_t = cfg.get_double("gen.frac_r_eq_t", 0.25);
    s.gen_train.times.frac_one_zero = cfg.get_double("gen.frac_one_zero", 0.1);
    s.gen_train.adaptive.enabled = cfg.get_bool("gen.adaptive", true);
    s.gen_train.adaptive.p = cfg.get_double("gen.adaptive_p", 0.8);
    s.gen_train.adaptive.c = cfg.get_double("gen.adaptive_c", 1e-3);
    s.gen_train.label_dropout = cfg.get_double("gen.label_dropout", 0.1);
    s.gen_train.partition_fraction = cfg.get_double("gen.partition_fraction", 0.5);
    s.gen_train.ddpm_steps = cfg.get_int("gen.ddpm_steps", 100);
    s.gen_train.seed = s.master_seed + 22;

    s.npc.width = cfg.get_int("npc.width", 64);
    s.npc.lanes_ctx = cfg.get_int("npc.lanes_ctx", 6);
    s.npc.p_delta = cfg.get_int("npc.p_delta", 50);
    s.npc.neighbors_ctx = cfg.get_int("npc.neighbors_ctx", 6);
    s.npc.rtg_bins = cfg.get_int("npc.rtg_bins", 350);
    s.npc.rtg_emb = cfg.get_int("npc.rtg_emb", 16);
    s.npc.pos_scale = cfg.get_double("sim.agent_fov", 80.0) / 2.0;
    s.npc.seed = s.master_seed + 303;

    s.rtg.bins = s.npc.rtg_bins;
    s.rtg.discount = cfg.get_double("npc.rtg_discount", 0.97);
    s.rtg.horizon = cfg.get_int("npc.rtg_horizon", 50);
    s.rtg.value_lo = cfg.get_double("npc.rtg_lo", -30.0);
    s.rtg.value_hi = cfg.get_double("npc.rtg_hi", 40.0);

    s.limits.yaw_rate = cfg.get_double("npc.max_yaw_rate", 1.0);
    s.limits.curvature = cfg.get_double("npc.max_curvature", 0.3);
    s.limits.lat_accel = cfg.get_double("npc.max_lat_accel", 4.0);
    s.limits.lon_accel = cfg.get_double("npc.max_lon_accel", 3.0);
    s.limits.shaping = cfg.get_double("npc.lambda", 1.0);
    s.limits.dkal = cfg.get_double("npc.lambda_dkal", 0.1);
    s.limits.refine = cfg.get_double("npc.alpha", 1.0);

    s.npc_train.steps = cfg.get_int("npc.steps", 1800);
    s.npc_train.batch = cfg.get_int("npc.batch", 24);
    s.npc_train.opt.lr = cfg.get_double("npc.lr", 6e-5);
    s.npc_train.opt.weight_decay = cfg.get_double("npc.weight_decay", 1e-4);
    s.npc_train.opt.grad_clip = cfg.get_double("npc.grad_clip", 5.0);
    s.npc_train.opt.warmup_steps = cfg.get_int("npc.warmup", 150);
    s.npc_train.weights.residual = cfg.get_double("npc.w_residual", 1.0);
    s.npc_train.weights.rtg = cfg.get_double("npc.w_rtg", 0.25);
    s.npc_train.weights.dkal = cfg.get_double("npc.w_dkal", 0.1);
    s.npc_train.seed = s.master_seed + 33;
    s.npc_stride = cfg.get_int("npc.stride", 4);

    s.world.k_sim = cfg.get_int("sim.k_sim", 400);
    s.world.dt = cfg.get_double("sim.dt", 0.1);
    s.world.agent_fov = cfg.get_double("sim.agent_fov", 80.0);
    s.world.trigger_dist = cfg.get_double("sim.trigger", 16.0);
    s.world.tile_half = cfg.get_double("sim.tile_half", 32.0);
    s.world.offroute_threshold = cfg.get_double("sim.offroute", 4.0);

    s.outpaint.mode = dyn::mode_from_string(cfg.get_str("sim.outpaint_mode", "meanflow"));
    s.outpaint.k_steps = cfg.get_int("sim.outpaint_steps", 1);
    s.outpaint.guidance.scale = cfg.get_double("sim.outpaint_cfg_scale", 1.0);
    s.outpaint.frontier_agents = cfg.get_int("sim.frontier_agents", 2);
    s.outpaint.max_new_lanes = cfg.get_int("sim.max_new_lanes", 10);

    s.idm.v0 = cfg.get_double("sim.idm_v0", 10.0);
    s.idm.T = cfg.get_double("sim.idm_T", 1.5);
    s.idm.a_max = cfg.get_double("sim.idm_a", 2.0);
    s.idm.b = cfg.get_double("sim.idm_b", 3.0);
    s.idm.s0 = cfg.get_double("sim.idm_s0", 2.0);

    s.sample_cfg_scale = cfg.get_double("gen.cfg_scale", 4.0);
    s.bench_samples = cfg.get_int("bench.samples", 24);
    return s;
}

std::string dataset_tiles(const Setup& s) { return s.paths.data_dir + "/scenes.jsonl"; }
std::string dataset_val_tiles(const Setup& s) { return s.paths.data_dir + "/scenes_val.jsonl"; }
std::string dataset_tracks(const Setup& s) { return s.paths.data_dir + "/tracks.jsonl"; }
std::string dataset_manifest(const Setup& s) { return s.paths.data_dir + "/manifest.jsonl"; }
std::string vae_ckpt(const Setup& s) { return s.paths.ckpt_dir + "/vae.ckpt"; }
std::string gen_ckpt(const Setup& s, dyn::Mode mode) {
    return s.paths.ckpt_dir + "/gen_" + std::string(dyn::mode_name(mode)) + ".ckpt";
}
std::string npc_ckpt(const Setup& s) { return s.paths.ckpt_dir + "/npc.ckpt"; }
std::string vocab_csv(const Setup& s) { return s.paths.ckpt_dir + "/vocab.csv"; }

void stamp(const Setup& s, const std::string& artifact) {
    nlohmann::json j{{"config_hash", s.raw.hash()}, {"seed", s.master_seed}};
    std::ofstream os(artifact + ".stamp");
    os << j.dump() << "\n";
}

SceneTile partitioned_variant(const SceneTile& tile, const scene::SceneCaps& caps) {
    return scene::partition_scene(scene::se2_transform(tile, scene::SE2{0, 0, M_PI / 2}), caps);
}

void cmd_gen_data(const Setup& s, std::ostream& log) {
    fs::create_directories(s.paths.data_dir);
    std::vector<SceneTile> train, val;
    std::vector<scene::RawScene> raws;
    std::vector<scene::ManifestEntry> manifest;
    int total = s.train_scenes + s.val_scenes;
    for (int i = 0; i < total; ++i) {
        uint64_t seed = s.master_seed * 1000003ULL + i;
        int style = i % scene::kNumStyles;
        scene::RawScene raw = scene::generate_synthetic_scene(seed, style, s.synth);
        SceneTile tile = scene::normalize_to_ego(raw, s.caps);
        if (i < s.train_scenes) {
            train.push_back(tile);
            raws.push_back(std::move(raw));
        } else {
            val.push_back(tile);
        }
        manifest.push_back({i, seed, style});
    }
    scene::write_tiles(dataset_tiles(s), train);
    scene::write_tiles(dataset_val_tiles(s), val);
    scene::write_raw_scenes(dataset_tracks(s), raws);
    scene::write_manifest(dataset_manifest(s), manifest);
    stamp(s, dataset_tiles(s));
    stamp(s, dataset_val_tiles(s));
    stamp(s, dataset_tracks(s));
    log << "gen-data: " << train.size() << " train tiles, " << val.size() << " val tiles -> "
        << s.paths.data_dir << "\n";
}

void cmd_train_vae(const Setup& s, std::ostream& log) {
    auto tiles = scene::read_tiles(dataset_tiles(s));
    auto store = std::make_shared<diff::ParamStore>();
    vae::VaeModel model(store, s.vae);
    vae::train_vae(model, tiles, s.vae_train, &log);
    fs::create_directories(s.paths.ckpt_dir);
    diff::save_checkpoint(vae_ckpt(s), *store);
    stamp(s, vae_ckpt(s));
    auto val = scene::read_tiles(dataset_val_tiles(s));
    vae::VaeValidation v = vae::validate_vae(model, val);
    log << "train-vae: static L1 " << v.static_l1 << "  motion L1 " << v.motion_l1 << "  lane L1 "
        << v.lane_l1 << "\n";
    log << "train-vae: gate mean dynamic " << v.gate_dynamic_mean << " vs static "
        << v.gate_static_mean << "\n";
}

void cmd_train_gen(const Setup& s, dyn::Mode mode, std::ostream& log) {
    auto tiles = scene::read_tiles(dataset_tiles(s));
    auto vstore = diff::load_checkpoint(vae_ckpt(s));
    vae::VaeModel vmodel(vstore, s.vae);

    auto gstore = std::make_shared<diff::ParamStore>();
    dit::DitModel gmodel(gstore, s.gen);
    dyn::LatentStats stats = dyn::compute_latent_stats(vmodel, tiles);
    dyn::store_latent_stats(*gstore, stats);

    dyn::GenTrainConfig cfg = s.gen_train;
    cfg.mode = mode;
    dyn::train_generator(gmodel, vmodel, tiles, cfg, &log);
    fs::create_directories(s.paths.ckpt_dir);
    diff::save_checkpoint(gen_ckpt(s, mode), *gstore);
    stamp(s, gen_ckpt(s, mode));
    log << "train-gen: saved " << gen_ckpt(s, mode) << "\n";
}

void cmd_train_npc(const Setup& s, std::ostream& log) {
    auto raws = scene::read_raw_scenes(dataset_tracks(s));
    auto deltas = dsim::collect_deltas(raws, s.npc_stride);
    dsim::KDisksVocab vocab = dsim::build_vocab(deltas, s.master_seed + 77);
    fs::create_directories(s.paths.ckpt_dir);
    dsim::save_vocab_csv(vocab_csv(s), vocab);
    stamp(s, vocab_csv(s));

    dsim::DecisionTable table =
        dsim::build_decision_table(raws, vocab, s.rtg, s.npc, s.npc_stride, s.rewards);
    log << "train-npc: " << table.entries.size() << " decisions, vocab " << vocab.size() << "\n";
    auto store = std::make_shared<diff::ParamStore>();
    dsim::PolicyModel model(store, s.npc, vocab, s.rtg);
    dsim::train_npc(model, raws, table, s.npc_train, s.limits, &log);
    diff::save_checkpoint(npc_ckpt(s), *store);
    stamp(s, npc_ckpt(s));
    log << "train-npc: saved " << npc_ckpt(s) << "\n";
}

Models load_models(const Setup& s, bool need_gen, bool need_npc) {
    Models m;
    m.vae_store = diff::load_checkpoint(vae_ckpt(s));
    m.vae = std::make_unique<vae::VaeModel>(m.vae_store, s.vae);
    if (need_gen) {
        m.gen_store = diff::load_checkpoint(gen_ckpt(s, s.gen_train.mode));
        m.gen = std::make_unique<dit::DitModel>(m.gen_store, s.gen);
        m.stats = dyn::load_latent_stats(*m.gen_store);
    }
    if (need_npc) {
        m.npc_store = diff::load_checkpoint(npc_ckpt(s));
        dsim::KDisksVocab vocab = dsim::load_vocab_csv(vocab_csv(s));
        m.npc = std::make_unique<dsim::PolicyModel>(m.npc_store, s.npc, vocab, s.rtg);
    }
    return m;
}

namespace {
struct TileShape {
    int n_l, n_a, style;
};

std::vector<TileShape> shapes_from_tiles(const std::vector<SceneTile>& tiles) {
    std::vector<TileShape> out;
    for (const auto& t : tiles)
        if (t.n_lanes() > 0) out.push_back({t.n_lanes(), t.n_agents(), t.style});
    return out;
}
}  // namespace

void cmd_sample(const Setup& s, const SampleArgs& a, std::ostream& log) {
    Models m = load_models(s, true, false);
    auto ref = scene::read_tiles(dataset_tiles(s));
    auto shapes = shapes_from_tiles(ref);
    if (shapes.empty()) throw std::runtime_error("sample: empty reference dataset");
    dyn::NoiseSchedule sched = dyn::NoiseSchedule::linear(s.gen_train.ddpm_steps);
    dyn::GuidanceConfig guidance{a.cfg_scale, s.gen_train.label_dropout};

    std::vector<SceneTile> out;
    Rng rng(s.master_seed + 909);
    for (int i = 0; i < a.count; ++i) {
        const TileShape& sh = shapes[rng.uniform_int(0, static_cast<int>(shapes.size()) - 1)];
        int k = a.mode == dyn::Mode::Ddpm ? sched.steps : a.k_steps;
        dyn::SampledTile st = dyn::sample_initial_tile(*m.gen, *m.vae, m.stats, a.mode, k, &sched,
                                                       sh.n_l, sh.n_a, sh.style, guidance, rng);
        out.push_back(std::move(st.tile));
    }
    std::string path = a.out.empty() ? s.paths.report_dir + "/samples.jsonl" : a.out;
    fs::create_directories(fs::path(path).parent_path().string().empty()
                               ? "."
                               : fs::path(path).parent_path().string());
    scene::write_tiles(path, out);
    stamp(s, path);
    log << "sample: wrote " << out.size() << " tiles to " << path << "\n";
}

metrics::MetricReport cmd_eval(const Setup& s, const EvalArgs& a, std::ostream& log) {
    auto gen = scene::read_tiles(a.generated);
    auto ref = scene::read_tiles(a.reference);
    metrics::MetricReport report;

    if (a.with_fd) {
        auto vstore = diff::load_checkpoint(vae_ckpt(s));
        vae::VaeModel vmodel(vstore, s.vae);
        std::vector<std::vector<double>> ge, re;
        for (const auto& t : gen)
            if (t.n_lanes() > 0) ge.push_back(vmodel.scene_embedding(t));
        for (const auto& t : ref)
            if (t.n_lanes() > 0) re.push_back(vmodel.scene_embedding(t));
        if (ge.size() >= 2 && re.size() >= 2) {
            auto fd = metrics::embedding_fd(ge, re);
            metrics::MetricValue v = metrics::MetricValue::of(fd.fd, static_cast<int>(ge.size()));
            if (fd.jitter_applied) v.reason = "diagonal jitter applied";
            report.add("fd_internal", v);
        } else {
            report.add("fd_internal", metrics::MetricValue::none("need >= 2 scenes per side"));
        }
    }

    double rl_sum = 0, rl_sq = 0;
    int rl_n = 0;
    double epd_sum = 0;
    int epd_n = 0;
    double coll_sum = 0;
    int coll_n = 0;
    for (const auto& t : gen) {
        if (auto rl = metrics::route_length(t)) {
            rl_sum += *rl;
            rl_sq += *rl * *rl;
            ++rl_n;
        }
        if (auto e = metrics::endpoint_distance(t)) {
            epd_sum += e->mean;
            ++epd_n;
        }
        if (auto c = metrics::static_collision_rate(t)) {
            coll_sum += *c;
            ++coll_n;
        }
    }
    report.add("route_length_mean", rl_n ? metrics::MetricValue::of(rl_sum / rl_n, rl_n, "m")
                                         : metrics::MetricValue::none("no routable scenes"));
    if (rl_n > 1) {
        double var = rl_sq / rl_n - (rl_sum / rl_n) * (rl_sum / rl_n);
        report.add("route_length_std", metrics::MetricValue::of(std::sqrt(std::max(0.0, var)),
                                                                rl_n, "m"));
    }
    report.add("epd_mean", epd_n ? metrics::MetricValue::of(epd_sum / epd_n, epd_n, "m")
                                 : metrics::MetricValue::none("no succ edges"));
    report.add("static_collision_rate",
               coll_n ? metrics::MetricValue::of(coll_sum / coll_n, coll_n, "%")
                      : metrics::MetricValue::none("no vehicles"));

    metrics::TopologyFd topo = metrics::topology_fd_suite(gen, ref);
    report.add("topo_connectivity", metrics::MetricValue::of(topo.connectivity));
    report.add("topo_density", metrics::MetricValue::of(topo.density));
    report.add("topo_reach", metrics::MetricValue::of(topo.reach));
    report.add("topo_convenience", metrics::MetricValue::of(topo.convenience));

    metrics::MetricReport agents = metrics::agent_jsd_suite(gen, ref);
    for (const auto& [k, v] : agents.items()) report.add(k, v);

    if (!a.out_prefix.empty()) {
        fs::create_directories(fs::path(a.out_prefix).parent_path().string().empty()
                                   ? "."
                                   : fs::path(a.out_prefix).parent_path().string());
        std::ofstream(a.out_prefix + ".json") << report.to_json() << "\n";
        std::ofstream(a.out_prefix + ".csv") << report.to_csv();
        stamp(s, a.out_prefix + ".json");
    }
    log << "eval: " << gen.size() << " generated vs " << ref.size() << " reference scenes\n";
    return report;
}

metrics::MetricReport cmd_rollout(const Setup& s, const RolloutArgs& a, std::ostream& log,
                                  std::vector<sim::EpisodeLog>* logs_out) {
    bool need_gen = a.streaming || a.init == "model";
    bool need_npc = true;
    Models m = load_models(s, need_gen, need_npc);

    sim::GeneratorBundle bundle;
    if (need_gen) {
        bundle.vae = m.vae.get();
        bundle.gen = m.gen.get();
        bundle.stats = m.stats;
        bundle.sched = dyn::NoiseSchedule::linear(s.gen_train.ddpm_steps);
    }

    std::vector<SceneTile> ref;
    if (a.init == "dataset" || a.init == "model") ref = scene::read_tiles(dataset_val_tiles(s));

    sim::WorldConfig wc = s.world;
    wc.k_sim = a.k_sim;
    wc.target_route_m = a.target_route_m;

    sim::OutpaintConfig oc = s.outpaint;

    std::vector<sim::EpisodeLog> logs(a.episodes);
    int threads = std::max(1, a.workers);
#pragma omp parallel for num_threads(threads) schedule(dynamic)
    for (int e = 0; e < a.episodes; ++e) {
        uint64_t seed = s.master_seed * 7919ULL + e;
        Rng erng(seed);

        SceneTile init_tile;
        sim::OracleSource oracle;
        bool have_oracle = false;
        if (a.init == "corridor") {
            scene::RawScene raw =
                scene::generate_corridor_window(seed, scene::SE2::identity(), -32.0, 40.0);
            scene::RawAgentTrack ego;
            ego.type = scene::AgentType::Vehicle;
            ego.current = 60;
            ego.states.resize(121);
            for (int k = 0; k < 121; ++k) {
                double t = (k - 60) * scene::kSimDt;
                ego.states[k] = {t, -20.0 + 6.0 * t, -1.75, 0.0, 6.0};
            }
            raw.ego_index = static_cast<int>(raw.agents.size());
            raw.agents.push_back(std::move(ego));
            init_tile = scene::normalize_to_ego(raw, s.caps);
            if (a.oracle_tiles) {
                scene::SE2 corr = init_tile.ego_pose.inverse();
                oracle = [corr, seed](const scene::SE2& frame) {
                    scene::Vec2 c = corr.inverse().apply({frame.tx, frame.ty});
                    return scene::generate_corridor_window(seed, corr, c.x - 40.0, c.x + 40.0);
                };
                have_oracle = true;
            }
        } else if (a.init == "dataset") {
            init_tile = ref[e % ref.size()];
        } else {
            // model-generated initial tile per the streaming algorithm
            auto shapes = shapes_from_tiles(ref);
            const TileShape& sh = shapes[erng.uniform_int(0, static_cast<int>(shapes.size()) - 1)];
            dyn::GuidanceConfig guidance{s.outpaint.guidance.scale, 0.0};
            dyn::SampledTile st = dyn::sample_initial_tile(*m.gen, *m.vae, m.stats, s.outpaint.mode,
                                                           s.outpaint.k_steps, &bundle.sched,
                                                           sh.n_l, sh.n_a, sh.style, guidance, erng);
            init_tile = std::move(st.tile);
            // the generated tile needs an ego: adopt the agent closest
            // to the origin, or inject one on the route
            if (init_tile.n_agents() > 0) {
                int best = 0;
                for (int i = 1; i < init_tile.n_agents(); ++i)
                    if (std::hypot(init_tile.agents[i].x, init_tile.agents[i].y) <
                        std::hypot(init_tile.agents[best].x, init_tile.agents[best].y))
                        best = i;
                init_tile.ego_index = best;
            }
        }

        sim::World world;
        try {
            world = sim::world_from_tile(init_tile, wc);
        } catch (const std::exception&) {
            sim::EpisodeLog fail;
            fail.cause = sim::TermCause::OffRoute;
            fail.seed = seed;
            logs[e] = std::move(fail);
            continue;
        }

        sim::NpcRunner npc;
        npc.model = m.npc.get();
        npc.limits = s.limits;
        npc.limits.shaping = a.lambda;
        npc.kappa = a.kappa;

        sim::RolloutOptions opt;
        opt.world = wc;
        opt.outpaint = oc;
        opt.bundle = a.streaming && need_gen ? &bundle : nullptr;
        opt.oracle = have_oracle ? &oracle : nullptr;
        opt.warm = a.warm;
        opt.idm = s.idm;
        logs[e] = sim::rollout(world, opt, &npc, seed);
    }

    if (!a.out_prefix.empty()) {
        fs::create_directories(fs::path(a.out_prefix).parent_path().string().empty()
                                   ? "."
                                   : fs::path(a.out_prefix).parent_path().string());
        for (int e = 0; e < a.episodes; ++e)
            sim::write_episode_log(a.out_prefix + "_ep" + std::to_string(e) + ".jsonl", logs[e]);
    }
    metrics::MetricReport report = metrics::closed_loop_report(logs, wc.dt);
    double seam_sum = 0;
    int seam_n = 0;
    long outpaints = 0, clamp_viol = 0;
    for (const auto& l : logs) {
        outpaints += static_cast<long>(l.outpaints.size());
        clamp_viol += l.clamp_violations;
        for (const auto& ev : l.outpaints)
            if (ev.seam_epd >= 0) {
                seam_sum += ev.seam_epd;
                ++seam_n;
            }
    }
    report.add("outpaint_events", metrics::MetricValue::of(outpaints));
    report.add("clamp_violations", metrics::MetricValue::of(clamp_viol));
    report.add("seam_epd_mean", seam_n ? metrics::MetricValue::of(seam_sum / seam_n, seam_n, "m")
                                       : metrics::MetricValue::none("no seam succ edges"));
    if (!a.out_prefix.empty()) {
        std::ofstream(a.out_prefix + "_report.json") << report.to_json() << "\n";
        stamp(s, a.out_prefix + "_report.json");
    }
    if (logs_out) *logs_out = std::move(logs);
    log << "rollout: " << a.episodes << " episodes done\n";
    return report;
}

std::vector<plot::SweepRow> cmd_bench(const Setup& s, const BenchArgs& a, std::ostream& log) {
    Models m = load_models(s, true, false);
    auto ref = scene::read_tiles(dataset_val_tiles(s));
    auto shapes = shapes_from_tiles(ref);
    dyn::NoiseSchedule sched = dyn::NoiseSchedule::linear(s.gen_train.ddpm_steps);
    dyn::GuidanceConfig guidance{a.cfg_scale, 0.0};

    struct Point {
        dyn::Mode mode;
        int k;
    };
    std::vector<Point> points{{dyn::Mode::MeanFlow, 1},
                              {dyn::Mode::MeanFlow, 3},
                              {dyn::Mode::MeanFlow, 5},
                              {dyn::Mode::MeanFlow, 12},
                              {dyn::Mode::Flow, 12},
                              {dyn::Mode::Ddpm, sched.steps}};

    std::vector<plot::SweepRow> rows;
    for (const auto& pt : points) {
        Rng rng(s.master_seed + 404);
        std::vector<SceneTile> samples;
        double wall_sum = 0;
        long calls = 0, gevals = 0;
        int valid = 0;
        for (int i = 0; i < a.samples; ++i) {
            const TileShape& sh = shapes[rng.uniform_int(0, static_cast<int>(shapes.size()) - 1)];
            dyn::SampledTile st = dyn::sample_initial_tile(*m.gen, *m.vae, m.stats, pt.mode, pt.k,
                                                           &sched, sh.n_l, sh.n_a, sh.style,
                                                           guidance, rng);
            wall_sum += st.wall_ms;
            calls += st.stats.field_evals;
            gevals += st.graph_evals;
            bool ok = st.tile.n_lanes() > 0 && !sim::extract_route_lanes(st.tile).empty();
            if (ok) ++valid;
            samples.push_back(std::move(st.tile));
        }
        double epd_sum = 0;
        int epd_n = 0;
        for (const auto& t : samples)
            if (auto e = metrics::endpoint_distance(t)) {
                epd_sum += e->mean;
                ++epd_n;
            }
        metrics::MetricReport aj = metrics::agent_jsd_suite(samples, ref);
        plot::SweepRow row;
        row.mode = dyn::mode_name(pt.mode);
        row.k = pt.k;
        row.epd = epd_n ? epd_sum / epd_n : -1.0;
        row.agent_jsd = aj.get("agent_jsd_mean").null ? -1.0 : aj.get("agent_jsd_mean").value;
        row.wall_ms = wall_sum / a.samples;
        row.validity = 100.0 * valid / a.samples;
        row.backbone_calls = calls / a.samples;
        row.graph_evals = gevals / a.samples;
        rows.push_back(row);
        log << "bench " << row.mode << "-" << row.k << ": EPD " << row.epd << " JSD "
            << row.agent_jsd << " wall " << row.wall_ms << " ms calls " << row.backbone_calls
            << "\n";
    }
    if (!a.out_csv.empty()) {
        fs::create_directories(fs::path(a.out_csv).parent_path().string().empty()
                                   ? "."
                                   : fs::path(a.out_csv).parent_path().string());
        plot::write_sweep_csv(a.out_csv, rows);
        stamp(s, a.out_csv);
    }
    return rows;
}

void cmd_plot(const Setup& s, const std::string& csv_path, const std::string& svg_path,
              std::ostream& log) {
    auto rows = plot::read_sweep_csv(csv_path);
    std::string svg = plot::emit_plot_svg(rows, 30.0);
    std::ofstream os(svg_path);
    if (!os) throw std::runtime_error("plot: cannot open '" + svg_path + "'");
    os << svg;
    stamp(s, svg_path);
    log << "plot: wrote " << svg_path << "\n";
}

}  // namespace vw::pipeline
