// Operator surface: dataset generation, training, sampling, streaming
// rollout, evaluation, latency benchmarking, and SVG figure emission.
// Exit codes: 0 success, 1 config error, 2 runtime failure.
#include <CLI11.hpp>
#include <iostream>

#include "vectorworld/pipeline.hpp"

using namespace vw;

int main(int argc, char** argv) {
    CLI::App app{"vectorworld: streaming vector-graph world model"};
    app.require_subcommand(1);

    std::string config_path = "configs/default.cfg";
    app.add_option("--config", config_path, "configuration file");
    uint64_t seed_override = 0;
    bool seed_set = false;
    app.add_option("--seed", seed_override, "override run.seed")->each([&](const std::string&) {
        seed_set = true;
    });

    auto* c_gen_data = app.add_subcommand("gen-data", "generate the synthetic dataset");

    auto* c_train_vae = app.add_subcommand("train-vae", "train the motion-aware VAE");

    auto* c_train_gen = app.add_subcommand("train-gen", "train the latent generator");
    std::string gen_mode = "";
    c_train_gen->add_option("--mode", gen_mode, "ddpm | flow | meanflow (default from config)");

    auto* c_train_npc = app.add_subcommand("train-npc", "train the NPC behavior policy");

    auto* c_sample = app.add_subcommand("sample", "sample initial scene tiles");
    pipeline::SampleArgs sa;
    std::string sample_mode = "meanflow";
    c_sample->add_option("--mode", sample_mode);
    c_sample->add_option("--steps", sa.k_steps);
    c_sample->add_option("--count", sa.count);
    c_sample->add_option("--cfg-scale", sa.cfg_scale);
    c_sample->add_option("--out", sa.out);

    auto* c_eval = app.add_subcommand("eval", "score generated scenes against a reference");
    pipeline::EvalArgs ea;
    c_eval->add_option("--generated", ea.generated)->required();
    c_eval->add_option("--reference", ea.reference)->required();
    c_eval->add_flag("!--no-fd", ea.with_fd, "skip the embedding FD");
    c_eval->add_option("--out", ea.out_prefix);

    auto* c_rollout = app.add_subcommand("rollout", "closed-loop episodes with streaming outpainting");
    pipeline::RolloutArgs ra;
    c_rollout->add_option("--episodes", ra.episodes);
    c_rollout->add_option("--workers", ra.workers);
    c_rollout->add_option("--init", ra.init, "model | dataset | corridor");
    c_rollout->add_flag("--oracle-tiles", ra.oracle_tiles);
    c_rollout->add_flag("!--no-streaming", ra.streaming);
    c_rollout->add_flag("!--cold", ra.warm, "cold start instead of warm start");
    c_rollout->add_option("--kappa", ra.kappa, "RTG tilt coefficient");
    c_rollout->add_option("--lambda", ra.lambda, "kinematic shaping weight");
    c_rollout->add_option("--route-m", ra.target_route_m, "success distance target");
    c_rollout->add_option("--k-sim", ra.k_sim);
    c_rollout->add_option("--out", ra.out_prefix);

    auto* c_bench = app.add_subcommand("bench", "quality-latency sweep over solver budgets");
    pipeline::BenchArgs ba;
    c_bench->add_option("--samples", ba.samples);
    c_bench->add_option("--cfg-scale", ba.cfg_scale);
    c_bench->add_option("--out", ba.out_csv);

    auto* c_plot = app.add_subcommand("plot", "render a sweep CSV as an SVG");
    std::string plot_csv, plot_svg = "reports/sweep.svg";
    c_plot->add_option("--csv", plot_csv)->required();
    c_plot->add_option("--svg", plot_svg);

    CLI11_PARSE(app, argc, argv);

    pipeline::Setup setup;
    try {
        Config cfg = Config::from_file(config_path);
        if (seed_set) cfg.set("run.seed", std::to_string(seed_override));
        setup = pipeline::setup_from_config(cfg);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    try {
        std::ostream& log = std::cout;
        if (*c_gen_data) pipeline::cmd_gen_data(setup, log);
        if (*c_train_vae) pipeline::cmd_train_vae(setup, log);
        if (*c_train_gen) {
            dyn::Mode mode = gen_mode.empty() ? setup.gen_train.mode : dyn::mode_from_string(gen_mode);
            pipeline::cmd_train_gen(setup, mode, log);
        }
        if (*c_train_npc) pipeline::cmd_train_npc(setup, log);
        if (*c_sample) {
            sa.mode = dyn::mode_from_string(sample_mode);
            if (!c_sample->count("--cfg-scale")) sa.cfg_scale = setup.sample_cfg_scale;
            pipeline::cmd_sample(setup, sa, log);
        }
        if (*c_eval) {
            auto report = pipeline::cmd_eval(setup, ea, log);
            std::cout << report.to_json() << "\n";
        }
        if (*c_rollout) {
            auto report = pipeline::cmd_rollout(setup, ra, log);
            std::cout << report.to_json() << "\n";
        }
        if (*c_bench) {
            if (ba.out_csv.empty()) ba.out_csv = setup.paths.report_dir + "/sweep.csv";
            if (!c_bench->count("--samples")) ba.samples = setup.bench_samples;
            pipeline::cmd_bench(setup, ba, log);
        }
        if (*c_plot) pipeline::cmd_plot(setup, plot_csv, plot_svg, log);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
