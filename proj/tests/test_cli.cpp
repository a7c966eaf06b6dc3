#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vectorworld/pipeline.hpp"

using namespace vw;
namespace fs = std::filesystem;

namespace {
std::string read_file(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

pipeline::Setup tiny_setup(const std::string& root) {
    Config cfg;
    cfg.set("paths.data_dir", root + "/data");
    cfg.set("paths.ckpt_dir", root + "/ckpts");
    cfg.set("paths.report_dir", root + "/reports");
    cfg.set("data.train_scenes", "6");
    cfg.set("data.val_scenes", "3");
    cfg.set("data.cap_lanes", "10");
    cfg.set("data.cap_agents", "5");
    return pipeline::setup_from_config(cfg);
}
}  // namespace

TEST_CASE("config: parse, sections, diagnostics naming the field") {
    Config cfg = Config::from_string("[a]\nx = 1.5  # comment\ny = true\n[b]\nz = hello\n");
    CHECK(cfg.get_double("a.x", 0) == 1.5);
    CHECK(cfg.get_bool("a.y", false));
    CHECK(cfg.get_str("b.z", "") == "hello");
    CHECK(cfg.get_int("missing.key", 7) == 7);
    CHECK_THROWS_WITH_AS(Config::from_string("[a]\nbroken line\n"),
                         doctest::Contains("missing '='"), std::runtime_error);
    Config bad = Config::from_string("[a]\nx = oops\n");
    CHECK_THROWS_WITH_AS(bad.get_double("a.x", 0), doctest::Contains("a.x"), std::runtime_error);
    // stable hash
    CHECK(cfg.hash() == Config::from_string("[a]\nx = 1.5\ny = true\n[b]\nz = hello\n").hash());
}

TEST_CASE("gen-data: same seed twice gives bit-identical dataset files") {
    std::string root1 = "cli_test_run1", root2 = "cli_test_run2";
    fs::remove_all(root1);
    fs::remove_all(root2);
    std::ostringstream sink;
    pipeline::Setup s1 = tiny_setup(root1);
    pipeline::Setup s2 = tiny_setup(root2);
    pipeline::cmd_gen_data(s1, sink);
    pipeline::cmd_gen_data(s2, sink);
    for (const char* f : {"/data/scenes.jsonl", "/data/scenes_val.jsonl", "/data/tracks.jsonl",
                          "/data/manifest.jsonl"}) {
        CHECK(read_file(root1 + f) == read_file(root2 + f));
        CHECK_FALSE(read_file(root1 + f).empty());
    }
    // stamp sidecars carry the config hash
    std::string stamp = read_file(root1 + "/data/scenes.jsonl.stamp");
    CHECK(stamp.find("config_hash") != std::string::npos);
    fs::remove_all(root1);
    fs::remove_all(root2);
}

TEST_CASE("partitioned training variant: conditioned half is behind the travel direction") {
    std::string root = "cli_test_part";
    fs::remove_all(root);
    std::ostringstream sink;
    pipeline::Setup s = tiny_setup(root);
    pipeline::cmd_gen_data(s, sink);
    auto tiles = scene::read_tiles(pipeline::dataset_tiles(s));
    REQUIRE_FALSE(tiles.empty());
    scene::SceneTile part = pipeline::partitioned_variant(tiles[0], s.caps);
    // every element is masked exactly once and split lanes touch y=0
    int cond = 0, gen = 0;
    for (bool m : part.lane_mask) (m ? cond : gen)++;
    CHECK(cond + gen == part.n_lanes());
    // the rotated ego (travel direction) points along +y now
    if (part.ego_index >= 0) {
        CHECK(part.agents[part.ego_index].sin_h == doctest::Approx(1.0).epsilon(1e-9));
    }
    fs::remove_all(root);
}

TEST_CASE("sweep csv round trip and svg emission") {
    std::vector<plot::SweepRow> rows{
        {"meanflow", 1, 0.42, 1.8, 6.5, 92.0, 1, 1},
        {"meanflow", 12, 0.21, 1.2, 64.0, 97.0, 12, 12},
        {"ddpm", 100, 0.18, 1.1, 420.0, 98.0, 100, 100},
    };
    plot::write_sweep_csv("sweep_test.csv", rows);
    auto back = plot::read_sweep_csv("sweep_test.csv");
    REQUIRE(back.size() == 3);
    CHECK(back[0].mode == "meanflow");
    CHECK(back[2].k == 100);
    CHECK(back[1].epd == doctest::Approx(0.21));
    CHECK(back[1].backbone_calls == 12);
    std::remove("sweep_test.csv");

    std::string svg = plot::emit_plot_svg(rows, 30.0);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("class=\"budget\"") != std::string::npos);
    // marker count: one circle and one square per row
    size_t circles = 0, pos = 0;
    while ((pos = svg.find("class=\"epd\"", pos)) != std::string::npos) {
        ++circles;
        pos += 10;
    }
    CHECK(circles == rows.size());

    // the budget line's x matches the emitted axis transform
    auto attr = [&](const std::string& name) {
        size_t p = svg.find(name + "=\"");
        REQUIRE(p != std::string::npos);
        p += name.size() + 2;
        return std::stod(svg.substr(p, svg.find('"', p) - p));
    };
    double xmin = attr("data-xmin"), xmax = attr("data-xmax"), plotw = attr("data-plotw"),
           ml = attr("data-ml");
    size_t bp = svg.find("class=\"budget\" x1=\"");
    REQUIRE(bp != std::string::npos);
    bp += std::string("class=\"budget\" x1=\"").size();
    double budget_x = std::stod(svg.substr(bp, svg.find('"', bp) - bp));
    double expect = ml + (30.0 - xmin) / (xmax - xmin) * plotw;
    CHECK(budget_x == doctest::Approx(expect).epsilon(1e-6));

    // identical rows still produce a valid document
    std::vector<plot::SweepRow> twin{rows[0], rows[0]};
    std::string svg2 = plot::emit_plot_svg(twin, 30.0);
    CHECK(svg2.find("</svg>") != std::string::npos);

    CHECK_THROWS_AS(plot::emit_plot_svg({rows[0]}, 30.0), std::runtime_error);
}

TEST_CASE("eval without FD: dataset against itself gives zero JSDs") {
    std::string root = "cli_test_eval";
    fs::remove_all(root);
    std::ostringstream sink;
    pipeline::Setup s = tiny_setup(root);
    pipeline::cmd_gen_data(s, sink);
    pipeline::EvalArgs ea;
    ea.generated = pipeline::dataset_tiles(s);
    ea.reference = pipeline::dataset_tiles(s);
    ea.with_fd = false;
    ea.out_prefix = root + "/reports/selfcheck";
    auto report = pipeline::cmd_eval(s, ea, sink);
    for (const char* k : {"jsd_length", "jsd_width", "jsd_speed", "agent_jsd_mean"}) {
        REQUIRE(report.has(k));
        if (!report.get(k).null) CHECK(report.get(k).value == doctest::Approx(0.0));
    }
    CHECK(report.get("topo_connectivity").value == doctest::Approx(0.0));
    CHECK(fs::exists(root + "/reports/selfcheck.json"));
    CHECK(fs::exists(root + "/reports/selfcheck.csv"));
    fs::remove_all(root);
}
