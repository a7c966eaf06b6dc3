#include "vectorworld/scenegraph/io.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace vw::scene {

using nlohmann::json;

namespace {
json pts_to_json(const std::vector<Vec2>& pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back({p.x, p.y});
    return a;
}

std::vector<Vec2> pts_from_json(const json& a) {
    std::vector<Vec2> pts;
    for (const auto& p : a) pts.push_back({p[0].get<double>(), p[1].get<double>()});
    return pts;
}
}  // namespace

std::string tile_to_json(const SceneTile& tile) {
    json j;
    j["schema_version"] = 1;
    j["fov"] = tile.fov;
    j["style"] = tile.style;
    j["ego_index"] = tile.ego_index;
    j["ego_pose"] = {{"x", tile.ego_pose.tx}, {"y", tile.ego_pose.ty}, {"theta", tile.ego_pose.theta}};

    json lanes = json::array();
    for (const auto& lane : tile.lanes) lanes.push_back({{"pts", pts_to_json(lane.pts)}, {"attr", lane.attr}});
    j["lanes"] = std::move(lanes);

    json agents = json::array();
    for (size_t i = 0; i < tile.agents.size(); ++i) {
        const AgentState& a = tile.agents[i];
        json ja;
        ja["state"] = {a.x, a.y, a.speed, a.cos_h, a.sin_h, a.length, a.width};
        ja["type"] = agent_type_name(a.type);
        if (i < tile.codes.size()) {
            ja["code"] = {{"static", tile.codes[i].is_static}, {"pts", pts_to_json(tile.codes[i].points)}};
        }
        agents.push_back(std::move(ja));
    }
    j["agents"] = std::move(agents);

    // sparse: only non-none, non-self entries
    json l2l = json::array();
    for (int i = 0; i < tile.edges.n_lanes; ++i)
        for (int k = 0; k < tile.edges.n_lanes; ++k) {
            ConnType t = tile.edges.get(i, k);
            if (t == ConnType::None || t == ConnType::Self) continue;
            l2l.push_back({i, k, static_cast<int>(t)});
        }
    j["edges"] = {{"l2l", std::move(l2l)}};

    json lm = json::array(), am = json::array();
    for (bool b : tile.lane_mask) lm.push_back(b ? 1 : 0);
    for (bool b : tile.agent_mask) am.push_back(b ? 1 : 0);
    j["masks"] = {{"lanes", std::move(lm)}, {"agents", std::move(am)}};
    return j.dump();
}

SceneTile tile_from_json(const std::string& line) {
    json j = json::parse(line);
    if (j.value("schema_version", 0) != 1)
        throw std::runtime_error("tile_from_json: unsupported schema_version");
    SceneTile tile;
    tile.fov = j["fov"].get<double>();
    tile.style = j.value("style", 0);
    tile.ego_index = j.value("ego_index", -1);
    tile.ego_pose = {j["ego_pose"]["x"].get<double>(), j["ego_pose"]["y"].get<double>(),
                     j["ego_pose"]["theta"].get<double>()};
    for (const auto& jl : j["lanes"]) {
        LanePolyline lane;
        lane.pts = pts_from_json(jl["pts"]);
        lane.attr = jl["attr"].get<std::vector<double>>();
        tile.lanes.push_back(std::move(lane));
    }
    for (const auto& ja : j["agents"]) {
        AgentState a;
        const auto& s = ja["state"];
        a.x = s[0]; a.y = s[1]; a.speed = s[2]; a.cos_h = s[3]; a.sin_h = s[4];
        a.length = s[5]; a.width = s[6];
        a.type = agent_type_from_name(ja["type"].get<std::string>());
        tile.agents.push_back(a);
        MotionCode code;
        if (ja.contains("code")) {
            code.is_static = ja["code"]["static"].get<bool>();
            code.points = pts_from_json(ja["code"]["pts"]);
        }
        tile.codes.push_back(std::move(code));
    }
    tile.edges.init(tile.n_lanes(), tile.n_agents());
    for (const auto& e : j["edges"]["l2l"])
        tile.edges.set(e[0].get<int>(), e[1].get<int>(), static_cast<ConnType>(e[2].get<int>()));
    for (const auto& m : j["masks"]["lanes"]) tile.lane_mask.push_back(m.get<int>() != 0);
    for (const auto& m : j["masks"]["agents"]) tile.agent_mask.push_back(m.get<int>() != 0);
    return tile;
}

void write_tiles(const std::string& path, const std::vector<SceneTile>& tiles) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_tiles: cannot open '" + path + "'");
    for (const auto& t : tiles) os << tile_to_json(t) << "\n";
}

std::vector<SceneTile> read_tiles(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_tiles: cannot open '" + path + "'");
    std::vector<SceneTile> tiles;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty()) tiles.push_back(tile_from_json(line));
    }
    return tiles;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_manifest: cannot open '" + path + "'");
    for (const auto& e : entries) {
        json j{{"index", e.index}, {"seed", e.seed}, {"style", e.style}};
        os << j.dump() << "\n";
    }
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_manifest: cannot open '" + path + "'");
    std::vector<ManifestEntry> entries;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        entries.push_back({j["index"].get<int>(), j["seed"].get<uint64_t>(), j["style"].get<int>()});
    }
    return entries;
}

std::string raw_scene_to_json(const RawScene& scene) {
    json j;
    j["schema_version"] = 1;
    j["style"] = scene.style;
    j["seed"] = scene.seed;
    j["ego"] = scene.ego_index;
    json lanes = json::array();
    for (const auto& lane : scene.lanes) lanes.push_back({{"pts", pts_to_json(lane.pts)}, {"attr", lane.attr}});
    j["lanes"] = std::move(lanes);
    json succ = json::array();
    for (auto [a, b] : scene.succ_pairs) succ.push_back({a, b});
    j["succ"] = std::move(succ);
    json agents = json::array();
    for (const auto& tr : scene.agents) {
        json ja;
        ja["type"] = agent_type_name(tr.type);
        ja["l"] = tr.length;
        ja["w"] = tr.width;
        ja["current"] = tr.current;
        ja["parked"] = tr.parked;
        json st = json::array();
        for (const auto& s : tr.states) st.push_back({s.t, s.x, s.y, s.heading, s.speed});
        ja["states"] = std::move(st);
        agents.push_back(std::move(ja));
    }
    j["agents"] = std::move(agents);
    return j.dump();
}

RawScene raw_scene_from_json(const std::string& line) {
    json j = json::parse(line);
    RawScene scene;
    scene.style = j.value("style", 0);
    scene.seed = j.value("seed", 0ULL);
    scene.ego_index = j.value("ego", -1);
    for (const auto& jl : j["lanes"]) {
        LanePolyline lane;
        lane.pts = pts_from_json(jl["pts"]);
        lane.attr = jl["attr"].get<std::vector<double>>();
        scene.lanes.push_back(std::move(lane));
    }
    for (const auto& e : j["succ"]) scene.succ_pairs.emplace_back(e[0].get<int>(), e[1].get<int>());
    for (const auto& ja : j["agents"]) {
        RawAgentTrack tr;
        tr.type = agent_type_from_name(ja["type"].get<std::string>());
        tr.length = ja["l"].get<double>();
        tr.width = ja["w"].get<double>();
        tr.current = ja["current"].get<int>();
        tr.parked = ja.value("parked", false);
        for (const auto& s : ja["states"])
            tr.states.push_back({s[0].get<double>(), s[1].get<double>(), s[2].get<double>(),
                                 s[3].get<double>(), s[4].get<double>()});
        scene.agents.push_back(std::move(tr));
    }
    return scene;
}

void write_raw_scenes(const std::string& path, const std::vector<RawScene>& scenes) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_raw_scenes: cannot open '" + path + "'");
    for (const auto& s : scenes) os << raw_scene_to_json(s) << "\n";
}

std::vector<RawScene> read_raw_scenes(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_raw_scenes: cannot open '" + path + "'");
    std::vector<RawScene> scenes;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty()) scenes.push_back(raw_scene_from_json(line));
    }
    return scenes;
}

}  // namespace vw::scene
