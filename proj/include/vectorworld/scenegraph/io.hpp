#pragma once

#include <string>
#include <vector>

#include "vectorworld/scenegraph/types.hpp"

namespace vw::scene {

// Scene files are JSON Lines, one SceneTile per line, schema_version 1.
// Coordinates in meters, angles in radians.
std::string tile_to_json(const SceneTile& tile);
SceneTile tile_from_json(const std::string& line);

void write_tiles(const std::string& path, const std::vector<SceneTile>& tiles);
std::vector<SceneTile> read_tiles(const std::string& path);

struct ManifestEntry {
    int index = 0;
    uint64_t seed = 0;
    int style = 0;
};

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

// Raw trajectory datasets for behavior-model training.
std::string raw_scene_to_json(const RawScene& scene);
RawScene raw_scene_from_json(const std::string& line);
void write_raw_scenes(const std::string& path, const std::vector<RawScene>& scenes);
std::vector<RawScene> read_raw_scenes(const std::string& path);

}  // namespace vw::scene
