#pragma once

#include <memory>
#include <string>

#include "vectorworld/diffcore/graph.hpp"

namespace vw::diff {

// Flat binary container of named float64 arrays, little-endian:
//   magic   4 bytes  "VWCK"
//   version u32      1
//   count   u64
//   entry*  { name_len u32, name bytes, rows u32, cols u32,
//             data f64[rows*cols] }
// Entry order is the store's insertion order, so save/load round-trips
// preserve parameter ordering.
void save_checkpoint(const std::string& path, const ParamStore& store);
std::shared_ptr<ParamStore> load_checkpoint(const std::string& path);

}  // namespace vw::diff
