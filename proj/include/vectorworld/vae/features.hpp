#pragma once

#include "vectorworld/diffcore/tensor.hpp"
#include "vectorworld/scenegraph/types.hpp"

namespace vw::vae {

using diff::Tensor;
using scene::SceneTile;

// Fixed physical ranges mapping scene quantities into unit scale for
// the networks. Positions divide by fov/2.
struct FeatureScales {
    double pos = 32.0;
    double speed = 15.0;
    double length = 10.0;
    double width = 5.0;
};

// lane rows are [x0..x_{P-1} | y0..y_{P-1}], normalized
Tensor lane_features(const SceneTile& tile, const FeatureScales& s);
// agent rows are [x, y, v, cos, sin, l, w], normalized
Tensor agent_static_features(const SceneTile& tile, const FeatureScales& s);
// motion rows are [x0..x_{K-1} | y0..y_{K-1}], already in [-1, 1]
Tensor agent_motion_features(const SceneTile& tile, int k_mot);
Tensor agent_type_onehot(const SceneTile& tile);

// row-major (n_lanes^2) x 6 one-hot of the typed relation
Tensor l2l_type_onehot(const SceneTile& tile);
// same, but every pair touching a generated (mask false) element is
// reported as `none`; what a generator may legitimately condition on
Tensor l2l_type_onehot_masked(const SceneTile& tile);

// additive attention masks for encoder partition blocking: a
// conditioned query must not attend a generated key
Tensor block_mask(const std::vector<bool>& query_cond, const std::vector<bool>& key_cond,
                  bool enabled);

// inverse featurization
void lane_row_to_points(const Tensor& lane_geom, int row, int lane_points,
                        const FeatureScales& s, std::vector<scene::Vec2>* out);
scene::AgentState agent_row_to_state(const Tensor& agent_static, int row,
                                     const FeatureScales& s);
scene::MotionCode motion_row_to_code(const Tensor& motion, int row, int k_mot);

}  // namespace vw::vae
