#include "vectorworld/vae/features.hpp"

#include <cmath>

namespace vw::vae {

using scene::ConnType;

Tensor lane_features(const SceneTile& tile, const FeatureScales& s) {
    int n = tile.n_lanes();
    int p = n > 0 ? static_cast<int>(tile.lanes[0].pts.size()) : 0;
    Tensor f = Tensor::zeros(n, 2 * p);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < p; ++k) {
            f.at(i, k) = tile.lanes[i].pts[k].x / s.pos;
            f.at(i, p + k) = tile.lanes[i].pts[k].y / s.pos;
        }
    return f;
}

Tensor agent_static_features(const SceneTile& tile, const FeatureScales& s) {
    int n = tile.n_agents();
    Tensor f = Tensor::zeros(n, 7);
    for (int i = 0; i < n; ++i) {
        const auto& a = tile.agents[i];
        f.at(i, 0) = a.x / s.pos;
        f.at(i, 1) = a.y / s.pos;
        f.at(i, 2) = a.speed / s.speed;
        f.at(i, 3) = a.cos_h;
        f.at(i, 4) = a.sin_h;
        f.at(i, 5) = a.length / s.length;
        f.at(i, 6) = a.width / s.width;
    }
    return f;
}

Tensor agent_motion_features(const SceneTile& tile, int k_mot) {
    int n = tile.n_agents();
    Tensor f = Tensor::zeros(n, 2 * k_mot);
    for (int i = 0; i < n; ++i) {
        const auto& code = tile.codes[i];
        int k = std::min(k_mot, static_cast<int>(code.points.size()));
        for (int j = 0; j < k; ++j) {
            f.at(i, j) = code.points[j].x;
            f.at(i, k_mot + j) = code.points[j].y;
        }
    }
    return f;
}

Tensor agent_type_onehot(const SceneTile& tile) {
    int n = tile.n_agents();
    Tensor f = Tensor::zeros(n, 3);
    for (int i = 0; i < n; ++i) f.at(i, static_cast<int>(tile.agents[i].type)) = 1.0;
    return f;
}

Tensor l2l_type_onehot(const SceneTile& tile) {
    int n = tile.n_lanes();
    Tensor f = Tensor::zeros(n * n, scene::kNumConnTypes);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            f.at(i * n + j, static_cast<int>(tile.edges.get(i, j))) = 1.0;
    return f;
}

Tensor l2l_type_onehot_masked(const SceneTile& tile) {
    int n = tile.n_lanes();
    Tensor f = Tensor::zeros(n * n, scene::kNumConnTypes);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            bool known = tile.lane_mask[i] && tile.lane_mask[j];
            ConnType t = known ? tile.edges.get(i, j) : ConnType::None;
            f.at(i * n + j, static_cast<int>(t)) = 1.0;
        }
    return f;
}

Tensor block_mask(const std::vector<bool>& query_cond, const std::vector<bool>& key_cond,
                  bool enabled) {
    int nq = static_cast<int>(query_cond.size());
    int nk = static_cast<int>(key_cond.size());
    Tensor m = Tensor::zeros(nq, nk);
    if (enabled) {
        for (int i = 0; i < nq; ++i)
            for (int j = 0; j < nk; ++j)
                if (query_cond[i] && !key_cond[j]) m.at(i, j) = -1e9;
    }
    return m;
}

void lane_row_to_points(const Tensor& lane_geom, int row, int lane_points,
                        const FeatureScales& s, std::vector<scene::Vec2>* out) {
    out->resize(lane_points);
    for (int k = 0; k < lane_points; ++k) {
        (*out)[k].x = lane_geom.at(row, k) * s.pos;
        (*out)[k].y = lane_geom.at(row, lane_points + k) * s.pos;
    }
}

scene::AgentState agent_row_to_state(const Tensor& agent_static, int row,
                                     const FeatureScales& s) {
    scene::AgentState a;
    a.x = agent_static.at(row, 0) * s.pos;
    a.y = agent_static.at(row, 1) * s.pos;
    a.speed = std::max(0.0, agent_static.at(row, 2) * s.speed);
    double c = agent_static.at(row, 3), sn = agent_static.at(row, 4);
    double n = std::hypot(c, sn);
    if (n < 1e-9) {
        a.cos_h = 1.0;
        a.sin_h = 0.0;
    } else {
        a.cos_h = c / n;
        a.sin_h = sn / n;
    }
    a.length = std::max(0.3, agent_static.at(row, 5) * s.length);
    a.width = std::max(0.2, agent_static.at(row, 6) * s.width);
    return a;
}

scene::MotionCode motion_row_to_code(const Tensor& motion, int row, int k_mot) {
    scene::MotionCode code;
    code.points.resize(k_mot);
    double peak = 0.0;
    for (int j = 0; j < k_mot; ++j) {
        code.points[j].x = std::clamp(motion.at(row, j), -1.0, 1.0);
        code.points[j].y = std::clamp(motion.at(row, k_mot + j), -1.0, 1.0);
        peak = std::max({peak, std::fabs(code.points[j].x), std::fabs(code.points[j].y)});
    }
    // decoded codes below this magnitude snap to the exact static zero
    if (peak < 0.1) {
        code.points.assign(k_mot, {0.0, 0.0});
        code.is_static = true;
    } else {
        code.is_static = false;
    }
    return code;
}

}  // namespace vw::vae
