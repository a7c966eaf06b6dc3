#include <algorithm>
#include <stdexcept>

#include "vectorworld/scenegraph/ops.hpp"

namespace vw::scene {

bool classify_static(const std::vector<TimedPose>& recent, const StaticThresholds& th) {
    if (recent.empty()) throw std::runtime_error("classify_static: empty history");
    const Vec2 last = recent.back().pos();
    double max_disp = 0.0;
    double speed_sum = 0.0;
    for (const auto& p : recent) {
        max_disp = std::max(max_disp, (p.pos() - last).norm());
        speed_sum += p.speed;
    }
    double mean_speed = speed_sum / static_cast<double>(recent.size());
    return max_disp < th.max_displacement || mean_speed < th.mean_speed;
}

namespace {
// keep the most recent `arc_max` meters, interpolating the cut point
std::vector<Vec2> truncate_recent_arc(const std::vector<Vec2>& pts, double arc_max) {
    if (pts.size() < 2) return pts;
    double acc = 0.0;
    for (size_t i = pts.size() - 1; i > 0; --i) {
        double seg = (pts[i] - pts[i - 1]).norm();
        if (acc + seg >= arc_max) {
            double need = arc_max - acc;
            double u = seg > 0.0 ? need / seg : 0.0;
            Vec2 cut = pts[i] + (pts[i - 1] - pts[i]) * u;
            std::vector<Vec2> out;
            out.push_back(cut);
            for (size_t j = i; j < pts.size(); ++j) out.push_back(pts[j]);
            return out;
        }
        acc += seg;
    }
    return pts;
}

inline double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }
}  // namespace

MotionCode extract_motion_code(const std::vector<TimedPose>& recent, const SE2& current_pose,
                               int k_mot, const StaticThresholds& th) {
    if (recent.empty()) throw std::runtime_error("extract_motion_code: empty history");
    MotionCode code;
    code.points.assign(static_cast<size_t>(k_mot), Vec2{0.0, 0.0});
    if (classify_static(recent, th)) {
        code.is_static = true;
        return code;
    }
    code.is_static = false;

    SE2 inv = current_pose.inverse();
    std::vector<Vec2> body(recent.size());
    for (size_t i = 0; i < recent.size(); ++i) body[i] = inv.apply(recent[i].pos());

    std::vector<Vec2> recent_arc = truncate_recent_arc(body, kMotionArcMax);
    std::vector<Vec2> sampled = resample_polyline(recent_arc, k_mot);
    for (int i = 0; i < k_mot; ++i) {
        code.points[i].x = clamp1(2.0 * (sampled[i].x + kMotionArcMax) / kMotionArcMax - 1.0);
        code.points[i].y = clamp1(sampled[i].y / kMotionLatMax);
    }
    return code;
}

std::vector<TimedPose> unroll_pseudo_history(const MotionCode& code, const AgentState& state,
                                             int context_len, double dt, double t_now) {
    std::vector<TimedPose> out(static_cast<size_t>(context_len));
    const SE2 pose = state.pose();

    if (code.is_static || code.all_zero()) {
        for (int j = 0; j < context_len; ++j) {
            out[j] = {t_now - (context_len - 1 - j) * dt, state.x, state.y, state.heading(), 0.0};
        }
        return out;
    }

    std::vector<Vec2> body(code.points.size());
    for (size_t i = 0; i < code.points.size(); ++i) {
        body[i].x = (code.points[i].x + 1.0) * kMotionArcMax / 2.0 - kMotionArcMax;
        body[i].y = code.points[i].y * kMotionLatMax;
    }
    std::vector<Vec2> path = resample_polyline(body, context_len);

    for (int j = 0; j < context_len; ++j) {
        Vec2 g = pose.apply(path[j]);
        out[j].t = t_now - (context_len - 1 - j) * dt;
        out[j].x = g.x;
        out[j].y = g.y;
    }
    for (int j = 0; j < context_len; ++j) {
        Vec2 d = j + 1 < context_len ? (path[j + 1] - path[j]) : (path[j] - path[j - 1]);
        out[j].heading = d.norm() > 1e-12 ? pose.apply_heading(std::atan2(d.y, d.x)) : state.heading();
        if (j > 0) out[j].speed = (out[j].pos() - out[j - 1].pos()).norm() / dt;
    }
    if (context_len > 1) out[0].speed = out[1].speed;
    return out;
}

}  // namespace vw::scene
