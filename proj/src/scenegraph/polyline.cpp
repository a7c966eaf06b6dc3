#include <algorithm>
#include <stdexcept>

#include "vectorworld/scenegraph/ops.hpp"

namespace vw::scene {

double arc_length(const std::vector<Vec2>& pts) {
    double s = 0.0;
    for (size_t i = 1; i < pts.size(); ++i) s += (pts[i] - pts[i - 1]).norm();
    return s;
}

std::vector<Vec2> resample_polyline(const std::vector<Vec2>& pts, int target) {
    if (pts.empty()) throw std::runtime_error("resample_polyline: empty input");
    if (target < 1) throw std::runtime_error("resample_polyline: target < 1");
    std::vector<Vec2> out(static_cast<size_t>(target));
    double total = arc_length(pts);
    if (pts.size() == 1 || total <= 0.0) {
        std::fill(out.begin(), out.end(), pts.front());
        return out;
    }
    out.front() = pts.front();
    out.back() = pts.back();
    size_t seg = 0;
    double seg_start = 0.0;
    double seg_len = (pts[1] - pts[0]).norm();
    for (int k = 1; k + 1 < target; ++k) {
        double s = total * k / (target - 1);
        while (seg_start + seg_len < s && seg + 2 < pts.size()) {
            seg_start += seg_len;
            ++seg;
            seg_len = (pts[seg + 1] - pts[seg]).norm();
        }
        double u = seg_len > 0.0 ? (s - seg_start) / seg_len : 0.0;
        out[k] = pts[seg] + (pts[seg + 1] - pts[seg]) * u;
    }
    return out;
}

namespace {
inline bool inside(const Vec2& p, double half) {
    return p.x >= -half && p.x <= half && p.y >= -half && p.y <= half;
}

// first boundary crossing on segment a->b, as interpolation parameter
double crossing_u(const Vec2& a, const Vec2& b, double half) {
    double best = 1.0;
    auto consider = [&](double u) {
        if (u > 1e-12 && u < best) best = u;
    };
    Vec2 d = b - a;
    for (int axis = 0; axis < 2; ++axis) {
        double av = axis == 0 ? a.x : a.y;
        double dv = axis == 0 ? d.x : d.y;
        if (dv == 0.0) continue;
        for (double bound : {-half, half}) {
            double u = (bound - av) / dv;
            if (u <= 0.0 || u >= 1.0) continue;
            Vec2 p = a + d * u;
            if (inside(p, half * (1.0 + 1e-12))) consider(u);
        }
    }
    return best;
}
}  // namespace

std::vector<std::vector<Vec2>> clip_to_square(const std::vector<Vec2>& pts, double half) {
    std::vector<std::vector<Vec2>> pieces;
    std::vector<Vec2> cur;
    auto flush = [&]() {
        if (cur.size() >= 2 && arc_length(cur) > 1e-9) pieces.push_back(cur);
        cur.clear();
    };
    for (size_t i = 0; i < pts.size(); ++i) {
        bool in_now = inside(pts[i], half);
        if (i == 0) {
            if (in_now) cur.push_back(pts[i]);
            continue;
        }
        bool in_prev = inside(pts[i - 1], half);
        if (in_prev && in_now) {
            cur.push_back(pts[i]);
        } else if (in_prev && !in_now) {
            double u = crossing_u(pts[i - 1], pts[i], half);
            cur.push_back(pts[i - 1] + (pts[i] - pts[i - 1]) * u);
            flush();
        } else if (!in_prev && in_now) {
            double u = crossing_u(pts[i], pts[i - 1], half);
            cur.push_back(pts[i] + (pts[i - 1] - pts[i]) * u);
            cur.push_back(pts[i]);
        }
        // both outside: the chord may still cross the square; desk-scale
        // lanes are short relative to the FOV, so skip that case
    }
    flush();
    return pieces;
}

}  // namespace vw::scene
