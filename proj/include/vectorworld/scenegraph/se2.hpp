#pragma once

#include <cmath>

namespace vw::scene {

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
};

double wrap_angle(double a);  // to (-pi, pi]

// Rigid planar transform: rotate by theta, then translate.
struct SE2 {
    double tx = 0.0, ty = 0.0, theta = 0.0;

    static SE2 identity() { return {}; }

    Vec2 apply(const Vec2& p) const {
        double c = std::cos(theta), s = std::sin(theta);
        return {tx + c * p.x - s * p.y, ty + s * p.x + c * p.y};
    }

    double apply_heading(double h) const { return wrap_angle(theta + h); }

    SE2 compose(const SE2& o) const {
        Vec2 t = apply({o.tx, o.ty});
        return {t.x, t.y, wrap_angle(theta + o.theta)};
    }

    SE2 inverse() const {
        double c = std::cos(theta), s = std::sin(theta);
        return {-c * tx - s * ty, s * tx - c * ty, wrap_angle(-theta)};
    }
};

}  // namespace vw::scene
