#pragma once

#include <optional>

namespace vw::sim {

struct IdmParams {
    double v0 = 10.0;     // desired speed, m/s
    double T = 1.5;       // headway, s
    double a_max = 2.0;   // m/s^2
    double b = 3.0;       // comfortable braking, m/s^2
    double s0 = 2.0;      // minimum spacing, m
    double exponent = 4.0;
};

struct Lead {
    double gap = 0.0;    // bumper gap, m (> 0)
    double speed = 0.0;  // lead speed, m/s
};

double idm_acceleration(double v, const std::optional<Lead>& lead, const IdmParams& p);

}  // namespace vw::sim
