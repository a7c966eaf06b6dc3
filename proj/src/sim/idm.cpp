#include "vectorworld/sim/idm.hpp"

#include <cmath>

namespace vw::sim {

double idm_acceleration(double v, const std::optional<Lead>& lead, const IdmParams& p) {
    double free_term = std::pow(v / p.v0, p.exponent);
    if (!lead) return p.a_max * (1.0 - free_term);
    double dv = v - lead->speed;
    double s_star = p.s0 + std::max(0.0, v * p.T + v * dv / (2.0 * std::sqrt(p.a_max * p.b)));
    double s = std::max(lead->gap, 1e-3);
    return p.a_max * (1.0 - free_term - (s_star / s) * (s_star / s));
}

}  // namespace vw::sim
