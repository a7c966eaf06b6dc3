#pragma once

#include "vectorworld/deltasim/vocab.hpp"
#include "vectorworld/diffcore/graph.hpp"
#include "vectorworld/nn/builders.hpp"

namespace vw::dsim {

struct KinematicLimits {
    double yaw_rate = 1.0;    // rad/s
    double curvature = 0.3;   // 1/m
    double lat_accel = 4.0;   // m/s^2
    double lon_accel = 3.0;   // m/s^2, jerk proxy threshold
    double shaping = 1.0;     // lambda
    double dkal = 0.1;        // lambda_dkal
    double refine = 1.0;      // alpha
};

// per-token geometry-derived quantities, independent of speed
struct TokenKinematics {
    std::vector<double> yaw_rate;   // |dtheta| / dt
    std::vector<double> curvature;  // |2 sin(dtheta/2)| / dist
    std::vector<double> reverse;    // backward displacement rate, m/s
    std::vector<double> accel_abs;  // |dist/dt - v| / dt needs v; store dist/dt
    std::vector<double> speed_out;  // dist / dt
};
TokenKinematics token_kinematics(const KDisksVocab& vocab, double dt);

// smooth per-token cost at the given state speed (softplus excesses)
std::vector<double> kinematic_cost(double speed, const KDisksVocab& vocab, double dt,
                                   const KinematicLimits& lim);

// the same cost as a graph over a 1x1 speed input, for training losses
// and the differentiability check; outputs a 1 x K row
int kinematic_cost_graph(nn::Builder& b, const std::string& speed_input_name,
                         const KDisksVocab& vocab, double dt, const KinematicLimits& lim);

// hard violation check used by closed-loop metrics
bool violates(const Delta& d, double dt, double speed, const KinematicLimits& lim);

// shaped logits l - lambda * C
std::vector<double> shape_logits(const std::vector<double>& logits, const std::vector<double>& cost,
                                 double lambda);

// || ctr(l) + lambda * ctr(C) ||^2 over the vocabulary axis
double dkal_loss(const std::vector<double>& logits, const std::vector<double>& cost,
                 double lambda_dkal);

}  // namespace vw::dsim
