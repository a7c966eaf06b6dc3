#include "vectorworld/deltasim/cost.hpp"

#include <cmath>

namespace vw::dsim {

namespace {
constexpr double kSharp = 8.0;  // hinge sharpness; in-limit tokens cost ~0
constexpr double kMinDist = 0.05;  // curvature guard for near-zero displacement

double hinge(double x) {
    double y = kSharp * x;
    return (std::log1p(std::exp(-std::fabs(y))) + std::max(y, 0.0)) / kSharp;
}

double smooth_mag(double x) { return std::sqrt(x * x + 1e-12) - 1e-6; }
}  // namespace

TokenKinematics token_kinematics(const KDisksVocab& vocab, double dt) {
    TokenKinematics tk;
    int k = vocab.size();
    tk.yaw_rate.resize(k);
    tk.curvature.resize(k);
    tk.reverse.resize(k);
    tk.speed_out.resize(k);
    for (int i = 0; i < k; ++i) {
        const Delta& d = vocab[i];
        double dist = std::hypot(d.dx, d.dy);
        tk.yaw_rate[i] = std::fabs(d.dtheta) / dt;
        tk.curvature[i] = std::fabs(2.0 * std::sin(d.dtheta / 2.0)) / std::max(dist, kMinDist);
        tk.reverse[i] = std::max(0.0, -d.dx) / dt;
        tk.speed_out[i] = dist / dt;
    }
    return tk;
}

std::vector<double> kinematic_cost(double speed, const KDisksVocab& vocab, double dt,
                                   const KinematicLimits& lim) {
    TokenKinematics tk = token_kinematics(vocab, dt);
    std::vector<double> c(vocab.size());
    for (int i = 0; i < vocab.size(); ++i) {
        double lat = speed * speed * tk.curvature[i];
        double lon = smooth_mag(tk.speed_out[i] - speed) / dt;
        c[i] = hinge(tk.yaw_rate[i] - lim.yaw_rate) + hinge(tk.curvature[i] - lim.curvature) +
               hinge(lat - lim.lat_accel) + hinge(lon - lim.lon_accel) +
               hinge(tk.reverse[i] - 0.5);
    }
    return c;
}

int kinematic_cost_graph(nn::Builder& b, const std::string& speed_input_name,
                         const KDisksVocab& vocab, double dt, const KinematicLimits& lim) {
    using diff::Tensor;
    diff::Graph& g = b.graph();
    int k = vocab.size();
    TokenKinematics tk = token_kinematics(vocab, dt);

    Tensor yaw_excess = diff::Tensor::zeros(1, k);
    Tensor curv_excess = diff::Tensor::zeros(1, k);
    Tensor curv_row = diff::Tensor::zeros(1, k);
    Tensor rev_excess = diff::Tensor::zeros(1, k);
    Tensor vout_row = diff::Tensor::zeros(1, k);
    for (int i = 0; i < k; ++i) {
        yaw_excess[i] = tk.yaw_rate[i] - lim.yaw_rate;
        curv_excess[i] = tk.curvature[i] - lim.curvature;
        curv_row[i] = tk.curvature[i];
        rev_excess[i] = tk.reverse[i] - 0.5;
        vout_row[i] = tk.speed_out[i];
    }
    int speed = g.input(speed_input_name, 1, 1);
    auto sharp_hinge = [&](int x) { return g.scale(g.softplus(g.scale(x, 8.0)), 1.0 / 8.0); };
    int fixed = g.add(sharp_hinge(g.constant(yaw_excess)),
                      g.add(sharp_hinge(g.constant(curv_excess)), sharp_hinge(g.constant(rev_excess))));
    int lat = g.sub(g.mul(g.square(speed), g.constant(curv_row)), g.constant(lim.lat_accel));
    // |v_out - v| via the same smooth magnitude as the host cost
    int dv = g.smooth_abs(g.sub(g.constant(vout_row), speed), 1e-6);
    int lon = g.add_scalar(g.scale(dv, 1.0 / dt), -lim.lon_accel);
    return g.add(fixed, g.add(sharp_hinge(lat), sharp_hinge(lon)));
}

bool violates(const Delta& d, double dt, double speed, const KinematicLimits& lim) {
    double dist = std::hypot(d.dx, d.dy);
    double yaw = std::fabs(d.dtheta) / dt;
    double curv = std::fabs(2.0 * std::sin(d.dtheta / 2.0)) / std::max(dist, kMinDist);
    double lat = speed * speed * curv;
    return yaw > lim.yaw_rate || curv > lim.curvature || lat > lim.lat_accel;
}

std::vector<double> shape_logits(const std::vector<double>& logits, const std::vector<double>& cost,
                                 double lambda) {
    std::vector<double> out(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lambda * cost[i];
    return out;
}

double dkal_loss(const std::vector<double>& logits, const std::vector<double>& cost,
                 double lambda_dkal) {
    double ml = 0.0, mc = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        ml += logits[i];
        mc += cost[i];
    }
    ml /= logits.size();
    mc /= cost.size();
    double acc = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        double v = (logits[i] - ml) + lambda_dkal * (cost[i] - mc);
        acc += v * v;
    }
    return acc;
}

}  // namespace vw::dsim
