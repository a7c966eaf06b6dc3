#include <cmath>
#include <stdexcept>

#include "vectorworld/dynamics/dynamics.hpp"

namespace vw::dyn {

Mode mode_from_string(const std::string& s) {
    if (s == "ddpm") return Mode::Ddpm;
    if (s == "flow") return Mode::Flow;
    if (s == "meanflow") return Mode::MeanFlow;
    throw std::runtime_error("unknown dynamics mode '" + s + "'");
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Ddpm: return "ddpm";
        case Mode::Flow: return "flow";
        case Mode::MeanFlow: return "meanflow";
    }
    return "?";
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_lo, double beta_hi) {
    NoiseSchedule s;
    s.steps = steps;
    s.beta.resize(steps);
    s.alpha_bar.resize(steps + 1);
    s.alpha_bar[0] = 1.0;
    for (int n = 1; n <= steps; ++n) {
        double b = beta_lo + (beta_hi - beta_lo) * (n - 1) / std::max(1, steps - 1);
        s.beta[n - 1] = b;
        s.alpha_bar[n] = s.alpha_bar[n - 1] * (1.0 - b);
    }
    return s;
}

bool LatentState::any_unclamped() const {
    for (bool c : lane_clamped)
        if (!c) return true;
    for (bool c : agent_clamped)
        if (!c) return true;
    return false;
}

void ddpm_forward_noise(const LatentState& z0, int n, const Tensor& eps_lane,
                        const Tensor& eps_agent, const NoiseSchedule& sched, LatentState* zn) {
    if (n < 0 || n > sched.steps) throw std::runtime_error("ddpm_forward_noise: n out of range");
    double ab = sched.alpha_bar[n];
    double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    *zn = z0;
    for (int i = 0; i < z0.z_lane.rows(); ++i) {
        if (z0.lane_clamped[i]) continue;
        for (int d = 0; d < z0.z_lane.cols(); ++d)
            zn->z_lane.at(i, d) = a * z0.z_lane.at(i, d) + b * eps_lane.at(i, d);
    }
    for (int i = 0; i < z0.z_agent.rows(); ++i) {
        if (z0.agent_clamped[i]) continue;
        for (int d = 0; d < z0.z_agent.cols(); ++d)
            zn->z_agent.at(i, d) = a * z0.z_agent.at(i, d) + b * eps_agent.at(i, d);
    }
}

void flow_path(const LatentState& z0, const Tensor& eps_lane, const Tensor& eps_agent, double t,
               LatentState* zt, Tensor* vstar_lane, Tensor* vstar_agent) {
    *zt = z0;
    *vstar_lane = Tensor::zeros(z0.z_lane.rows(), z0.z_lane.cols());
    *vstar_agent = Tensor::zeros(z0.z_agent.rows(), z0.z_agent.cols());
    for (int i = 0; i < z0.z_lane.rows(); ++i) {
        if (z0.lane_clamped[i]) continue;  // eps := z0 gives a constant path
        for (int d = 0; d < z0.z_lane.cols(); ++d) {
            double z = z0.z_lane.at(i, d), e = eps_lane.at(i, d);
            zt->z_lane.at(i, d) = (1.0 - t) * z + t * e;
            vstar_lane->at(i, d) = e - z;
        }
    }
    for (int i = 0; i < z0.z_agent.rows(); ++i) {
        if (z0.agent_clamped[i]) continue;
        for (int d = 0; d < z0.z_agent.cols(); ++d) {
            double z = z0.z_agent.at(i, d), e = eps_agent.at(i, d);
            zt->z_agent.at(i, d) = (1.0 - t) * z + t * e;
            vstar_agent->at(i, d) = e - z;
        }
    }
}

std::pair<double, double> sample_times(const TimeSamplerConfig& cfg, Rng& rng) {
    double roll = rng.uniform();
    auto logit_normal = [&]() {
        double x = cfg.loc + cfg.scale * rng.normal();
        return 1.0 / (1.0 + std::exp(-x));
    };
    if (roll < cfg.frac_one_zero) {
        // draws are consumed either way so the stream stays aligned
        (void)logit_normal();
        (void)logit_normal();
        return {1.0, 0.0};
    }
    double a = logit_normal();
    double b = logit_normal();
    if (roll < cfg.frac_one_zero + cfg.frac_r_eq_t) return {a, a};
    double t = std::max(a, b), r = std::min(a, b);
    return {t, r};
}

Tensor cfg_combine(const Tensor& u_cond, const Tensor& u_uncond, double s) {
    if (!u_cond.same_shape(u_uncond)) throw std::runtime_error("cfg_combine: shape mismatch");
    Tensor out = u_uncond;
    for (size_t i = 0; i < out.size(); ++i) out[i] = u_uncond[i] + s * (u_cond[i] - u_uncond[i]);
    return out;
}

dit::FieldOut meanflow_corrected_predictor(dit::DitModel& model, const LatentState& zt, double t,
                                           double r, const dit::DitCond& cond,
                                           dit::FieldOut* u_out) {
    double delta = t - r;
    dit::FieldOut u = model.forward(zt.z_lane, zt.z_agent, t, delta, cond);
    if (u_out) *u_out = u;
    if (delta == 0.0) return u;  // the correction term vanishes exactly

    dit::FieldOut v = model.forward(zt.z_lane, zt.z_agent, t, 0.0, cond);
    dit::FieldOut dudt =
        model.jvp_total_derivative(zt.z_lane, zt.z_agent, t, delta, cond, v.lane, v.agent);

    dit::FieldOut out = u;
    for (size_t i = 0; i < out.lane.size(); ++i) out.lane[i] += delta * dudt.lane[i];
    for (size_t i = 0; i < out.agent.size(); ++i) out.agent[i] += delta * dudt.agent[i];
    return out;
}

}  // namespace vw::dyn
