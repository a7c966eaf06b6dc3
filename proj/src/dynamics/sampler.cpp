#include <stdexcept>

#include "vectorworld/dynamics/dynamics.hpp"

namespace vw::dyn {

namespace {
void fill_noise_unclamped(LatentState* z, Rng& rng) {
    for (int i = 0; i < z->z_lane.rows(); ++i) {
        if (z->lane_clamped[i]) continue;
        for (int d = 0; d < z->z_lane.cols(); ++d) z->z_lane.at(i, d) = rng.normal();
    }
    for (int i = 0; i < z->z_agent.rows(); ++i) {
        if (z->agent_clamped[i]) continue;
        for (int d = 0; d < z->z_agent.cols(); ++d) z->z_agent.at(i, d) = rng.normal();
    }
}

void axpy_unclamped(LatentState* z, double a, const dit::FieldOut& u) {
    for (int i = 0; i < z->z_lane.rows(); ++i) {
        if (z->lane_clamped[i]) continue;
        for (int d = 0; d < z->z_lane.cols(); ++d) z->z_lane.at(i, d) += a * u.lane.at(i, d);
    }
    for (int i = 0; i < z->z_agent.rows(); ++i) {
        if (z->agent_clamped[i]) continue;
        for (int d = 0; d < z->z_agent.cols(); ++d) z->z_agent.at(i, d) += a * u.agent.at(i, d);
    }
}
}  // namespace

LatentState sample(Mode mode, const FieldFn& field, int k_steps, const NoiseSchedule* sched,
                   const LatentState& init, Rng& rng, SampleStats* stats) {
    if (k_steps < 1) throw std::runtime_error("sample: K must be >= 1");
    LatentState z = init;
    fill_noise_unclamped(&z, rng);
    SampleStats local;
    SampleStats* st = stats ? stats : &local;

    if (mode == Mode::MeanFlow) {
        for (int k = 0; k < k_steps; ++k) {
            double t_cur = 1.0 - static_cast<double>(k) / k_steps;
            double t_next = 1.0 - static_cast<double>(k + 1) / k_steps;
            double delta = t_cur - t_next;
            dit::FieldOut u = field(z.z_lane, z.z_agent, t_cur, delta);
            ++st->field_evals;
            axpy_unclamped(&z, -delta, u);
        }
        return z;
    }
    if (mode == Mode::Flow) {
        for (int k = 0; k < k_steps; ++k) {
            double t_cur = 1.0 - static_cast<double>(k) / k_steps;
            double dt = 1.0 / k_steps;
            dit::FieldOut v = field(z.z_lane, z.z_agent, t_cur, 0.0);
            ++st->field_evals;
            axpy_unclamped(&z, -dt, v);
        }
        return z;
    }

    // ddpm reverse chain
    if (!sched) throw std::runtime_error("sample: ddpm needs a schedule");
    if (k_steps != sched->steps)
        throw std::runtime_error("sample: ddpm step budget must match the schedule");
    for (int n = sched->steps; n >= 1; --n) {
        double ab_n = sched->alpha_bar[n];
        double ab_prev = sched->alpha_bar[n - 1];
        double beta = sched->beta[n - 1];
        double alpha = 1.0 - beta;
        dit::FieldOut eps = field(z.z_lane, z.z_agent, static_cast<double>(n) / sched->steps, 0.0);
        ++st->field_evals;

        double coef = beta / std::sqrt(1.0 - ab_n);
        double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
        double sigma = n > 1 ? std::sqrt((1.0 - ab_prev) / (1.0 - ab_n) * beta) : 0.0;

        for (int i = 0; i < z.z_lane.rows(); ++i) {
            if (z.lane_clamped[i]) continue;
            for (int d = 0; d < z.z_lane.cols(); ++d) {
                double mean = inv_sqrt_alpha * (z.z_lane.at(i, d) - coef * eps.lane.at(i, d));
                z.z_lane.at(i, d) = mean + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
            }
        }
        for (int i = 0; i < z.z_agent.rows(); ++i) {
            if (z.agent_clamped[i]) continue;
            for (int d = 0; d < z.z_agent.cols(); ++d) {
                double mean = inv_sqrt_alpha * (z.z_agent.at(i, d) - coef * eps.agent.at(i, d));
                z.z_agent.at(i, d) = mean + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
            }
        }
    }
    return z;
}

}  // namespace vw::dyn
