#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vectorworld/dit/model.hpp"
#include "vectorworld/util/rng.hpp"

namespace vw::dyn {

using diff::Tensor;

enum class Mode { Ddpm, Flow, MeanFlow };
Mode mode_from_string(const std::string& s);
const char* mode_name(Mode m);

// DDPM discrete schedule; alpha_bar[0] = 1, monotone non-increasing.
struct NoiseSchedule {
    int steps = 100;
    std::vector<double> beta;       // 1-indexed via beta[n-1]
    std::vector<double> alpha_bar;  // size steps+1

    static NoiseSchedule linear(int steps, double beta_lo = 1e-4, double beta_hi = 0.02);
};

// Lane/agent latent tokens with per-token clamp masks.
struct LatentState {
    Tensor z_lane;   // N_l x d_lane
    Tensor z_agent;  // N_a x d_agent
    std::vector<bool> lane_clamped;
    std::vector<bool> agent_clamped;

    bool any_unclamped() const;
};

// z_n per the forward noising rule; clamped rows keep z_n = z0 (their
// training target is zero noise)
void ddpm_forward_noise(const LatentState& z0, int n, const Tensor& eps_lane,
                        const Tensor& eps_agent, const NoiseSchedule& sched, LatentState* zn);

// straight-line path: z_t = (1-t) z0 + t eps, v* = eps - z0; clamped
// rows use the constant path (z_t = z0, v* = 0)
void flow_path(const LatentState& z0, const Tensor& eps_lane, const Tensor& eps_agent, double t,
               LatentState* zt, Tensor* vstar_lane, Tensor* vstar_agent);

struct TimeSamplerConfig {
    double loc = 0.0;
    double scale = 1.0;
    double frac_r_eq_t = 0.25;
    double frac_one_zero = 0.1;
};

// (t, r) with r <= t; configured fractions hit r=t and (1,0)
std::pair<double, double> sample_times(const TimeSamplerConfig& cfg, Rng& rng);

struct GuidanceConfig {
    double scale = 1.0;          // s = 1 keeps one field evaluation per step
    double label_dropout = 0.1;  // training-time
};

Tensor cfg_combine(const Tensor& u_cond, const Tensor& u_uncond, double s);

struct AdaptiveWeightConfig {
    bool enabled = true;
    double p = 0.8;
    double c = 1e-3;

    double weight(double loss) const { return enabled ? std::pow(loss + c, -p) : 1.0; }
};

// V = u + delta * du/dt with the JVP detached; delta = t - r. The
// delta = 0 branch returns u bit-exactly.
dit::FieldOut meanflow_corrected_predictor(dit::DitModel& model, const LatentState& zt, double t,
                                           double r, const dit::DitCond& cond,
                                           dit::FieldOut* u_out = nullptr);

// field abstraction used by the sampler; may wrap the learned model,
// a CFG pair, or an oracle stub
using FieldFn = std::function<dit::FieldOut(const Tensor& z_lane, const Tensor& z_agent, double t,
                                            double delta)>;

struct SampleStats {
    long field_evals = 0;  // one per sampler step
};

// K-step reverse transport with masked clamping. meanflow uses the
// large-step rule on a uniform grid; flow uses explicit Euler; ddpm
// iterates the reverse chain (K must equal the schedule length).
LatentState sample(Mode mode, const FieldFn& field, int k_steps, const NoiseSchedule* sched,
                   const LatentState& init, Rng& rng, SampleStats* stats = nullptr);

}  // namespace vw::dyn
