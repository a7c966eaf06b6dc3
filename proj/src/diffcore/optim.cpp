#include "vectorworld/diffcore/optim.hpp"

#include <cmath>

namespace vw::diff {

AdamW::AdamW(std::shared_ptr<ParamStore> store, AdamWConfig cfg)
    : store_(std::move(store)), cfg_(cfg) {}

double AdamW::current_lr() const {
    double lr = cfg_.lr;
    int t = t_ + 1;
    if (cfg_.warmup_steps > 0 && t <= cfg_.warmup_steps)
        return lr * static_cast<double>(t) / cfg_.warmup_steps;
    if (cfg_.linear_decay && cfg_.total_steps > cfg_.warmup_steps) {
        double frac = static_cast<double>(t - cfg_.warmup_steps) /
                      (cfg_.total_steps - cfg_.warmup_steps);
        if (frac > 1.0) frac = 1.0;
        return lr * (1.0 - frac) + lr * 0.01 * frac;  // decay to 1% of base
    }
    return lr;
}

void AdamW::step(const Bindings& grads) {
    double lr = current_lr();
    ++t_;

    double scale = 1.0;
    if (cfg_.grad_clip > 0.0) {
        double sq = 0.0;
        for (const auto& name : store_->names()) {
            auto it = grads.find(name);
            if (it == grads.end()) continue;
            for (double v : it->second.values()) sq += v * v;
        }
        double norm = std::sqrt(sq);
        if (norm > cfg_.grad_clip) scale = cfg_.grad_clip / norm;
    }

    double b1t = 1.0 - std::pow(cfg_.beta1, t_);
    double b2t = 1.0 - std::pow(cfg_.beta2, t_);

    for (const auto& name : store_->names()) {
        auto it = grads.find(name);
        if (it == grads.end()) continue;
        Tensor& p = store_->get(name);
        const Tensor& g = it->second;
        auto& m = m_[name];
        auto& v = v_[name];
        if (m.empty()) {
            m.assign(p.size(), 0.0);
            v.assign(p.size(), 0.0);
        }
        for (size_t i = 0; i < p.size(); ++i) {
            double gi = g[i] * scale;
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            double mh = m[i] / b1t;
            double vh = v[i] / b2t;
            p[i] -= lr * (mh / (std::sqrt(vh) + cfg_.eps) + cfg_.weight_decay * p[i]);
        }
    }
}

}  // namespace vw::diff
