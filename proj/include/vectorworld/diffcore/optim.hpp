#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "vectorworld/diffcore/graph.hpp"

namespace vw::diff {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
    double weight_decay = 0.0;
    double grad_clip = 10.0;  // global norm; <=0 disables
    int warmup_steps = 0;
    int total_steps = 0;        // for linear decay; 0 = constant after warmup
    bool linear_decay = false;
};

// Single-threaded AdamW over a ParamStore; updates iterate parameters
// in insertion order, so identical seeds and data give bit-identical
// parameters after any number of steps.
class AdamW {
public:
    AdamW(std::shared_ptr<ParamStore> store, AdamWConfig cfg);

    // grads keyed by parameter name; absent entries are skipped
    void step(const Bindings& grads);

    double current_lr() const;
    int steps_taken() const { return t_; }

private:
    std::shared_ptr<ParamStore> store_;
    AdamWConfig cfg_;
    int t_ = 0;
    std::unordered_map<std::string, std::vector<double>> m_, v_;
};

}  // namespace vw::diff
