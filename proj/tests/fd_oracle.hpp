#pragma once

// Finite-difference oracles used by the autodiff tests. These stay
// independent of the reverse/forward implementations they check: they
// only call evaluate() with perturbed bindings / parameters.

#include <cmath>
#include <string>

#include "vectorworld/diffcore/graph.hpp"

namespace vw::testing {

inline double eval_scalar(const vw::diff::Graph& g, const vw::diff::Bindings& in,
                          const std::string& out) {
    auto r = vw::diff::evaluate(g, in);
    return r.outputs.at(out).item();
}

// central differences w.r.t. every input entry
inline vw::diff::Bindings fd_grad_inputs(const vw::diff::Graph& g, const vw::diff::Bindings& in,
                                         const std::string& out, double h) {
    vw::diff::Bindings grads;
    for (const auto& [name, t] : in) {
        vw::diff::Tensor gt = vw::diff::Tensor::zeros(t.rows(), t.cols());
        for (size_t i = 0; i < t.size(); ++i) {
            vw::diff::Bindings p = in;
            p[name][i] = t[i] + h;
            double fp = eval_scalar(g, p, out);
            p[name][i] = t[i] - h;
            double fm = eval_scalar(g, p, out);
            gt[i] = (fp - fm) / (2.0 * h);
        }
        grads.emplace(name, std::move(gt));
    }
    return grads;
}

// central differences w.r.t. every parameter entry (store is restored)
inline vw::diff::Bindings fd_grad_params(const vw::diff::Graph& g, const vw::diff::Bindings& in,
                                         const std::string& out, double h) {
    vw::diff::Bindings grads;
    auto store = g.store();
    for (const auto& [name, id] : g.params()) {
        (void)id;
        vw::diff::Tensor& p = store->get(name);
        vw::diff::Tensor gt = vw::diff::Tensor::zeros(p.rows(), p.cols());
        for (size_t i = 0; i < p.size(); ++i) {
            double save = p[i];
            p[i] = save + h;
            double fp = eval_scalar(g, in, out);
            p[i] = save - h;
            double fm = eval_scalar(g, in, out);
            p[i] = save;
            gt[i] = (fp - fm) / (2.0 * h);
        }
        grads.emplace(name, std::move(gt));
    }
    return grads;
}

// directional derivative (f(x+hv) - f(x-hv)) / 2h of a scalar output
inline double fd_directional(const vw::diff::Graph& g, const vw::diff::Bindings& in,
                             const vw::diff::Bindings& tangents, const std::string& out,
                             double h) {
    vw::diff::Bindings plus = in, minus = in;
    for (const auto& [name, v] : tangents) {
        for (size_t i = 0; i < v.size(); ++i) {
            plus[name][i] += h * v[i];
            minus[name][i] -= h * v[i];
        }
    }
    return (eval_scalar(g, plus, out) - eval_scalar(g, minus, out)) / (2.0 * h);
}

// mixed absolute/relative error, elementwise max
inline double rel_err(const vw::diff::Tensor& a, const vw::diff::Tensor& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = std::fabs(a[i] - b[i]);
        double s = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
        worst = std::max(worst, d / s);
    }
    return worst;
}

inline double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace vw::testing
