#include "vectorworld/deltasim/rtg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vw::dsim {

int RtgConfig::bin_of(double v) const {
    double w = (value_hi - value_lo) / bins;
    int b = static_cast<int>(std::floor((v - value_lo) / w));
    return std::clamp(b, 0, bins - 1);
}

std::vector<double> RtgConfig::values() const {
    std::vector<double> v(bins);
    for (int j = 0; j < bins; ++j) v[j] = bin_value(j);
    return v;
}

std::vector<double> rtg_values(const std::vector<double>& rewards, const RtgConfig& cfg) {
    int n = static_cast<int>(rewards.size());
    std::vector<double> out(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double acc = 0.0, g = 1.0;
        for (int j = 0; j < cfg.horizon; ++j) {
            if (k + j >= n) break;  // zero-padded tail
            acc += g * rewards[k + j];
            g *= cfg.discount;
        }
        out[k] = acc;
    }
    return out;
}

std::vector<int> rtg_bins(const std::vector<double>& rtg, const RtgConfig& cfg) {
    std::vector<int> out(rtg.size());
    for (size_t i = 0; i < rtg.size(); ++i) out[i] = cfg.bin_of(rtg[i]);
    return out;
}

std::vector<double> tilt_rtg(const std::vector<double>& p, const std::vector<double>& values,
                             double kappa) {
    if (p.size() != values.size()) throw std::runtime_error("tilt_rtg: size mismatch");
    // max-shifted for stability; exact for kappa = 0
    double m = -1e300;
    for (size_t j = 0; j < p.size(); ++j)
        if (p[j] > 0.0) m = std::max(m, kappa * values[j]);
    std::vector<double> out(p.size(), 0.0);
    double z = 0.0;
    for (size_t j = 0; j < p.size(); ++j) {
        if (p[j] <= 0.0) continue;
        out[j] = p[j] * std::exp(kappa * values[j] - m);
        z += out[j];
    }
    for (auto& v : out) v /= z;
    return out;
}

double expected_value(const std::vector<double>& p, const std::vector<double>& values) {
    double e = 0.0;
    for (size_t j = 0; j < p.size(); ++j) e += p[j] * values[j];
    return e;
}

}  // namespace vw::dsim
