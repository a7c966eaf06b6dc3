#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vectorworld/metrics/metrics.hpp"

namespace vw::metrics {

double jsd_discrete(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::runtime_error("jsd: size mismatch");
    auto kl_to_mix = [&](const std::vector<double>& a) {
        double kl = 0.0;
        for (size_t i = 0; i < a.size(); ++i) {
            if (a[i] <= 0.0) continue;  // 0 * log(0/m) = 0
            double m = 0.5 * (p[i] + q[i]);
            kl += a[i] * std::log(a[i] / m);
        }
        return kl;
    };
    return 0.5 * kl_to_mix(p) + 0.5 * kl_to_mix(q);
}

namespace {
std::vector<double> normalized_histogram(const std::vector<double>& samples,
                                         const HistogramConfig& cfg) {
    std::vector<double> h(static_cast<size_t>(cfg.bins), 0.0);
    for (double x : samples) {
        double c = std::clamp(x, cfg.lo, cfg.hi);
        int b = static_cast<int>((c - cfg.lo) / (cfg.hi - cfg.lo) * cfg.bins);
        b = std::clamp(b, 0, cfg.bins - 1);
        h[b] += 1.0;
    }
    double total = static_cast<double>(samples.size());
    for (auto& v : h) v /= total;
    return h;
}
}  // namespace

double histogram_jsd(const std::vector<double>& p_samples, const std::vector<double>& q_samples,
                     const HistogramConfig& cfg) {
    if (p_samples.empty() || q_samples.empty())
        throw std::runtime_error("histogram_jsd: empty samples");
    return jsd_discrete(normalized_histogram(p_samples, cfg), normalized_histogram(q_samples, cfg));
}

}  // namespace vw::metrics
