#include <cmath>
#include <stdexcept>

#include "vectorworld/metrics/metrics.hpp"

namespace vw::metrics {

void sym_eig(std::vector<double> a, int n, std::vector<double>& evals,
             std::vector<double>& evecs) {
    evecs.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) evecs[static_cast<size_t>(i) * n + i] = 1.0;
    auto A = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };
    auto V = [&](int i, int j) -> double& { return evecs[static_cast<size_t>(i) * n + j]; };

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
        if (off < 1e-24) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = A(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    evals.resize(n);
    for (int i = 0; i < n; ++i) evals[i] = A(i, i);
}

namespace {
struct Moments {
    std::vector<double> mu;
    std::vector<double> cov;  // row-major d x d, ddof = 1
};

Moments moments(const std::vector<std::vector<double>>& x) {
    size_t n = x.size();
    size_t d = x[0].size();
    Moments m;
    m.mu.assign(d, 0.0);
    for (const auto& row : x)
        for (size_t j = 0; j < d; ++j) m.mu[j] += row[j];
    for (size_t j = 0; j < d; ++j) m.mu[j] /= static_cast<double>(n);
    m.cov.assign(d * d, 0.0);
    if (n > 1) {
        for (const auto& row : x)
            for (size_t i = 0; i < d; ++i)
                for (size_t j = 0; j < d; ++j)
                    m.cov[i * d + j] += (row[i] - m.mu[i]) * (row[j] - m.mu[j]);
        for (auto& v : m.cov) v /= static_cast<double>(n - 1);
    }
    return m;
}

double min_eig(const std::vector<double>& cov, int d) {
    std::vector<double> evals, evecs;
    sym_eig(cov, d, evals, evecs);
    double m = evals[0];
    for (double v : evals) m = std::min(m, v);
    return m;
}

// B = V diag(f(evals)) V^T
std::vector<double> eig_apply(const std::vector<double>& evals, const std::vector<double>& evecs,
                              int d, double (*f)(double)) {
    std::vector<double> out(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k)
                acc += evecs[static_cast<size_t>(i) * d + k] * f(evals[k]) *
                       evecs[static_cast<size_t>(j) * d + k];
            out[static_cast<size_t>(i) * d + j] = acc;
        }
    return out;
}

double sqrt_clip(double x) { return x > 0.0 ? std::sqrt(x) : 0.0; }
}  // namespace

FdResult embedding_fd(const std::vector<std::vector<double>>& generated,
                      const std::vector<std::vector<double>>& reference, const FdOptions& opt) {
    if (generated.size() < 2 || reference.size() < 2)
        throw std::runtime_error("embedding_fd: need at least 2 samples per side");
    int d = static_cast<int>(generated[0].size());
    Moments g = moments(generated);
    Moments r = moments(reference);

    FdResult result;
    if (min_eig(g.cov, d) < 1e-10 || min_eig(r.cov, d) < 1e-10) {
        for (int i = 0; i < d; ++i) {
            g.cov[static_cast<size_t>(i) * d + i] += opt.jitter;
            r.cov[static_cast<size_t>(i) * d + i] += opt.jitter;
        }
        result.jitter_applied = true;
    }

    double mean_term = 0.0;
    for (int i = 0; i < d; ++i) {
        double dm = g.mu[i] - r.mu[i];
        mean_term += dm * dm;
    }

    std::vector<double> evals, evecs;
    sym_eig(g.cov, d, evals, evecs);
    for (double& v : evals)
        if (v < 0.0) v = v < opt.eig_clip_tol ? 0.0 : 0.0;  // clip, tolerance documented
    std::vector<double> gs = eig_apply(evals, evecs, d, sqrt_clip);

    // A = gs * r.cov * gs, symmetrized
    std::vector<double> tmp(static_cast<size_t>(d) * d, 0.0), a(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += gs[i * d + k] * r.cov[k * d + j];
            tmp[i * d + j] = acc;
        }
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += tmp[i * d + k] * gs[k * d + j];
            a[i * d + j] = acc;
        }
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            double s = 0.5 * (a[i * d + j] + a[j * d + i]);
            a[i * d + j] = a[j * d + i] = s;
        }

    std::vector<double> evals2, evecs2;
    sym_eig(a, d, evals2, evecs2);
    double tr_sqrt = 0.0;
    for (double v : evals2) tr_sqrt += sqrt_clip(v);

    double tr_g = 0.0, tr_r = 0.0;
    for (int i = 0; i < d; ++i) {
        tr_g += g.cov[static_cast<size_t>(i) * d + i];
        tr_r += r.cov[static_cast<size_t>(i) * d + i];
    }
    double df = mean_term + tr_g + tr_r - 2.0 * tr_sqrt;
    result.fd = std::sqrt(std::max(df, 0.0));
    return result;
}

double gaussian_fd_1d(double mu1, double var1, double mu2, double var2) {
    double s1 = sqrt_clip(var1), s2 = sqrt_clip(var2);
    double df = (mu1 - mu2) * (mu1 - mu2) + var1 + var2 - 2.0 * s1 * s2;
    return std::sqrt(std::max(df, 0.0));
}

}  // namespace vw::metrics
