#pragma once

#include <vector>

namespace vw::dsim {

struct RtgConfig {
    int bins = 350;
    double discount = 0.97;
    int horizon = 50;
    double value_lo = -30.0;
    double value_hi = 40.0;

    double bin_value(int j) const {  // bin centers, ascending
        double w = (value_hi - value_lo) / bins;
        return value_lo + (j + 0.5) * w;
    }
    int bin_of(double v) const;
    std::vector<double> values() const;
};

// discounted return-to-go over the fixed horizon, zero-padded past the
// end of the reward sequence
std::vector<double> rtg_values(const std::vector<double>& rewards, const RtgConfig& cfg);
std::vector<int> rtg_bins(const std::vector<double>& rtg, const RtgConfig& cfg);

// p'_j proportional to p_j * exp(kappa * v_j)
std::vector<double> tilt_rtg(const std::vector<double>& p, const std::vector<double>& values,
                             double kappa);

double expected_value(const std::vector<double>& p, const std::vector<double>& values);

}  // namespace vw::dsim
