#pragma once

#include "vectorworld/metrics/report.hpp"
#include "vectorworld/sim/log.hpp"

namespace vw::metrics {

// Episode-outcome rates, route progress, ego jerk p95, NPC violation
// rate, failure rate. Requires at least one episode.
MetricReport closed_loop_report(const std::vector<sim::EpisodeLog>& episodes, double dt);

}  // namespace vw::metrics
