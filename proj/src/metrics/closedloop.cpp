#include "vectorworld/metrics/closedloop.hpp"

#include <stdexcept>

#include "vectorworld/metrics/metrics.hpp"

namespace vw::metrics {

MetricReport closed_loop_report(const std::vector<sim::EpisodeLog>& episodes, double dt) {
    if (episodes.empty()) throw std::runtime_error("closed_loop_report: no episodes");
    int n = static_cast<int>(episodes.size());
    int coll = 0, off = 0, succ = 0, timeout = 0;
    double progress = 0.0;
    std::vector<double> jerks;
    long viol = 0, actions = 0;
    for (const auto& e : episodes) {
        switch (e.cause) {
            case sim::TermCause::Collision: ++coll; break;
            case sim::TermCause::OffRoute: ++off; break;
            case sim::TermCause::Success: ++succ; break;
            case sim::TermCause::Timeout: ++timeout; break;
        }
        progress += e.route_progress;
        jerks.push_back(jerk_p95(e.ego_speed_series(), dt));
        viol += e.violation_steps;
        actions += e.action_steps;
    }
    MetricReport r;
    r.add("episodes", MetricValue::of(n, n));
    r.add("collision_rate", MetricValue::of(100.0 * coll / n, n, "%"));
    r.add("offroute_rate", MetricValue::of(100.0 * off / n, n, "%"));
    r.add("success_rate", MetricValue::of(100.0 * succ / n, n, "%"));
    r.add("timeout_rate", MetricValue::of(100.0 * timeout / n, n, "%"));
    r.add("failure_rate", MetricValue::of(100.0 * (n - succ) / n, n, "%"));
    r.add("route_progress_mean", MetricValue::of(progress / n, n, "m"));
    double jsum = 0.0;
    for (double j : jerks) jsum += j;
    r.add("jerk_p95_mean", MetricValue::of(jsum / n, n, "m/s^3"));
    r.add("jerk_p95_median", MetricValue::of(percentile(jerks, 50.0), n, "m/s^3"));
    if (actions > 0)
        r.add("npc_violation_rate", MetricValue::of(100.0 * viol / static_cast<double>(actions),
                                                    static_cast<int>(actions), "%"));
    else
        r.add("npc_violation_rate", MetricValue::none("no NPC decisions"));
    return r;
}

}  // namespace vw::metrics
