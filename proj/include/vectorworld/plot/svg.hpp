#pragma once

#include <string>
#include <vector>

namespace vw::plot {

// one sweep operating point, as produced by `bench`
struct SweepRow {
    std::string mode;
    int k = 0;
    double epd = 0.0;
    double agent_jsd = 0.0;
    double wall_ms = 0.0;
    double validity = 0.0;  // percent
    long backbone_calls = 0;
    long graph_evals = 0;
};

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(const std::string& path);

// Quality-latency scatter: EPD and mean agent-JSD against wall time,
// with a vertical streaming-budget marker. The root element carries
// data-xmin/data-xmax/data-plotw/data-ml so the axis transform is
// checkable from the emitted file. Throws on fewer than 2 rows... an
// empty report cannot be plotted.
std::string emit_plot_svg(const std::vector<SweepRow>& rows, double budget_ms = 30.0);

}  // namespace vw::plot
