#include "vectorworld/plot/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vw::plot {

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_sweep_csv: cannot open '" + path + "'");
    os.precision(10);
    os << "mode,K,EPD,agent_jsd_mean,wall_ms,validity,backbone_calls,graph_evals\n";
    for (const auto& r : rows)
        os << r.mode << "," << r.k << "," << r.epd << "," << r.agent_jsd << "," << r.wall_ms << ","
           << r.validity << "," << r.backbone_calls << "," << r.graph_evals << "\n";
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_sweep_csv: cannot open '" + path + "'");
    std::vector<SweepRow> rows;
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        SweepRow r;
        std::istringstream ls(line);
        std::string field;
        std::getline(ls, r.mode, ',');
        std::getline(ls, field, ',');
        r.k = std::stoi(field);
        std::getline(ls, field, ',');
        r.epd = std::stod(field);
        std::getline(ls, field, ',');
        r.agent_jsd = std::stod(field);
        std::getline(ls, field, ',');
        r.wall_ms = std::stod(field);
        std::getline(ls, field, ',');
        r.validity = std::stod(field);
        if (std::getline(ls, field, ',')) r.backbone_calls = std::stol(field);
        if (std::getline(ls, field, ',')) r.graph_evals = std::stol(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string emit_plot_svg(const std::vector<SweepRow>& rows, double budget_ms) {
    if (rows.size() < 2) throw std::runtime_error("emit_plot_svg: need at least 2 rows");

    const double W = 680, H = 420, ML = 60, MR = 60, MT = 40, MB = 50;
    const double PW = W - ML - MR, PH = H - MT - MB;

    double x_min = 0.0, x_max = budget_ms;
    double epd_max = 1e-9, jsd_max = 1e-9;
    for (const auto& r : rows) {
        x_max = std::max(x_max, r.wall_ms);
        epd_max = std::max(epd_max, r.epd);
        jsd_max = std::max(jsd_max, r.agent_jsd);
    }
    x_max *= 1.08;

    auto xpix = [&](double ms) { return ML + (ms - x_min) / (x_max - x_min) * PW; };
    auto ypix_epd = [&](double v) { return MT + PH - v / (epd_max * 1.1) * PH; };
    auto ypix_jsd = [&](double v) { return MT + PH - v / (jsd_max * 1.1) * PH; };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" data-xmin=\"" << x_min << "\" data-xmax=\"" << x_max << "\" data-plotw=\"" << PW
       << "\" data-ml=\"" << ML << "\">\n";
    os << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << PW << "\" height=\"" << PH
       << "\" fill=\"none\" stroke=\"#999\"/>\n";
    os << "<text x=\"" << ML + PW / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-size=\"12\">wall time per tile (ms)</text>\n";
    os << "<text x=\"16\" y=\"" << MT + PH / 2
       << "\" font-size=\"12\" transform=\"rotate(-90 16 " << MT + PH / 2
       << ")\" text-anchor=\"middle\">EPD (m)</text>\n";
    os << "<text x=\"" << W - 14 << "\" y=\"" << MT + PH / 2
       << "\" font-size=\"12\" transform=\"rotate(90 " << W - 14 << " " << MT + PH / 2
       << ")\" text-anchor=\"middle\">agent-JSD mean</text>\n";

    // streaming budget marker
    os << "<line class=\"budget\" x1=\"" << xpix(budget_ms) << "\" y1=\"" << MT << "\" x2=\""
       << xpix(budget_ms) << "\" y2=\"" << MT + PH
       << "\" stroke=\"#cc3333\" stroke-dasharray=\"5,4\"/>\n";
    os << "<text x=\"" << xpix(budget_ms) + 4 << "\" y=\"" << MT + 14
       << "\" font-size=\"11\" fill=\"#cc3333\">" << budget_ms << " ms budget</text>\n";

    // group rows by mode for polylines
    std::vector<std::string> modes;
    for (const auto& r : rows)
        if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
    const char* colors[] = {"#2266bb", "#22aa66", "#aa7722", "#8844aa"};
    int ci = 0;
    for (const auto& mode : modes) {
        std::vector<const SweepRow*> pts;
        for (const auto& r : rows)
            if (r.mode == mode) pts.push_back(&r);
        std::sort(pts.begin(), pts.end(),
                  [](const SweepRow* a, const SweepRow* b) { return a->wall_ms < b->wall_ms; });
        const char* color = colors[ci++ % 4];

        os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (const auto* p : pts) os << xpix(p->wall_ms) << "," << ypix_epd(p->epd) << " ";
        os << "\"/>\n";
        for (const auto* p : pts) {
            os << "<circle class=\"epd\" cx=\"" << xpix(p->wall_ms) << "\" cy=\""
               << ypix_epd(p->epd) << "\" r=\"4\" fill=\"" << color << "\"><title>" << p->mode
               << "-" << p->k << " EPD " << p->epd << "</title></circle>\n";
            os << "<rect class=\"jsd\" x=\"" << xpix(p->wall_ms) - 3 << "\" y=\""
               << ypix_jsd(p->agent_jsd) - 3 << "\" width=\"6\" height=\"6\" fill=\"none\" stroke=\""
               << color << "\"><title>" << p->mode << "-" << p->k << " JSD " << p->agent_jsd
               << "</title></rect>\n";
        }
        os << "<text x=\"" << ML + 8 << "\" y=\"" << MT + 16 + 14 * (ci - 1)
           << "\" font-size=\"11\" fill=\"" << color << "\">" << mode << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace vw::plot
