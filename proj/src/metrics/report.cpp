#include "vectorworld/metrics/report.hpp"

#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace vw::metrics {

bool MetricReport::has(const std::string& name) const {
    for (const auto& [k, v] : items_)
        if (k == name) return true;
    return false;
}

const MetricValue& MetricReport::get(const std::string& name) const {
    for (const auto& [k, v] : items_)
        if (k == name) return v;
    throw std::runtime_error("MetricReport: no item '" + name + "'");
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    for (const auto& [name, v] : items_) {
        nlohmann::json e;
        if (v.null) {
            e["value"] = nullptr;
            e["reason"] = v.reason;
        } else {
            e["value"] = v.value;
        }
        if (v.count > 0) e["count"] = v.count;
        if (!v.unit.empty()) e["unit"] = v.unit;
        j[name] = std::move(e);
    }
    return j.dump(2);
}

std::string MetricReport::to_csv() const {
    std::ostringstream os;
    os << "metric,value,count,unit,reason\n";
    for (const auto& [name, v] : items_) {
        os << name << ",";
        if (v.null) os << "null";
        else os << v.value;
        os << "," << v.count << "," << v.unit << "," << v.reason << "\n";
    }
    return os.str();
}

}  // namespace vw::metrics
