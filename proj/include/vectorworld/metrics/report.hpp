#pragma once

#include <string>
#include <utility>
#include <vector>

namespace vw::metrics {

// Every scalar is finite or explicitly null with a reason.
struct MetricValue {
    double value = 0.0;
    bool null = false;
    std::string reason;
    int count = 0;
    std::string unit;

    static MetricValue of(double v, int count = 0, std::string unit = "") {
        return {v, false, "", count, std::move(unit)};
    }
    static MetricValue none(std::string reason) { return {0.0, true, std::move(reason), 0, ""}; }
};

class MetricReport {
public:
    void add(const std::string& name, MetricValue v) { items_.emplace_back(name, std::move(v)); }
    const std::vector<std::pair<std::string, MetricValue>>& items() const { return items_; }
    bool has(const std::string& name) const;
    const MetricValue& get(const std::string& name) const;

    std::string to_json() const;
    std::string to_csv() const;

private:
    std::vector<std::pair<std::string, MetricValue>> items_;
};

}  // namespace vw::metrics
