#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vw::diff {

// Dense row-major float64 array. Values are validated finite at
// construction; graphs reject NaN/Inf before they can propagate.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<int> shape, std::vector<double> values);
    Tensor(int rows, int cols, std::vector<double> values);

    static Tensor zeros(int rows, int cols);
    static Tensor full(int rows, int cols, double value);
    static Tensor scalar(double value);

    const std::vector<int>& shape() const { return shape_; }
    int rows() const { return shape_.empty() ? 0 : shape_[0]; }
    int cols() const { return shape_.size() < 2 ? (shape_.empty() ? 0 : 1) : shape_[1]; }
    size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    double& at(int r, int c) { return v_[static_cast<size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return v_[static_cast<size_t>(r) * cols() + c]; }
    double& operator[](size_t i) { return v_[i]; }
    double operator[](size_t i) const { return v_[i]; }

    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    double item() const {
        if (v_.size() != 1) throw std::runtime_error("Tensor::item: not a scalar");
        return v_[0];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

    void check_finite(const std::string& context) const;

private:
    std::vector<int> shape_;
    std::vector<double> v_;
};

}  // namespace vw::diff
