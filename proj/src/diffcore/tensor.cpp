#include "vectorworld/diffcore/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace vw::diff {

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), v_(std::move(values)) {
    size_t n = 1;
    for (int e : shape_) {
        if (e < 0) throw std::runtime_error("Tensor: negative extent");
        n *= static_cast<size_t>(e);
    }
    if (n != v_.size()) throw std::runtime_error("Tensor: shape/value length mismatch");
    check_finite("Tensor()");
}

Tensor::Tensor(int rows, int cols, std::vector<double> values)
    : Tensor(std::vector<int>{rows, cols}, std::move(values)) {}

Tensor Tensor::zeros(int rows, int cols) {
    return Tensor(rows, cols, std::vector<double>(static_cast<size_t>(rows) * cols, 0.0));
}

Tensor Tensor::full(int rows, int cols, double value) {
    return Tensor(rows, cols, std::vector<double>(static_cast<size_t>(rows) * cols, value));
}

Tensor Tensor::scalar(double value) { return Tensor(1, 1, {value}); }

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ")";
    return os.str();
}

void Tensor::check_finite(const std::string& context) const {
    for (double x : v_) {
        if (!std::isfinite(x)) {
            throw std::runtime_error(context + ": non-finite value");
        }
    }
}

}  // namespace vw::diff
