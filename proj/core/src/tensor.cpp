#include "mffssr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mffssr {

std::string Shape::str() const {
    std::ostringstream os;
    os << "(" << b << ", " << c << ", " << h << ", " << w << ")";
    return os.str();
}

double Tensor::sum() const {
    double acc = 0.0;
    for (double v : data_) acc += v;
    return acc;
}

double Tensor::mean() const {
    return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size());
}

double Tensor::abs_max() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
}

void Tensor::axpy(double alpha, const Tensor& other) {
    check_same_shape(*this, other, "axpy");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * other.data_[i];
}

bool Tensor::same_values(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!(a.shape() == b.shape())) {
        throw ShapeError(std::string(what) + ": shape mismatch, expected " +
                         a.shape().str() + ", actual " + b.shape().str());
    }
}

}  // namespace mffssr
