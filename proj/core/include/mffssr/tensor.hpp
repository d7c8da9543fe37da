#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mffssr/errors.hpp"

namespace mffssr {

// All activations and parameters are dense 4-axis arrays in (batch,
// channel, height, width) order, stored row-major in double precision.
struct Shape {
    int b = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::int64_t numel() const {
        return static_cast<std::int64_t>(b) * c * h * w;
    }
    bool operator==(const Shape& o) const = default;
    std::string str() const;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape s) : shape_(s), data_(static_cast<size_t>(s.numel()), 0.0) {}
    Tensor(Shape s, double fill) : shape_(s), data_(static_cast<size_t>(s.numel()), fill) {}

    static Tensor zeros(Shape s) { return Tensor(s); }
    static Tensor full(Shape s, double v) { return Tensor(s, v); }
    static Tensor scalar(double v) { return Tensor(Shape{1, 1, 1, 1}, v); }

    const Shape& shape() const { return shape_; }
    std::int64_t numel() const { return shape_.numel(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& at(int b, int c, int h, int w) {
        return data_[index(b, c, h, w)];
    }
    double at(int b, int c, int h, int w) const {
        return data_[index(b, c, h, w)];
    }
    double* ptr(int b, int c, int h, int w) {
        return data_.data() + index(b, c, h, w);
    }
    const double* ptr(int b, int c, int h, int w) const {
        return data_.data() + index(b, c, h, w);
    }
    double& operator[](std::int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<size_t>(i)]; }

    std::int64_t index(int b, int c, int h, int w) const {
        return ((static_cast<std::int64_t>(b) * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    double sum() const;
    double mean() const;
    double abs_max() const;
    bool all_finite() const;

    // Accumulates `alpha * other` into this tensor. Shapes must match.
    void axpy(double alpha, const Tensor& other);

    bool same_values(const Tensor& other) const;

private:
    Shape shape_{};
    std::vector<double> data_;
};

// Throws ShapeError naming the expected and actual shapes.
void check_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace mffssr
