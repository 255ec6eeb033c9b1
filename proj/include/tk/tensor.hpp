#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tk {

// Dense row-major matrix of 64-bit floats. Scalars are 1x1, vectors are
// n x 1 or 1 x n. All model state and gradients live in these.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) {
            throw std::invalid_argument("Tensor: value count " + std::to_string(values_.size()) +
                                        " does not match shape " + shape_string());
        }
    }

    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }

    static Tensor full(std::size_t rows, std::size_t cols, double v) {
        return Tensor(rows, cols, std::vector<double>(rows * cols, v));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& at(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    bool same_shape(const Tensor& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    double item() const {
        if (size() != 1) {
            throw std::logic_error("Tensor::item: tensor has shape " + shape_string());
        }
        return values_[0];
    }

    void fill(double v) { values_.assign(values_.size(), v); }

    bool all_finite() const;

    std::string shape_string() const {
        return "[" + std::to_string(rows_) + " x " + std::to_string(cols_) + "]";
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

} // namespace tk
