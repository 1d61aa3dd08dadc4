#ifndef TOFCS_IMAGE_HPP
#define TOFCS_IMAGE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tofcs/errors.hpp"

namespace tofcs {

/// Dense real-valued image, row-major storage.
class Image {
public:
    Image() = default;
    Image(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double& operator[](std::size_t idx) { return data_[idx]; }
    double operator[](std::size_t idx) const { return data_[idx]; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    bool same_shape(const Image& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend Image operator-(const Image& a, const Image& b) {
        if (!a.same_shape(b)) throw DimensionError("image shape mismatch in subtraction");
        Image out(a.rows_, a.cols_);
        for (std::size_t i = 0; i < a.size(); ++i) out.data_[i] = a.data_[i] - b.data_[i];
        return out;
    }

    friend Image operator+(const Image& a, const Image& b) {
        if (!a.same_shape(b)) throw DimensionError("image shape mismatch in addition");
        Image out(a.rows_, a.cols_);
        for (std::size_t i = 0; i < a.size(); ++i) out.data_[i] = a.data_[i] + b.data_[i];
        return out;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

} // namespace tofcs

#endif
