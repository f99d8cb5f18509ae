#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace condsr {

/// Dense [channels, height, width] tensor of doubles, row-major within
/// each channel. Used for velocity fields and network activations alike.
class Tensor {
public:
    Tensor() = default;
    Tensor(int channels, int height, int width, double fill = 0.0)
        : c_(channels), h_(height), w_(width),
          data_(static_cast<std::size_t>(channels) * height * width, fill) {
        if (channels <= 0 || height <= 0 || width <= 0)
            throw std::invalid_argument("Tensor: non-positive shape");
    }

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int ch, int row, int col) {
        return data_[(static_cast<std::size_t>(ch) * h_ + row) * w_ + col];
    }
    double operator()(int ch, int row, int col) const {
        return data_[(static_cast<std::size_t>(ch) * h_ + row) * w_ + col];
    }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    bool same_shape(const Tensor& o) const {
        return c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Tensor& operator+=(const Tensor& o) {
        require_same_shape(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        require_same_shape(o, "-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
    friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
    friend Tensor operator*(Tensor a, double s) { return a *= s; }
    friend Tensor operator*(double s, Tensor a) { return a *= s; }

    double l2_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

private:
    void require_same_shape(const Tensor& o, const char* op) const {
        if (!same_shape(o))
            throw std::invalid_argument(std::string("Tensor: shape mismatch in ") + op);
    }

    int c_ = 0, h_ = 0, w_ = 0;
    std::vector<double> data_;
};

/// Exact for 2^k equal addends; used where bitwise idempotence matters.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() == 0) return 0.0;
    if (v.size() == 1) return v[0];
    if (v.size() == 2) return v[0] + v[1];
    std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

}  // namespace condsr
