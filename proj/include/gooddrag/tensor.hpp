#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gooddrag {

// Dense grid of doubles, channels-first (c, h, w), row-major within a channel.
class Tensor {
public:
    Tensor() = default;
    Tensor(int c, int h, int w) {
        if (c <= 0 || h <= 0 || w <= 0)
            throw std::invalid_argument("Tensor: dimensions must be positive");
        c_ = c; h_ = h; w_ = w;
        data_.assign(static_cast<size_t>(c) * h * w, 0.0);
    }

    static Tensor full(int c, int h, int w, double v) {
        Tensor t(c, h, w);
        t.data_.assign(t.data_.size(), v);
        return t;
    }

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool same_shape(const Tensor& o) const {
        return c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
    }

    double& at(int c, int y, int x) {
        return data_[(static_cast<size_t>(c) * h_ + y) * w_ + x];
    }
    double at(int c, int y, int x) const {
        return data_[(static_cast<size_t>(c) * h_ + y) * w_ + x];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* channel(int c) { return data_.data() + static_cast<size_t>(c) * h_ * w_; }
    const double* channel(int c) const { return data_.data() + static_cast<size_t>(c) * h_ * w_; }

    Tensor& operator+=(const Tensor& o) {
        check_shape(o);
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        check_shape(o);
        for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    // this += s * o
    Tensor& axpy(double s, const Tensor& o) {
        check_shape(o);
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
        return *this;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    void check_shape(const Tensor& o) const {
        if (!same_shape(o)) throw std::invalid_argument("Tensor: shape mismatch");
    }

    int c_ = 0, h_ = 0, w_ = 0;
    std::vector<double> data_;
};

inline Tensor operator+(Tensor a, const Tensor& b) { a += b; return a; }
inline Tensor operator-(Tensor a, const Tensor& b) { a -= b; return a; }
inline Tensor operator*(double s, Tensor a) { a *= s; return a; }

double dot(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);
double l1_norm(const Tensor& a);
double l2_norm_sq(const Tensor& a);
double mean_sq_diff(const Tensor& a, const Tensor& b);

}  // namespace gooddrag
