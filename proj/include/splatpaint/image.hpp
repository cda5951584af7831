// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "splatpaint/common.hpp"

namespace splatpaint {

/// Dense row-major raster with interleaved channels. Rasters are small at
/// the scales this library targets, so everything is double precision.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, T fill = T{})
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }

    T& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    const T& at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        if constexpr (std::is_floating_point_v<T>) {
            for (T v : data_) {
                if (!std::isfinite(v)) return false;
            }
        }
        return true;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<T> data_;
};

using ImageD = Image<double>;
using MaskImage = Image<std::uint8_t>;  // single channel, values in {0, 1}

inline ImageD make_rgb(int w, int h, double fill = 0.0) { return ImageD(w, h, 3, fill); }
inline ImageD make_gray(int w, int h, double fill = 0.0) { return ImageD(w, h, 1, fill); }

inline MaskImage make_mask(int w, int h, std::uint8_t fill = 0) { return MaskImage(w, h, 1, fill); }

inline std::size_t count_nonzero(const MaskImage& m) {
    std::size_t n = 0;
    for (auto v : m.data()) n += (v != 0);
    return n;
}

/// Elementwise a - b, shapes must match.
inline ImageD image_sub(const ImageD& a, const ImageD& b) {
    if (!a.same_shape(b)) throw ValidationError("image_sub: shape mismatch");
    ImageD out(a.width(), a.height(), a.channels());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline double image_linf(const ImageD& a, const ImageD& b) {
    if (!a.same_shape(b)) throw ValidationError("image_linf: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace splatpaint
