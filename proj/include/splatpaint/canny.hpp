// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "splatpaint/common.hpp"
#include "splatpaint/image.hpp"

namespace splatpaint {

using EdgeMap = MaskImage;

namespace detail {

inline double luma_at(const ImageD& image, int x, int y) {
    if (image.channels() == 1) return image.at(x, y);
    return 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2);
}

// replicate-border sampling
inline double clamped(const ImageD& raster, int x, int y) {
    x = std::clamp(x, 0, raster.width() - 1);
    y = std::clamp(y, 0, raster.height() - 1);
    return raster.at(x, y);
}

}  // namespace detail

/// Canny detector with a fixed parameter set: luma 0.299/0.587/0.114, 5x5
/// Gaussian blur (sigma 1.4, replicate border), Sobel 3x3, 4-bin non-maximum
/// suppression, double threshold at 0.1/0.2 of the peak magnitude, 8-connected
/// hysteresis. Thresholds are relative, so output is invariant to positive
/// rescaling of the input.
inline EdgeMap canny_edges(const ImageD& image) {
    const int w = image.width();
    const int h = image.height();
    EdgeMap edges(w, h, 1);
    if (w == 0 || h == 0) return edges;
    edges.fill(0);

    ImageD gray(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) gray.at(x, y) = detail::luma_at(image, x, y);

    // 5x5 Gaussian, sigma = 1.4
    double kernel[5][5];
    double kernel_sum = 0.0;
    for (int j = -2; j <= 2; ++j)
        for (int i = -2; i <= 2; ++i) {
            kernel[j + 2][i + 2] = std::exp(-(i * i + j * j) / (2.0 * 1.4 * 1.4));
            kernel_sum += kernel[j + 2][i + 2];
        }
    ImageD blurred(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = -2; j <= 2; ++j)
                for (int i = -2; i <= 2; ++i) acc += kernel[j + 2][i + 2] * detail::clamped(gray, x + i, y + j);
            blurred.at(x, y) = acc / kernel_sum;
        }
    }

    ImageD magnitude(w, h, 1);
    ImageD gx_map(w, h, 1), gy_map(w, h, 1);
    double max_magnitude = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // paired differences cancel exactly on flat regions
            const double gx = (detail::clamped(blurred, x + 1, y - 1) - detail::clamped(blurred, x - 1, y - 1)) +
                              2.0 * (detail::clamped(blurred, x + 1, y) - detail::clamped(blurred, x - 1, y)) +
                              (detail::clamped(blurred, x + 1, y + 1) - detail::clamped(blurred, x - 1, y + 1));
            const double gy = (detail::clamped(blurred, x - 1, y + 1) - detail::clamped(blurred, x - 1, y - 1)) +
                              2.0 * (detail::clamped(blurred, x, y + 1) - detail::clamped(blurred, x, y - 1)) +
                              (detail::clamped(blurred, x + 1, y + 1) - detail::clamped(blurred, x + 1, y - 1));
            gx_map.at(x, y) = gx;
            gy_map.at(x, y) = gy;
            magnitude.at(x, y) = std::hypot(gx, gy);
            max_magnitude = std::max(max_magnitude, magnitude.at(x, y));
        }
    }
    if (!(max_magnitude > 0.0)) return edges;  // constant image

    // non-maximum suppression along the quantized gradient direction; the
    // asymmetric tie rule (>= against the negative side, > against the
    // positive side) keeps symmetric ridges one pixel wide
    const auto magnitude_or_zero = [&](int x, int y) {
        if (x < 0 || x >= w || y < 0 || y >= h) return 0.0;
        return magnitude.at(x, y);
    };
    MaskImage survivor(w, h, 1);
    survivor.fill(0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double m = magnitude.at(x, y);
            if (m <= 0.0) continue;
            double deg = std::atan2(gy_map.at(x, y), gx_map.at(x, y)) * 180.0 / M_PI;
            if (deg < 0.0) deg += 180.0;
            int dx = 1, dy = 0;
            if (deg >= 22.5 && deg < 67.5) {
                dx = 1;
                dy = 1;
            } else if (deg >= 67.5 && deg < 112.5) {
                dx = 0;
                dy = 1;
            } else if (deg >= 112.5 && deg < 157.5) {
                dx = -1;
                dy = 1;
            }
            if (m >= magnitude_or_zero(x - dx, y - dy) && m > magnitude_or_zero(x + dx, y + dy)) {
                survivor.at(x, y) = 1;
            }
        }
    }

    // double threshold + 8-connected hysteresis from strong pixels
    const double high = 0.2 * max_magnitude;
    const double low = 0.1 * max_magnitude;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (survivor.at(x, y) && magnitude.at(x, y) >= high) {
                edges.at(x, y) = 1;
                stack.emplace_back(x, y);
            }
        }
    }
    while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        for (int j = -1; j <= 1; ++j) {
            for (int i = -1; i <= 1; ++i) {
                const int nx = x + i, ny = y + j;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                if (edges.at(nx, ny)) continue;
                if (survivor.at(nx, ny) && magnitude.at(nx, ny) >= low) {
                    edges.at(nx, ny) = 1;
                    stack.emplace_back(nx, ny);
                }
            }
        }
    }
    return edges;
}

}  // namespace splatpaint
