// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <string>

#include "splatpaint/image.hpp"

namespace splatpaint {
namespace ssim {

inline constexpr int kWindow = 11;
inline constexpr double kSigma = 1.5;
inline constexpr double kC1 = 0.01 * 0.01;
inline constexpr double kC2 = 0.03 * 0.03;

/// Normalized 1D Gaussian taps; the 2D window is the outer product.
inline const std::array<double, kWindow>& window_taps() {
    static const std::array<double, kWindow> taps = [] {
        std::array<double, kWindow> t{};
        double total = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            const double d = i - (kWindow - 1) / 2.0;
            t[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            total += t[i];
        }
        for (double& v : t) v /= total;
        return t;
    }();
    return taps;
}

struct WindowStats {
    double mu_a = 0.0;
    double mu_b = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    double cov = 0.0;
};

/// Gaussian-weighted moments of the window whose top-left corner is (x0, y0).
inline WindowStats window_stats(const ImageD& a, const ImageD& b, int x0, int y0, int channel) {
    const auto& taps = window_taps();
    WindowStats s;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (int j = 0; j < kWindow; ++j)
        for (int i = 0; i < kWindow; ++i) {
            const double w = taps[i] * taps[j];
            const double va = a.at(x0 + i, y0 + j, channel);
            const double vb = b.at(x0 + i, y0 + j, channel);
            s.mu_a += w * va;
            s.mu_b += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
        }
    s.var_a = saa - s.mu_a * s.mu_a;
    s.var_b = sbb - s.mu_b * s.mu_b;
    s.cov = sab - s.mu_a * s.mu_b;
    return s;
}

inline double ssim_from_stats(const WindowStats& s) {
    const double a1 = 2.0 * s.mu_a * s.mu_b + kC1;
    const double a2 = 2.0 * s.cov + kC2;
    const double b1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + kC1;
    const double b2 = s.var_a + s.var_b + kC2;
    return (a1 * a2) / (b1 * b2);
}

inline void require_window_fits(const ImageD& a, const char* who) {
    if (a.width() < kWindow || a.height() < kWindow)
        throw ValidationError(std::string(who) + ": image must be at least " + std::to_string(kWindow) + "x" +
                              std::to_string(kWindow) + ", got " + std::to_string(a.width()) + "x" +
                              std::to_string(a.height()));
}

}  // namespace ssim
}  // namespace splatpaint
