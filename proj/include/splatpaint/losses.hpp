// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "splatpaint/depth_fit.hpp"
#include "splatpaint/image.hpp"
#include "splatpaint/ssim.hpp"

namespace splatpaint {

struct LossWeights {
    double lambda_rgb = 1.0;
    double lambda_depth = 0.05;
    double lambda_tgsds = 0.01;
    double lambda_dssim = 0.2;

    void validate() const {
        const auto check = [](double v, const char* name) {
            if (!std::isfinite(v) || v < 0.0)
                throw ValidationError(std::string("loss weight ") + name + " must be finite and non-negative");
        };
        check(lambda_rgb, "lambda_rgb");
        check(lambda_depth, "lambda_depth");
        check(lambda_tgsds, "lambda_tgsds");
        check(lambda_dssim, "lambda_dssim");
        if (lambda_dssim > 1.0) throw ValidationError("lambda_dssim must be in [0, 1]");
    }
};

struct LossValue {
    double value = 0.0;
    ImageD gradient;
};

namespace detail {

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Mean structural dissimilarity over valid window positions and channels.
/// When `gradient` is non-null, accumulates d(dssim)/d(a) into it.
inline double dssim_with_grad(const ImageD& a, const ImageD& b, ImageD* gradient) {
    ssim::require_window_fits(a, "dssim_loss");
    const auto& taps = ssim::window_taps();
    const int xs = a.width() - ssim::kWindow + 1;
    const int ys = a.height() - ssim::kWindow + 1;
    const double positions = static_cast<double>(xs) * ys * a.channels();

    double ssim_sum = 0.0;
    for (int c = 0; c < a.channels(); ++c)
        for (int y0 = 0; y0 < ys; ++y0)
            for (int x0 = 0; x0 < xs; ++x0) {
                const ssim::WindowStats s = ssim::window_stats(a, b, x0, y0, c);
                const double a1 = 2.0 * s.mu_a * s.mu_b + ssim::kC1;
                const double a2 = 2.0 * s.cov + ssim::kC2;
                const double b1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + ssim::kC1;
                const double b2 = s.var_a + s.var_b + ssim::kC2;
                const double value = (a1 * a2) / (b1 * b2);
                ssim_sum += value;
                if (!gradient) continue;
                // d(ssim)/d(a_p) for every pixel p of this window, then
                // d(dssim)/d(a_p) = -0.5 / positions * that
                const double inv = 1.0 / (b1 * b2);
                for (int j = 0; j < ssim::kWindow; ++j)
                    for (int i = 0; i < ssim::kWindow; ++i) {
                        const double w = taps[i] * taps[j];
                        const double va = a.at(x0 + i, y0 + j, c);
                        const double vb = b.at(x0 + i, y0 + j, c);
                        const double ds = 2.0 * w * inv *
                                          (s.mu_b * a2 + (vb - s.mu_b) * a1 -
                                           value * (s.mu_a * b2 + (va - s.mu_a) * b1));
                        gradient->at(x0 + i, y0 + j, c) += -0.5 * ds / positions;
                    }
            }
    return (1.0 - ssim_sum / positions) / 2.0;
}

}  // namespace detail

/// Mean absolute difference over (optionally masked) pixels, all channels.
inline double l1_loss(const ImageD& a, const ImageD& b, const MaskImage& mask = MaskImage()) {
    if (!a.same_shape(b)) throw ValidationError("l1_loss: raster shapes disagree");
    const bool masked = mask.width() > 0;
    if (masked && (mask.width() != a.width() || mask.height() != a.height()))
        throw ValidationError("l1_loss: mask shape disagrees with the rasters");

    double total = 0.0;
    long count = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            if (masked && !mask.at(x, y)) continue;
            for (int c = 0; c < a.channels(); ++c) total += std::abs(a.at(x, y, c) - b.at(x, y, c));
            ++count;
        }
    if (count == 0) throw ValidationError("l1_loss: mask selects no pixels");
    return total / (static_cast<double>(count) * a.channels());
}

/// (1 - SSIM)/2 with an 11x11 Gaussian window, averaged over valid window
/// positions and channels.
inline double dssim_loss(const ImageD& a, const ImageD& b) {
    if (!a.same_shape(b)) throw ValidationError("dssim_loss: raster shapes disagree");
    return detail::dssim_with_grad(a, b, nullptr);
}

/// Photometric loss (1-lambda)*L1 + lambda*D-SSIM and its gradient with
/// respect to `rendered`.
inline LossValue rgb_loss(const ImageD& rendered, const ImageD& target, const LossWeights& weights) {
    if (!rendered.same_shape(target)) throw ValidationError("rgb_loss: raster shapes disagree");
    weights.validate();
    const double lambda = weights.lambda_dssim;

    LossValue out;
    out.gradient = ImageD(rendered.width(), rendered.height(), rendered.channels(), 0.0);

    const double n = static_cast<double>(rendered.size());
    double l1 = 0.0;
    for (int y = 0; y < rendered.height(); ++y)
        for (int x = 0; x < rendered.width(); ++x)
            for (int c = 0; c < rendered.channels(); ++c) {
                const double diff = rendered.at(x, y, c) - target.at(x, y, c);
                l1 += std::abs(diff);
                out.gradient.at(x, y, c) = (1.0 - lambda) * detail::sign_of(diff) / n;
            }
    l1 /= n;

    double dssim = 0.0;
    if (lambda > 0.0) {
        ImageD dssim_grad(rendered.width(), rendered.height(), rendered.channels(), 0.0);
        dssim = detail::dssim_with_grad(rendered, target, &dssim_grad);
        for (std::size_t i = 0; i < out.gradient.size(); ++i) out.gradient[i] += lambda * dssim_grad[i];
    }

    out.value = (1.0 - lambda) * l1 + lambda * dssim;
    return out;
}

/// Aligns the mono depth onto the rendered depth, then takes the L1 distance
/// over valid pixels. The gradient treats the fitted (scale, shift) as
/// constants.
inline LossValue depth_loss(const ImageD& rendered_depth, const ImageD& mono_depth,
                            const MaskImage& valid = MaskImage()) {
    if (!rendered_depth.same_shape(mono_depth)) throw ValidationError("depth_loss: raster shapes disagree");
    if (rendered_depth.channels() != 1) throw ValidationError("depth_loss: expects single-channel rasters");

    const AlignmentParams fit = align_depth_least_squares(mono_depth, rendered_depth, valid);
    const bool masked = valid.width() > 0;

    long count = 0;
    for (int y = 0; y < rendered_depth.height(); ++y)
        for (int x = 0; x < rendered_depth.width(); ++x)
            if (!masked || valid.at(x, y)) ++count;

    LossValue out;
    out.gradient = ImageD(rendered_depth.width(), rendered_depth.height(), 1, 0.0);
    for (int y = 0; y < rendered_depth.height(); ++y)
        for (int x = 0; x < rendered_depth.width(); ++x) {
            if (masked && !valid.at(x, y)) continue;
            const double residual = rendered_depth.at(x, y) - (fit.scale * mono_depth.at(x, y) + fit.shift);
            out.value += std::abs(residual);
            out.gradient.at(x, y) = detail::sign_of(residual) / static_cast<double>(count);
        }
    out.value /= static_cast<double>(count);
    return out;
}

/// Weighted sum of the stage losses. The TG-SDS component is a report-only
/// magnitude; optimization consumes its gradient raster directly.
inline double total_loss(const LossWeights& weights, double loss_rgb, double loss_depth, double loss_tgsds) {
    weights.validate();
    return weights.lambda_rgb * loss_rgb + weights.lambda_depth * loss_depth + weights.lambda_tgsds * loss_tgsds;
}

/// Fixed-width per-iteration log line: iter, rgb, depth, tg-sds magnitude, total.
inline std::string format_iteration_log(int iteration, double loss_rgb, double loss_depth,
                                        double tgsds_gradnorm, double total) {
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer), "%6d %12.6f %12.6f %12.6f %12.6f", iteration, loss_rgb, loss_depth,
                  tgsds_gradnorm, total);
    return buffer;
}

}  // namespace splatpaint
