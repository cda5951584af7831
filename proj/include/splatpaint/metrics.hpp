// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "splatpaint/image.hpp"
#include "splatpaint/ssim.hpp"

namespace splatpaint {

inline constexpr double kPsnrCap = 99.0;

/// Peak signal-to-noise ratio on [0,1] images, capped for near-zero error.
inline double psnr(const ImageD& a, const ImageD& b) {
    if (!a.same_shape(b)) throw ValidationError("psnr: raster shapes disagree");
    if (a.size() == 0) throw ValidationError("psnr: empty rasters");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mse += sqr(a[i] - b[i]);
    mse /= static_cast<double>(a.size());
    if (mse < 1e-10) return kPsnrCap;
    return 10.0 * std::log10(1.0 / mse);
}

/// PSNR restricted to mask=1 pixels (all channels of each).
inline double psnr_masked(const ImageD& a, const ImageD& b, const MaskImage& mask) {
    if (!a.same_shape(b)) throw ValidationError("psnr_masked: raster shapes disagree");
    if (mask.width() != a.width() || mask.height() != a.height())
        throw ValidationError("psnr_masked: mask shape disagrees with the rasters");
    double mse = 0.0;
    long count = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            if (!mask.at(x, y)) continue;
            for (int c = 0; c < a.channels(); ++c) mse += sqr(a.at(x, y, c) - b.at(x, y, c));
            ++count;
        }
    if (count == 0) throw ValidationError("psnr_masked: mask selects no pixels");
    mse /= static_cast<double>(count) * a.channels();
    if (mse < 1e-10) return kPsnrCap;
    return 10.0 * std::log10(1.0 / mse);
}

/// Mean SSIM over valid 11x11 window positions and channels.
inline double ssim_mean(const ImageD& a, const ImageD& b) {
    if (!a.same_shape(b)) throw ValidationError("ssim_mean: raster shapes disagree");
    ssim::require_window_fits(a, "ssim_mean");
    const int xs = a.width() - ssim::kWindow + 1;
    const int ys = a.height() - ssim::kWindow + 1;
    double total = 0.0;
    for (int c = 0; c < a.channels(); ++c)
        for (int y0 = 0; y0 < ys; ++y0)
            for (int x0 = 0; x0 < xs; ++x0) total += ssim::ssim_from_stats(ssim::window_stats(a, b, x0, y0, c));
    return total / (static_cast<double>(xs) * ys * a.channels());
}

/// Mean SSIM over the windows whose center pixel is masked.
inline double ssim_masked(const ImageD& a, const ImageD& b, const MaskImage& mask) {
    if (!a.same_shape(b)) throw ValidationError("ssim_masked: raster shapes disagree");
    if (mask.width() != a.width() || mask.height() != a.height())
        throw ValidationError("ssim_masked: mask shape disagrees with the rasters");
    ssim::require_window_fits(a, "ssim_masked");
    const int xs = a.width() - ssim::kWindow + 1;
    const int ys = a.height() - ssim::kWindow + 1;
    const int half = ssim::kWindow / 2;
    double total = 0.0;
    long windows = 0;
    for (int y0 = 0; y0 < ys; ++y0)
        for (int x0 = 0; x0 < xs; ++x0) {
            if (!mask.at(x0 + half, y0 + half)) continue;
            for (int c = 0; c < a.channels(); ++c)
                total += ssim::ssim_from_stats(ssim::window_stats(a, b, x0, y0, c));
            ++windows;
        }
    if (windows == 0) throw ValidationError("ssim_masked: mask covers no window centers");
    return total / (static_cast<double>(windows) * a.channels());
}

struct ViewMetrics {
    int view_id = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double masked_psnr = 0.0;
    double masked_ssim = 0.0;
};

struct MetricsReport {
    std::vector<ViewMetrics> per_view;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double mean_masked_psnr = 0.0;
    double mean_masked_ssim = 0.0;
};

struct EvalItem {
    int view_id = 0;
    ImageD rendered;
    ImageD reference;
    MaskImage mask;
};

inline MetricsReport eval_metrics(const std::vector<EvalItem>& items) {
    if (items.empty()) throw ValidationError("eval_metrics: no views to evaluate");
    MetricsReport report;
    for (const EvalItem& item : items) {
        ViewMetrics m;
        m.view_id = item.view_id;
        m.psnr = psnr(item.rendered, item.reference);
        m.ssim = ssim_mean(item.rendered, item.reference);
        m.masked_psnr = psnr_masked(item.rendered, item.reference, item.mask);
        m.masked_ssim = ssim_masked(item.rendered, item.reference, item.mask);
        report.mean_psnr += m.psnr;
        report.mean_ssim += m.ssim;
        report.mean_masked_psnr += m.masked_psnr;
        report.mean_masked_ssim += m.masked_ssim;
        report.per_view.push_back(m);
    }
    const double n = static_cast<double>(items.size());
    report.mean_psnr /= n;
    report.mean_ssim /= n;
    report.mean_masked_psnr /= n;
    report.mean_masked_ssim /= n;
    return report;
}

}  // namespace splatpaint
