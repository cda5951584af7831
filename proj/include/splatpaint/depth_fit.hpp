// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "splatpaint/common.hpp"
#include "splatpaint/image.hpp"

namespace splatpaint {

struct AlignmentParams {
    double scale = 1.0;
    double shift = 0.0;

    ImageD apply(const ImageD& depth) const {
        ImageD out = depth;
        for (double& v : out.data()) v = scale * v + shift;
        return out;
    }
};

/// Least-squares fit of scale and shift mapping `mono` onto `rendered` over
/// the pixels where `valid` is nonzero (pass an empty mask to use every
/// pixel). Solves the 2x2 normal equations in closed form. Throws
/// ValidationError when fewer than two pixels are valid and NumericError when
/// `mono` is constant over the valid set, which makes the system singular.
inline AlignmentParams align_depth_least_squares(const ImageD& mono, const ImageD& rendered,
                                                 const MaskImage& valid = {}) {
    if (!mono.same_shape(rendered) || mono.channels() != 1) {
        throw ValidationError("align_depth_least_squares: depth rasters must be single-channel and equally sized");
    }
    const bool use_mask = valid.width() > 0;
    if (use_mask && (valid.width() != mono.width() || valid.height() != mono.height())) {
        throw ValidationError("align_depth_least_squares: validity mask dimensions do not match");
    }

    double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int y = 0; y < mono.height(); ++y) {
        for (int x = 0; x < mono.width(); ++x) {
            if (use_mask && !valid.at(x, y)) continue;
            const double m = mono.at(x, y);
            const double r = rendered.at(x, y);
            n += 1.0;
            sx += m;
            sy += r;
            sxx += m * m;
            sxy += m * r;
        }
    }
    if (n < 2.0) {
        throw ValidationError("align_depth_least_squares: need at least two valid pixels");
    }
    const double det = n * sxx - sx * sx;
    if (!(det > 1e-12 * std::max(n * sxx, 1.0))) {
        throw NumericError("align_depth_least_squares: mono depth is constant over the valid pixels");
    }
    AlignmentParams params;
    params.scale = (n * sxy - sx * sy) / det;
    params.shift = (sy - params.scale * sx) / n;
    return params;
}

/// Produces a positive per-pixel depth raster for an image. Stand-in
/// implementations below keep the pipeline self-contained; a learned monocular
/// model would slot in behind the same interface.
class DepthEstimator {
public:
    virtual ~DepthEstimator() = default;
    virtual ImageD estimate(const ImageD& image) const = 0;
};

/// Returns a supplied depth raster regardless of the image content. Useful
/// when a rendered depth for the same view is already available.
class RenderedPassthroughEstimator final : public DepthEstimator {
public:
    explicit RenderedPassthroughEstimator(ImageD depth) : depth_(std::move(depth)) {
        if (depth_.channels() != 1) {
            throw ValidationError("rendered_passthrough: depth must be single-channel");
        }
        for (double& v : depth_.data()) {
            if (!std::isfinite(v)) throw ValidationError("rendered_passthrough: depth must be finite");
            v = std::max(v, 1e-6);
        }
    }

    ImageD estimate(const ImageD& image) const override {
        if (image.width() != depth_.width() || image.height() != depth_.height()) {
            throw ValidationError("rendered_passthrough: image dimensions do not match the supplied depth");
        }
        return depth_;
    }

private:
    ImageD depth_;
};

/// Affine-in-row synthetic depth: depth(x, y) = base + slope * y.
class ConstantPlaneEstimator final : public DepthEstimator {
public:
    ConstantPlaneEstimator(double base, double slope) : base_(base), slope_(slope) {
        if (!std::isfinite(base_) || !std::isfinite(slope_) || base_ <= 0.0) {
            throw ValidationError("constant_plane: base depth must be finite and positive");
        }
    }

    ImageD estimate(const ImageD& image) const override {
        ImageD out = make_gray(image.width(), image.height(), 0.0);
        for (int y = 0; y < image.height(); ++y) {
            const double d = base_ + slope_ * y;
            if (!(d > 0.0)) {
                throw ValidationError("constant_plane: depth plane crosses zero inside the image");
            }
            for (int x = 0; x < image.width(); ++x) out.at(x, y) = d;
        }
        return out;
    }

private:
    double base_;
    double slope_;
};

}  // namespace splatpaint
