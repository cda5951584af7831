// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>

#include "splatpaint/canny.hpp"
#include "splatpaint/common.hpp"
#include "splatpaint/depth_fit.hpp"
#include "splatpaint/image.hpp"
#include "splatpaint/scene_io.hpp"
#include "splatpaint/warp.hpp"

namespace splatpaint {

enum class DepthConditionSource { estimator, warped };

inline DepthConditionSource parse_depth_condition_source(const std::string& name) {
    if (name == "estimator") return DepthConditionSource::estimator;
    if (name == "warped") return DepthConditionSource::warped;
    throw ValidationError("unknown depth condition source '" + name + "'");
}

/// Per-view guidance rasters for the inpainting stage, all in the target frame.
struct ConditionRasters {
    EdgeMap edges;         // edges of the warped reference image
    ImageD depth;          // depth condition
    MaskImage validity;    // warp validity
    ImageD warped_image;   // warped reference colors, zero where invalid
    ImageD warped_depth;   // warp depth, positive where valid
};

/// Builds the conditioning rasters for `target` from `reference`. The
/// estimator's depth for the reference image is aligned to the rendered
/// reference depth by least squares (over pixels where the rendered depth is
/// positive), the reference is forward-warped through the aligned depth, and
/// edges are detected on the warped image. The depth condition comes from the
/// estimator applied to the warped image, or from the warp depth itself when
/// `source` is `warped`.
inline ConditionRasters build_conditions(const View& reference, const View& target, const ImageD& rendered_ref_depth,
                                         const DepthEstimator& estimator,
                                         DepthConditionSource source = DepthConditionSource::estimator) {
    reference.validate();
    target.validate();
    if (rendered_ref_depth.width() != reference.image.width() ||
        rendered_ref_depth.height() != reference.image.height() || rendered_ref_depth.channels() != 1) {
        throw ValidationError("build_conditions: rendered reference depth dimensions do not match the reference");
    }

    const ImageD mono = estimator.estimate(reference.image);
    MaskImage fit_mask = make_mask(mono.width(), mono.height(), 0);
    for (int y = 0; y < mono.height(); ++y)
        for (int x = 0; x < mono.width(); ++x) fit_mask.at(x, y) = rendered_ref_depth.at(x, y) > 0.0 ? 1 : 0;
    const AlignmentParams fit = align_depth_least_squares(mono, rendered_ref_depth, fit_mask);
    const ImageD aligned = fit.apply(mono);

    WarpResult warp = warp_view(reference, aligned, target.pose, target.intrinsics);

    ConditionRasters out;
    out.edges = canny_edges(warp.warped_image);
    out.depth = source == DepthConditionSource::warped ? warp.warped_depth : estimator.estimate(warp.warped_image);
    out.validity = warp.validity;
    out.warped_image = std::move(warp.warped_image);
    out.warped_depth = std::move(warp.warped_depth);
    return out;
}

}  // namespace splatpaint
