// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "splatpaint/camera.hpp"
#include "splatpaint/common.hpp"
#include "splatpaint/image.hpp"
#include "splatpaint/renderer.hpp"
#include "splatpaint/scene_io.hpp"

namespace splatpaint {

struct WarpResult {
    ImageD warped_image;   // reference colors splatted into the target view, zero where invalid
    MaskImage validity;    // 1 where a source pixel landed
    ImageD warped_depth;   // target-frame depth, positive where valid
};

/// Forward-warps the reference image into the target view through the given
/// per-pixel reference depth. Each reference pixel is back-projected, moved
/// through the relative pose, projected, and rounded to the nearest target
/// pixel. Collisions keep the smaller target depth; equal depths keep the
/// earlier pixel in row-major scan order. Pixels whose depth is not positive,
/// that land behind the near plane, or that fall outside the target bounds are
/// dropped. Throws ValidationError when the reference depth has no positive
/// entries at all.
inline WarpResult warp_view(const View& ref, const ImageD& ref_depth, const CameraPose& target_pose,
                            const CameraIntrinsics& target_intr) {
    if (ref_depth.width() != ref.image.width() || ref_depth.height() != ref.image.height() ||
        ref_depth.channels() != 1) {
        throw ValidationError("warp_view: reference depth dimensions do not match the reference image");
    }
    target_intr.validate("warp_view target");
    target_pose.validate("warp_view target");

    const CameraPose relative = relative_pose(ref.pose, target_pose);
    const int tw = target_intr.width;
    const int th = target_intr.height;

    WarpResult result;
    result.warped_image = make_rgb(tw, th, 0.0);
    result.validity = make_mask(tw, th, 0);
    result.warped_depth = make_gray(tw, th, 0.0);

    const double fx = ref.intrinsics.fx;
    const double fy = ref.intrinsics.fy;
    const double cx = ref.intrinsics.cx;
    const double cy = ref.intrinsics.cy;

    std::size_t valid_sources = 0;
    for (int y = 0; y < ref.image.height(); ++y) {
        for (int x = 0; x < ref.image.width(); ++x) {
            const double z = ref_depth.at(x, y);
            if (!(z > 0.0)) continue;
            ++valid_sources;
            const Eigen::Vector3d p_ref((x - cx) / fx * z, (y - cy) / fy * z, z);
            const Eigen::Vector3d p_tgt = relative.rotation * p_ref + relative.translation;
            if (p_tgt.z() <= kNearPlane) continue;
            const double u = target_intr.fx * p_tgt.x() / p_tgt.z() + target_intr.cx;
            const double v = target_intr.fy * p_tgt.y() / p_tgt.z() + target_intr.cy;
            const long ui = std::lround(u);
            const long vi = std::lround(v);
            if (ui < 0 || ui >= tw || vi < 0 || vi >= th) continue;
            const int tx = static_cast<int>(ui);
            const int ty = static_cast<int>(vi);
            if (result.validity.at(tx, ty) && result.warped_depth.at(tx, ty) <= p_tgt.z()) continue;
            result.validity.at(tx, ty) = 1;
            result.warped_depth.at(tx, ty) = p_tgt.z();
            for (int c = 0; c < 3; ++c) result.warped_image.at(tx, ty, c) = ref.image.at(x, y, c);
        }
    }
    if (valid_sources == 0) {
        throw ValidationError("warp_view: reference depth contains no positive entries");
    }
    return result;
}

}  // namespace splatpaint
