// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "splatpaint/camera.hpp"
#include "splatpaint/gaussian.hpp"
#include "splatpaint/renderer.hpp"
#include "splatpaint/scene_io.hpp"

namespace splatpaint {

/// World-to-camera pose with +z looking from `center` toward `target`.
inline CameraPose look_at_pose(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                               const Eigen::Vector3d& up = Eigen::Vector3d(0, 1, 0)) {
    const Eigen::Vector3d forward = (target - center).normalized();
    Eigen::Vector3d right = up.cross(forward);
    if (right.norm() < 1e-9) throw ValidationError("look_at_pose: up vector is parallel to the view direction");
    right.normalize();
    const Eigen::Vector3d down = forward.cross(right);
    CameraPose pose;
    pose.rotation.row(0) = right;
    pose.rotation.row(1) = down;
    pose.rotation.row(2) = forward;
    pose.translation = -pose.rotation * center;
    return pose;
}

inline MaskImage dilate_mask(const MaskImage& mask, int radius = 1) {
    MaskImage out = mask;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (out.at(x, y)) continue;
            for (int dy = -radius; dy <= radius && !out.at(x, y); ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= mask.width() || ny >= mask.height()) continue;
                    if (mask.at(nx, ny)) {
                        out.at(x, y) = 1;
                        break;
                    }
                }
        }
    return out;
}

/// A tilted textured plane watched by a ring of cameras, with a small bright
/// occluder floating in front of its center and inpainting masks over the
/// occluder's pixels. The bundle's images and depths are renders of the full
/// cloud, so the cloud reproduces them exactly.
struct SyntheticScene {
    SceneBundle bundle;
    GaussianCloud cloud;
};

inline SyntheticScene make_plane_occluder_scene(int view_count = 8, int width = 32, int height = 32) {
    if (view_count < 1) throw ValidationError("make_plane_occluder_scene: need at least one view");
    SyntheticScene scene;

    GaussianCloud& cloud = scene.cloud;
    for (int gy = 0; gy < 12; ++gy)
        for (int gx = 0; gx < 12; ++gx) {
            Gaussian3D g;
            const double x = -2.2 + 0.4 * gx;
            const double y = -2.2 + 0.4 * gy;
            g.position = Eigen::Vector3d(x, y, 3.6 + 0.25 * x);
            g.color = Eigen::Vector3d(0.35 + 0.3 * std::sin(1.3 * x), 0.35 + 0.3 * std::cos(0.9 * y),
                                      0.55 - 0.2 * std::sin(0.7 * (x + y)));
            g.log_scale = Eigen::Vector3d(std::log(0.26), std::log(0.26), std::log(0.05));
            g.opacity_logit = inverse_sigmoid(0.9);
            cloud.gaussians.push_back(g);
        }

    GaussianCloud occluder;
    for (int oy = -1; oy <= 1; ++oy)
        for (int ox = -1; ox <= 1; ++ox) {
            Gaussian3D g;
            g.position = Eigen::Vector3d(0.12 * ox, 0.12 * oy, 2.2);
            g.color = Eigen::Vector3d(0.85, 0.2, 0.15);
            g.log_scale = Eigen::Vector3d::Constant(std::log(0.09));
            g.opacity_logit = inverse_sigmoid(0.9);
            occluder.gaussians.push_back(g);
            cloud.gaussians.push_back(g);
        }

    scene.bundle.prompts.positive = "clean textured surface";
    scene.bundle.prompts.negative = "floating object";
    scene.bundle.prompts.mask_prompt = "the bright occluder";

    for (int i = 0; i < view_count; ++i) {
        View view;
        view.id = i;
        view.intrinsics = {width, height, 1.25 * width, 1.25 * width, width / 2.0, height / 2.0};
        const double theta = 2.0 * M_PI * i / view_count;
        const Eigen::Vector3d center(0.45 * std::cos(theta), 0.45 * std::sin(theta), -0.15 * (i % 3));
        view.pose = look_at_pose(center, Eigen::Vector3d(0.0, 0.0, 3.6));

        const RenderOutput full = rasterize(cloud, view.pose, view.intrinsics);
        view.image = full.color;
        view.depth = full.depth;

        const RenderOutput front = rasterize(occluder, view.pose, view.intrinsics);
        MaskImage hit = make_mask(width, height, 0);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                hit.at(x, y) = 1.0 - front.final_transmittance.at(x, y) > 0.3 ? 1 : 0;
        view.mask = dilate_mask(hit, 1);
        view.validate();
        scene.bundle.views.push_back(std::move(view));
    }

    for (const Gaussian3D& g : cloud.gaussians) {
        ScenePoint p;
        p.position = g.position;
        p.color = g.color;
        scene.bundle.points.push_back(p);
    }
    return scene;
}

}  // namespace splatpaint
