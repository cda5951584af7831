// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <Eigen/Dense>

#include "splatpaint/common.hpp"

namespace splatpaint {

struct CameraIntrinsics {
    int width = 0;
    int height = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    void validate(const std::string& context = {}) const {
        const std::string where = context.empty() ? std::string() : " (" + context + ")";
        if (width <= 0 || height <= 0) throw ValidationError("intrinsics: non-positive image size" + where);
        if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("intrinsics: focal lengths must be positive" + where);
        if (cx < 0.0 || cx > width || cy < 0.0 || cy > height) {
            throw ValidationError("intrinsics: principal point outside the image" + where);
        }
    }

    Eigen::Matrix3d matrix() const {
        Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
        k(0, 0) = fx;
        k(1, 1) = fy;
        k(0, 2) = cx;
        k(1, 2) = cy;
        return k;
    }
};

/// World-to-camera rigid transform (COLMAP convention: +z forward, +y down).
/// x_cam = rotation * x_world + translation.
struct CameraPose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    void validate(const std::string& context = {}) const {
        const std::string where = context.empty() ? std::string() : " (" + context + ")";
        const Eigen::Matrix3d rtr = rotation.transpose() * rotation;
        if ((rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
            throw ValidationError("pose: rotation is not orthonormal" + where);
        }
        if (std::abs(rotation.determinant() - 1.0) > 1e-6) {
            throw ValidationError("pose: rotation determinant is not +1" + where);
        }
        if (!rotation.allFinite() || !translation.allFinite()) {
            throw ValidationError("pose: non-finite entries" + where);
        }
    }
};

/// World-space camera center, -R^T t.
inline Eigen::Vector3d camera_center(const CameraPose& pose) {
    return -pose.rotation.transpose() * pose.translation;
}

/// Pose of B relative to A: maps A-camera coordinates into B-camera
/// coordinates, i.e. P_B * P_A^{-1} as rigid 4x4 transforms.
inline CameraPose relative_pose(const CameraPose& a, const CameraPose& b) {
    CameraPose rel;
    rel.rotation = b.rotation * a.rotation.transpose();
    rel.translation = b.translation - rel.rotation * a.translation;
    return rel;
}

/// Rotation matrix of a quaternion given as (w, x, y, z). The formula is
/// the unit-quaternion form applied to the raw components; callers keep
/// quaternions normalized.
inline Eigen::Matrix3d quaternion_to_matrix(double w, double x, double y, double z) {
    Eigen::Matrix3d r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
         2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
         2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

}  // namespace splatpaint
