// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splatpaint/camera.hpp"
#include "splatpaint/common.hpp"
#include "splatpaint/scene_io.hpp"

namespace splatpaint {

/// One anisotropic splat. Rotation is (w,x,y,z), kept unit-norm by the
/// optimizer; the renderer consumes it as-is.
struct Gaussian3D {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector4d rotation = Eigen::Vector4d(1, 0, 0, 0);
    Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
    double opacity_logit = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();

    double opacity() const { return sigmoid(opacity_logit); }

    void normalize_rotation() {
        const double n = rotation.norm();
        if (n <= 0.0 || !std::isfinite(n)) throw NumericError("gaussian rotation degenerated to zero norm");
        rotation /= n;
    }

    bool all_finite() const {
        return position.allFinite() && rotation.allFinite() && log_scale.allFinite() &&
               std::isfinite(opacity_logit) && color.allFinite();
    }
};

struct GaussianCloud {
    std::vector<Gaussian3D> gaussians;
    Eigen::Vector3d background = Eigen::Vector3d::Zero();

    std::size_t size() const { return gaussians.size(); }
    bool empty() const { return gaussians.empty(); }

    void validate() const {
        for (std::size_t i = 0; i < gaussians.size(); ++i) {
            if (!gaussians[i].all_finite())
                throw NumericError("gaussian " + std::to_string(i) + " has non-finite parameters");
        }
        if (!background.allFinite()) throw NumericError("background color is non-finite");
    }
};

/// 3D covariance R * diag(exp(2*log_scale)) * R^T of a splat whose quaternion
/// is normalized.
inline Eigen::Matrix3d covariance_from_rs(const Eigen::Vector4d& rotation, const Eigen::Vector3d& log_scale) {
    const Eigen::Matrix3d r = quaternion_to_matrix(rotation(0), rotation(1), rotation(2), rotation(3));
    const Eigen::Vector3d variances = (2.0 * log_scale).array().exp();
    return r * variances.asDiagonal() * r.transpose();
}

/// Removes splats whose opacity fell below `threshold`. Leaves the cloud
/// untouched if pruning would empty it. Returns how many were removed.
inline std::size_t prune_low_opacity(GaussianCloud& cloud, double threshold) {
    const auto below = [threshold](const Gaussian3D& g) { return g.opacity() < threshold; };
    const std::size_t would_remove =
        static_cast<std::size_t>(std::count_if(cloud.gaussians.begin(), cloud.gaussians.end(), below));
    if (would_remove == cloud.gaussians.size()) return 0;
    cloud.gaussians.erase(std::remove_if(cloud.gaussians.begin(), cloud.gaussians.end(), below),
                          cloud.gaussians.end());
    return would_remove;
}

namespace detail {

inline void write_f32(std::ostream& out, float v) { out.write(reinterpret_cast<const char*>(&v), 4); }

inline float read_f32(std::istream& in, const std::string& path) {
    float v = 0.0f;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw ValidationError("truncated cloud file " + path);
    return v;
}

}  // namespace detail

/// Binary cloud sidecar: "SPLC" magic, u32 version, u32 count, f32 background
/// rgb, then 14 f32 per splat (position, quaternion wxyz, log-scale, opacity
/// logit, color).
inline void write_cloud(const std::string& path, const GaussianCloud& cloud) {
    cloud.validate();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + path);
    f.write("SPLC", 4);
    const std::uint32_t version = 1;
    const std::uint32_t count = static_cast<std::uint32_t>(cloud.gaussians.size());
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&count), 4);
    for (int c = 0; c < 3; ++c) detail::write_f32(f, static_cast<float>(cloud.background(c)));
    for (const auto& g : cloud.gaussians) {
        for (int c = 0; c < 3; ++c) detail::write_f32(f, static_cast<float>(g.position(c)));
        for (int c = 0; c < 4; ++c) detail::write_f32(f, static_cast<float>(g.rotation(c)));
        for (int c = 0; c < 3; ++c) detail::write_f32(f, static_cast<float>(g.log_scale(c)));
        detail::write_f32(f, static_cast<float>(g.opacity_logit));
        for (int c = 0; c < 3; ++c) detail::write_f32(f, static_cast<float>(g.color(c)));
    }
}

inline GaussianCloud read_cloud(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open " + path);
    char magic[4] = {};
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "SPLC", 4) != 0) throw ValidationError("not a cloud file: " + path);
    std::uint32_t version = 0, count = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&count), 4);
    if (!f) throw ValidationError("truncated cloud file " + path);
    if (version != 1) throw ValidationError("unsupported cloud file version " + std::to_string(version));
    GaussianCloud cloud;
    for (int c = 0; c < 3; ++c) cloud.background(c) = detail::read_f32(f, path);
    cloud.gaussians.resize(count);
    for (auto& g : cloud.gaussians) {
        for (int c = 0; c < 3; ++c) g.position(c) = detail::read_f32(f, path);
        for (int c = 0; c < 4; ++c) g.rotation(c) = detail::read_f32(f, path);
        for (int c = 0; c < 3; ++c) g.log_scale(c) = detail::read_f32(f, path);
        g.opacity_logit = detail::read_f32(f, path);
        for (int c = 0; c < 3; ++c) g.color(c) = detail::read_f32(f, path);
    }
    cloud.validate();
    return cloud;
}

/// Seeds one splat per point. Scale comes from the nearest-neighbor spacing so
/// neighboring splats overlap slightly; isotropic, identity rotation.
inline GaussianCloud init_cloud_from_points(const std::vector<ScenePoint>& points,
                                            const Eigen::Vector3d& background = Eigen::Vector3d::Zero()) {
    if (points.empty()) throw ValidationError("cannot initialize a cloud from zero points");
    GaussianCloud cloud;
    cloud.background = background;
    cloud.gaussians.reserve(points.size());
    const double default_spacing = 0.1;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double nn2 = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (j == i) continue;
            nn2 = std::min(nn2, (points[j].position - points[i].position).squaredNorm());
        }
        const double spacing = std::isfinite(nn2) && nn2 > 0.0 ? std::sqrt(nn2) : default_spacing;
        Gaussian3D g;
        g.position = points[i].position;
        g.color = points[i].color;
        g.log_scale.setConstant(std::log(std::clamp(spacing, 1e-3, 1.0)));
        g.opacity_logit = inverse_sigmoid(0.1);
        cloud.gaussians.push_back(g);
    }
    return cloud;
}

/// Unprojects every `stride`-th pixel with positive depth into a seed cloud.
inline GaussianCloud init_cloud_from_depth(const View& view, int stride = 4,
                                           const Eigen::Vector3d& background = Eigen::Vector3d::Zero()) {
    if (view.depth.empty()) throw ValidationError("view " + std::to_string(view.id) + " has no depth to unproject");
    if (stride < 1) throw ValidationError("stride must be >= 1");
    std::vector<ScenePoint> points;
    const Eigen::Matrix3d r_inv = view.pose.rotation.transpose();
    for (int y = 0; y < view.intrinsics.height; y += stride) {
        for (int x = 0; x < view.intrinsics.width; x += stride) {
            const double z = view.depth.at(x, y);
            if (!(z > 0.0)) continue;
            const Eigen::Vector3d p_cam((x - view.intrinsics.cx) / view.intrinsics.fx * z,
                                        (y - view.intrinsics.cy) / view.intrinsics.fy * z, z);
            ScenePoint p;
            p.position = r_inv * (p_cam - view.pose.translation);
            p.color = Eigen::Vector3d(view.image.at(x, y, 0), view.image.at(x, y, 1), view.image.at(x, y, 2));
            points.push_back(p);
        }
    }
    if (points.empty()) throw ValidationError("view " + std::to_string(view.id) + " has no valid depth to unproject");
    return init_cloud_from_points(points, background);
}

}  // namespace splatpaint
