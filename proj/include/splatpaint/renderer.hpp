// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "splatpaint/camera.hpp"
#include "splatpaint/common.hpp"
#include "splatpaint/gaussian.hpp"
#include "splatpaint/image.hpp"

namespace splatpaint {

inline constexpr double kNearPlane = 0.01;
inline constexpr double kAlphaCap = 0.999;
inline constexpr double kTransmittanceFloor = 1e-4;
inline constexpr double kCovDilation = 0.3;
inline constexpr double kFootprintSigmas = 3.0;

struct ProjectedGaussian {
    Eigen::Vector2d mean2d;
    Eigen::Matrix2d cov2d;
    double depth = 0.0;
    int source_index = 0;
};

struct RenderOutput {
    ImageD color;                // H x W x 3
    ImageD depth;                // H x W x 1, alpha-weighted expected depth
    ImageD final_transmittance;  // H x W x 1
};

/// Per-parameter-group gradients, aligned with the cloud's gaussian list.
struct CloudGrads {
    std::vector<Eigen::Vector3d> position;
    std::vector<Eigen::Vector4d> rotation;
    std::vector<Eigen::Vector3d> log_scale;
    std::vector<double> opacity_logit;
    std::vector<Eigen::Vector3d> color;

    explicit CloudGrads(std::size_t n = 0) { resize(n); }

    void resize(std::size_t n) {
        position.assign(n, Eigen::Vector3d::Zero());
        rotation.assign(n, Eigen::Vector4d::Zero());
        log_scale.assign(n, Eigen::Vector3d::Zero());
        opacity_logit.assign(n, 0.0);
        color.assign(n, Eigen::Vector3d::Zero());
    }

    std::size_t size() const { return position.size(); }

    void accumulate(const CloudGrads& other, double weight = 1.0) {
        if (other.size() != size()) throw ValidationError("gradient size mismatch in accumulate");
        for (std::size_t i = 0; i < size(); ++i) {
            position[i] += weight * other.position[i];
            rotation[i] += weight * other.rotation[i];
            log_scale[i] += weight * other.log_scale[i];
            opacity_logit[i] += weight * other.opacity_logit[i];
            color[i] += weight * other.color[i];
        }
    }

    /// Throws NumericError naming the first offending parameter group.
    void check_finite(const std::string& context) const {
        for (std::size_t i = 0; i < size(); ++i) {
            if (!position[i].allFinite()) throw NumericError(context + ": non-finite position gradient");
            if (!rotation[i].allFinite()) throw NumericError(context + ": non-finite rotation gradient");
            if (!log_scale[i].allFinite()) throw NumericError(context + ": non-finite log_scale gradient");
            if (!std::isfinite(opacity_logit[i])) throw NumericError(context + ": non-finite opacity gradient");
            if (!color[i].allFinite()) throw NumericError(context + ": non-finite color gradient");
        }
    }

    double squared_norm() const {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            s += position[i].squaredNorm() + rotation[i].squaredNorm() + log_scale[i].squaredNorm() +
                 sqr(opacity_logit[i]) + color[i].squaredNorm();
        }
        return s;
    }

    double norm() const { return std::sqrt(squared_norm()); }
};

/// EWA-style projection of one splat: camera point p = R*mu + t, pinhole mean,
/// cov2d = J W Sigma W^T J^T plus a 0.3 px^2 low-pass, depth = p.z. Splats at
/// or behind the near plane are culled (absent result).
inline std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, const CameraPose& pose,
                                                         const CameraIntrinsics& intr, int source_index = 0) {
    const Eigen::Vector3d p = pose.rotation * g.position + pose.translation;
    if (p.z() <= kNearPlane) return std::nullopt;
    const double inv_z = 1.0 / p.z();
    ProjectedGaussian out;
    out.mean2d = Eigen::Vector2d(intr.fx * p.x() * inv_z + intr.cx, intr.fy * p.y() * inv_z + intr.cy);
    Eigen::Matrix<double, 2, 3> j;
    j << intr.fx * inv_z, 0.0, -intr.fx * p.x() * inv_z * inv_z,
         0.0, intr.fy * inv_z, -intr.fy * p.y() * inv_z * inv_z;
    const Eigen::Matrix<double, 2, 3> m = j * pose.rotation;
    const Eigen::Matrix3d sigma = covariance_from_rs(g.rotation, g.log_scale);
    out.cov2d = m * sigma * m.transpose() + kCovDilation * Eigen::Matrix2d::Identity();
    out.depth = p.z();
    out.source_index = source_index;
    return out;
}

namespace detail {

/// Shared forward-pass state: culled+sorted splats and per-pixel hit lists in
/// front-to-back order (compressed rows, pixel-major).
struct RasterPrep {
    int width = 0;
    int height = 0;
    std::vector<ProjectedGaussian> projected;
    std::vector<Eigen::Matrix2d> inv_cov;
    std::vector<double> opacity;
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> indices;
    double far_default = 0.0;
};

inline RasterPrep prepare_raster(const GaussianCloud& cloud, const CameraPose& pose, const CameraIntrinsics& intr) {
    if (cloud.empty()) throw ValidationError("rasterize: empty cloud");
    RasterPrep prep;
    prep.width = intr.width;
    prep.height = intr.height;
    prep.projected.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (auto proj = project_gaussian(cloud.gaussians[i], pose, intr, static_cast<int>(i))) {
            prep.projected.push_back(*proj);
        }
    }
    std::sort(prep.projected.begin(), prep.projected.end(), [](const ProjectedGaussian& a, const ProjectedGaussian& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.source_index < b.source_index;
    });

    const std::size_t n = prep.projected.size();
    prep.inv_cov.resize(n);
    prep.opacity.resize(n);
    prep.far_default = 0.0;
    std::vector<int> x0(n), x1(n), y0(n), y1(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& pg = prep.projected[k];
        const double det = pg.cov2d.determinant();
        if (!(det > 0.0) || !pg.cov2d.allFinite())
            throw NumericError("degenerate 2d covariance for gaussian " + std::to_string(pg.source_index));
        Eigen::Matrix2d inv;
        inv << pg.cov2d(1, 1), -pg.cov2d(0, 1), -pg.cov2d(1, 0), pg.cov2d(0, 0);
        prep.inv_cov[k] = inv / det;
        prep.opacity[k] = sigmoid(cloud.gaussians[pg.source_index].opacity_logit);
        prep.far_default = std::max(prep.far_default, pg.depth);

        const double mid = 0.5 * (pg.cov2d(0, 0) + pg.cov2d(1, 1));
        const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
        const double radius = kFootprintSigmas * std::sqrt(lambda_max);
        x0[k] = std::max(0, static_cast<int>(std::ceil(pg.mean2d.x() - radius)));
        x1[k] = std::min(intr.width - 1, static_cast<int>(std::floor(pg.mean2d.x() + radius)));
        y0[k] = std::max(0, static_cast<int>(std::ceil(pg.mean2d.y() - radius)));
        y1[k] = std::min(intr.height - 1, static_cast<int>(std::floor(pg.mean2d.y() + radius)));
    }

    const std::size_t pixel_count = static_cast<std::size_t>(intr.width) * intr.height;
    prep.offsets.assign(pixel_count + 1, 0);
    for (std::size_t k = 0; k < n; ++k) {
        for (int y = y0[k]; y <= y1[k]; ++y)
            for (int x = x0[k]; x <= x1[k]; ++x)
                prep.offsets[static_cast<std::size_t>(y) * intr.width + x + 1]++;
    }
    for (std::size_t p = 0; p < pixel_count; ++p) prep.offsets[p + 1] += prep.offsets[p];
    prep.indices.resize(prep.offsets[pixel_count]);
    std::vector<std::uint32_t> cursor(prep.offsets.begin(), prep.offsets.end() - 1);
    for (std::size_t k = 0; k < n; ++k) {
        for (int y = y0[k]; y <= y1[k]; ++y)
            for (int x = x0[k]; x <= x1[k]; ++x)
                prep.indices[cursor[static_cast<std::size_t>(y) * intr.width + x]++] = static_cast<std::uint32_t>(k);
    }
    return prep;
}

}  // namespace detail

/// Front-to-back alpha compositing of the depth-sorted splats over each pixel.
/// Terminates a pixel once transmittance drops below 1e-4; remaining
/// transmittance falls to the background color and the far depth (the maximum
/// projected depth in this view).
inline RenderOutput rasterize(const GaussianCloud& cloud, const CameraPose& pose, const CameraIntrinsics& intr) {
    const detail::RasterPrep prep = detail::prepare_raster(cloud, pose, intr);
    RenderOutput out;
    out.color = ImageD(intr.width, intr.height, 3);
    out.depth = ImageD(intr.width, intr.height, 1);
    out.final_transmittance = ImageD(intr.width, intr.height, 1);

    const double sigma_cut = kFootprintSigmas * kFootprintSigmas;
    for (int y = 0; y < intr.height; ++y) {
        for (int x = 0; x < intr.width; ++x) {
            const std::size_t pix = static_cast<std::size_t>(y) * intr.width + x;
            const Eigen::Vector2d pixel(x, y);
            double t = 1.0;
            Eigen::Vector3d color_acc = Eigen::Vector3d::Zero();
            double depth_acc = 0.0;
            for (std::uint32_t pos = prep.offsets[pix]; pos < prep.offsets[pix + 1]; ++pos) {
                const std::uint32_t k = prep.indices[pos];
                const auto& pg = prep.projected[k];
                const Eigen::Vector2d d = pixel - pg.mean2d;
                const double md2 = d.dot(prep.inv_cov[k] * d);
                if (md2 > sigma_cut) continue;
                const double alpha = std::min(kAlphaCap, prep.opacity[k] * std::exp(-0.5 * md2));
                const double weight = alpha * t;
                color_acc += weight * cloud.gaussians[pg.source_index].color;
                depth_acc += weight * pg.depth;
                t *= 1.0 - alpha;
                if (t < kTransmittanceFloor) break;
            }
            for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = color_acc(c) + t * cloud.background(c);
            out.depth.at(x, y) = depth_acc + t * prep.far_default;
            out.final_transmittance.at(x, y) = t;
        }
    }
    return out;
}

/// Analytic gradients of sum(upstream_color_grad * color) +
/// sum(upstream_depth_grad * depth) with respect to every splat parameter.
/// The far-depth completion term is treated as constant. Accumulation order is
/// pixel-major and single-threaded, so results are bit-deterministic.
inline CloudGrads render_backward(const GaussianCloud& cloud, const CameraPose& pose, const CameraIntrinsics& intr,
                                  const ImageD& upstream_color_grad, const ImageD& upstream_depth_grad) {
    if (upstream_color_grad.width() != intr.width || upstream_color_grad.height() != intr.height ||
        upstream_color_grad.channels() != 3)
        throw ValidationError("render_backward: color gradient raster shape mismatch");
    const bool has_depth_grad = !upstream_depth_grad.empty();
    if (has_depth_grad &&
        (upstream_depth_grad.width() != intr.width || upstream_depth_grad.height() != intr.height ||
         upstream_depth_grad.channels() != 1))
        throw ValidationError("render_backward: depth gradient raster shape mismatch");

    const detail::RasterPrep prep = detail::prepare_raster(cloud, pose, intr);
    const std::size_t n = prep.projected.size();

    // screen-space accumulators per projected splat
    std::vector<Eigen::Vector2d> d_mean2d(n, Eigen::Vector2d::Zero());
    std::vector<Eigen::Matrix2d> d_inv_cov(n, Eigen::Matrix2d::Zero());
    std::vector<double> d_depth(n, 0.0);
    std::vector<double> d_opacity(n, 0.0);
    CloudGrads grads(cloud.size());

    struct Contrib {
        std::uint32_t k;
        double alpha;
        double t_before;
        double gauss;
        Eigen::Vector2d d;
    };
    std::vector<Contrib> contribs;

    const double sigma_cut = kFootprintSigmas * kFootprintSigmas;
    for (int y = 0; y < intr.height; ++y) {
        for (int x = 0; x < intr.width; ++x) {
            const std::size_t pix = static_cast<std::size_t>(y) * intr.width + x;
            if (prep.offsets[pix] == prep.offsets[pix + 1]) continue;
            const Eigen::Vector2d pixel(x, y);
            const Eigen::Vector3d g_color(upstream_color_grad.at(x, y, 0), upstream_color_grad.at(x, y, 1),
                                          upstream_color_grad.at(x, y, 2));
            const double g_depth = has_depth_grad ? upstream_depth_grad.at(x, y) : 0.0;
            if (g_color.isZero(0.0) && g_depth == 0.0) continue;

            contribs.clear();
            double t = 1.0;
            Eigen::Vector3d color_total = Eigen::Vector3d::Zero();
            double depth_total = 0.0;
            for (std::uint32_t pos = prep.offsets[pix]; pos < prep.offsets[pix + 1]; ++pos) {
                const std::uint32_t k = prep.indices[pos];
                const auto& pg = prep.projected[k];
                const Eigen::Vector2d d = pixel - pg.mean2d;
                const double md2 = d.dot(prep.inv_cov[k] * d);
                if (md2 > sigma_cut) continue;
                const double gauss = std::exp(-0.5 * md2);
                const double alpha = std::min(kAlphaCap, prep.opacity[k] * gauss);
                contribs.push_back({k, alpha, t, gauss, d});
                const double weight = alpha * t;
                color_total += weight * cloud.gaussians[pg.source_index].color;
                depth_total += weight * pg.depth;
                t *= 1.0 - alpha;
                if (t < kTransmittanceFloor) break;
            }
            const double t_final = t;

            Eigen::Vector3d color_prefix = Eigen::Vector3d::Zero();
            double depth_prefix = 0.0;
            for (const Contrib& cb : contribs) {
                const auto& pg = prep.projected[cb.k];
                const Eigen::Vector3d& splat_color = cloud.gaussians[pg.source_index].color;
                const double weight = cb.alpha * cb.t_before;
                color_prefix += weight * splat_color;
                depth_prefix += weight * pg.depth;
                const Eigen::Vector3d color_after = color_total - color_prefix;
                const double depth_after = depth_total - depth_prefix;

                grads.color[pg.source_index] += weight * g_color;
                d_depth[cb.k] += weight * g_depth;

                const double inv_one_minus = 1.0 / (1.0 - cb.alpha);
                double dl_dalpha =
                    g_color.dot(splat_color * cb.t_before -
                                (color_after + t_final * cloud.background) * inv_one_minus);
                dl_dalpha += g_depth * (pg.depth * cb.t_before -
                                        (depth_after + t_final * prep.far_default) * inv_one_minus);

                if (prep.opacity[cb.k] * cb.gauss < kAlphaCap) {
                    d_opacity[cb.k] += dl_dalpha * cb.gauss;
                    const Eigen::Vector2d ad = prep.inv_cov[cb.k] * cb.d;
                    d_mean2d[cb.k] += dl_dalpha * cb.alpha * ad;
                    d_inv_cov[cb.k] += (-0.5 * dl_dalpha * cb.alpha) * (cb.d * cb.d.transpose());
                }
            }
        }
    }

    // chain screen-space gradients back to 3d parameters
    for (std::size_t k = 0; k < n; ++k) {
        const auto& pg = prep.projected[k];
        const int src = pg.source_index;
        const Gaussian3D& g = cloud.gaussians[src];

        const Eigen::Vector3d p = pose.rotation * g.position + pose.translation;
        const double inv_z = 1.0 / p.z();
        Eigen::Matrix<double, 2, 3> j;
        j << intr.fx * inv_z, 0.0, -intr.fx * p.x() * inv_z * inv_z,
             0.0, intr.fy * inv_z, -intr.fy * p.y() * inv_z * inv_z;
        const Eigen::Matrix<double, 2, 3> m = j * pose.rotation;
        const Eigen::Matrix3d rot_q =
            quaternion_to_matrix(g.rotation(0), g.rotation(1), g.rotation(2), g.rotation(3));
        const Eigen::Vector3d variances = (2.0 * g.log_scale).array().exp();
        const Eigen::Matrix3d sigma3 = rot_q * variances.asDiagonal() * rot_q.transpose();

        // d(loss)/d(cov2d) from the accumulated d(loss)/d(inv_cov)
        const Eigen::Matrix2d g_cov2d = -prep.inv_cov[k] * d_inv_cov[k] * prep.inv_cov[k];

        const Eigen::Matrix3d g_sigma3 = m.transpose() * g_cov2d * m;
        const Eigen::Matrix<double, 2, 3> g_m = 2.0 * g_cov2d * m * sigma3;
        const Eigen::Matrix<double, 2, 3> g_j = g_m * pose.rotation.transpose();

        Eigen::Vector3d g_p = Eigen::Vector3d::Zero();
        g_p.x() += d_mean2d[k].x() * intr.fx * inv_z;
        g_p.y() += d_mean2d[k].y() * intr.fy * inv_z;
        g_p.z() += d_mean2d[k].x() * (-intr.fx * p.x() * inv_z * inv_z) +
                   d_mean2d[k].y() * (-intr.fy * p.y() * inv_z * inv_z);
        g_p.z() += d_depth[k];
        g_p.x() += g_j(0, 2) * (-intr.fx * inv_z * inv_z);
        g_p.y() += g_j(1, 2) * (-intr.fy * inv_z * inv_z);
        g_p.z() += g_j(0, 0) * (-intr.fx * inv_z * inv_z) + g_j(1, 1) * (-intr.fy * inv_z * inv_z) +
                   g_j(0, 2) * (2.0 * intr.fx * p.x() * inv_z * inv_z * inv_z) +
                   g_j(1, 2) * (2.0 * intr.fy * p.y() * inv_z * inv_z * inv_z);

        grads.position[src] += pose.rotation.transpose() * g_p;

        const Eigen::Matrix3d g_rot_q = 2.0 * g_sigma3 * rot_q * variances.asDiagonal();
        const Eigen::Matrix3d d_in_scale_frame = rot_q.transpose() * g_sigma3 * rot_q;
        for (int a = 0; a < 3; ++a)
            grads.log_scale[src](a) += d_in_scale_frame(a, a) * 2.0 * variances(a);

        const double qw = g.rotation(0), qx = g.rotation(1), qy = g.rotation(2), qz = g.rotation(3);
        Eigen::Matrix3d dr_dw, dr_dx, dr_dy, dr_dz;
        dr_dw << 0, -2 * qz, 2 * qy, 2 * qz, 0, -2 * qx, -2 * qy, 2 * qx, 0;
        dr_dx << 0, 2 * qy, 2 * qz, 2 * qy, -4 * qx, -2 * qw, 2 * qz, 2 * qw, -4 * qx;
        dr_dy << -4 * qy, 2 * qx, 2 * qw, 2 * qx, 0, 2 * qz, -2 * qw, 2 * qz, -4 * qy;
        dr_dz << -4 * qz, -2 * qw, 2 * qx, 2 * qw, -4 * qz, 2 * qy, 2 * qx, 2 * qy, 0;
        grads.rotation[src](0) += g_rot_q.cwiseProduct(dr_dw).sum();
        grads.rotation[src](1) += g_rot_q.cwiseProduct(dr_dx).sum();
        grads.rotation[src](2) += g_rot_q.cwiseProduct(dr_dy).sum();
        grads.rotation[src](3) += g_rot_q.cwiseProduct(dr_dz).sum();

        const double o = prep.opacity[k];
        grads.opacity_logit[src] += d_opacity[k] * o * (1.0 - o);
    }
    return grads;
}

}  // namespace splatpaint
