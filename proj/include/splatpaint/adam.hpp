// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "splatpaint/gaussian.hpp"
#include "splatpaint/renderer.hpp"

namespace splatpaint {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-15;
    double lr_position = 1.6e-4;
    double lr_rotation = 1e-3;
    double lr_scale = 5e-3;
    double lr_opacity = 5e-2;
    double lr_color = 2.5e-3;
};

/// First and second moment accumulators per parameter group, aligned with the
/// cloud's gaussian list.
struct OptimState {
    std::vector<Eigen::Vector3d> m_position, v_position;
    std::vector<Eigen::Vector4d> m_rotation, v_rotation;
    std::vector<Eigen::Vector3d> m_scale, v_scale;
    std::vector<double> m_opacity, v_opacity;
    std::vector<Eigen::Vector3d> m_color, v_color;
    long step = 0;

    explicit OptimState(std::size_t n = 0) { resize(n); }

    void resize(std::size_t n) {
        m_position.assign(n, Eigen::Vector3d::Zero());
        v_position.assign(n, Eigen::Vector3d::Zero());
        m_rotation.assign(n, Eigen::Vector4d::Zero());
        v_rotation.assign(n, Eigen::Vector4d::Zero());
        m_scale.assign(n, Eigen::Vector3d::Zero());
        v_scale.assign(n, Eigen::Vector3d::Zero());
        m_opacity.assign(n, 0.0);
        v_opacity.assign(n, 0.0);
        m_color.assign(n, Eigen::Vector3d::Zero());
        v_color.assign(n, Eigen::Vector3d::Zero());
        step = 0;
    }

    std::size_t size() const { return m_position.size(); }
};

namespace detail {

template <typename Vec>
void adam_update(Vec& theta, Vec& m, Vec& v, const Vec& grad, double lr, double bc1, double bc2,
                 const AdamConfig& config) {
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
    const Vec m_hat = m / bc1;
    const Vec v_hat = v / bc2;
    theta -= lr * (m_hat.array() / (v_hat.array().sqrt() + config.epsilon)).matrix();
}

inline void adam_update(double& theta, double& m, double& v, double grad, double lr, double bc1, double bc2,
                        const AdamConfig& config) {
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v = config.beta2 * v + (1.0 - config.beta2) * grad * grad;
    theta -= lr * (m / bc1) / (std::sqrt(v / bc2) + config.epsilon);
}

}  // namespace detail

/// One bias-corrected Adam step over every splat parameter group. Quaternions
/// are renormalized afterwards so rotations stay on the unit sphere.
inline void adam_step(GaussianCloud& cloud, const CloudGrads& grads, OptimState& state,
                      const AdamConfig& config = AdamConfig()) {
    if (grads.size() != cloud.gaussians.size())
        throw ValidationError("adam_step: gradient count disagrees with the cloud");
    if (state.size() != cloud.gaussians.size())
        throw ValidationError("adam_step: optimizer state count disagrees with the cloud");
    grads.check_finite("adam_step");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < cloud.gaussians.size(); ++i) {
        Gaussian3D& g = cloud.gaussians[i];
        detail::adam_update(g.position, state.m_position[i], state.v_position[i], grads.position[i],
                            config.lr_position, bc1, bc2, config);
        detail::adam_update(g.rotation, state.m_rotation[i], state.v_rotation[i], grads.rotation[i],
                            config.lr_rotation, bc1, bc2, config);
        detail::adam_update(g.log_scale, state.m_scale[i], state.v_scale[i], grads.log_scale[i],
                            config.lr_scale, bc1, bc2, config);
        detail::adam_update(g.opacity_logit, state.m_opacity[i], state.v_opacity[i], grads.opacity_logit[i],
                            config.lr_opacity, bc1, bc2, config);
        detail::adam_update(g.color, state.m_color[i], state.v_color[i], grads.color[i], config.lr_color, bc1,
                            bc2, config);
        g.normalize_rotation();
    }
}

}  // namespace splatpaint
