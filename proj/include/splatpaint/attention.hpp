// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splatpaint/common.hpp"

namespace splatpaint {

/// Row-wise softmax(Q K^T / sqrt(d)) V with max-subtraction stabilization.
/// `d` defaults to the key dimension.
inline Eigen::MatrixXd self_attention(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K, const Eigen::MatrixXd& V,
                                      double d = 0.0) {
    if (Q.cols() != K.cols())
        throw ValidationError("self_attention: query dim " + std::to_string(Q.cols()) + " != key dim " +
                              std::to_string(K.cols()));
    if (K.rows() != V.rows())
        throw ValidationError("self_attention: key count " + std::to_string(K.rows()) + " != value count " +
                              std::to_string(V.rows()));
    if (K.rows() == 0) throw ValidationError("self_attention: empty key set");
    if (d == 0.0) d = static_cast<double>(K.cols());
    if (!(d > 0.0)) throw ValidationError("self_attention: key dimension must be positive");

    Eigen::MatrixXd logits = Q * K.transpose() / std::sqrt(d);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double peak = logits.row(r).maxCoeff();
        Eigen::ArrayXd e = (logits.row(r).array() - peak).exp();
        logits.row(r) = (e / e.sum()).matrix();
    }
    return logits * V;
}

/// Attention feature propagation: a lambda_a-weighted blend of the mean
/// cross-attention against the reference keys/values and plain self-attention,
/// output(lambda) = lambda * mean_r Attn(Q, K_r, V_r) + (1 - lambda) * Attn(Q, K, V).
inline Eigen::MatrixXd afp_blend(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K, const Eigen::MatrixXd& V,
                                 const std::vector<Eigen::MatrixXd>& reference_keys,
                                 const std::vector<Eigen::MatrixXd>& reference_values, double lambda_a) {
    if (reference_keys.empty() || reference_keys.size() != reference_values.size())
        throw ValidationError("afp_blend: need matching, non-empty reference key/value lists");
    if (!(lambda_a >= 0.0 && lambda_a <= 1.0)) throw ValidationError("afp_blend: lambda_a must be in [0,1]");
    for (std::size_t r = 0; r < reference_keys.size(); ++r) {
        if (reference_keys[r].cols() != Q.cols())
            throw ValidationError("afp_blend: reference " + std::to_string(r) + " key dim " +
                                  std::to_string(reference_keys[r].cols()) + " != query dim " +
                                  std::to_string(Q.cols()));
    }

    if (lambda_a == 0.0) return self_attention(Q, K, V);

    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(Q.rows(), reference_values[0].cols());
    for (std::size_t r = 0; r < reference_keys.size(); ++r)
        cross += self_attention(Q, reference_keys[r], reference_values[r]);
    cross /= static_cast<double>(reference_keys.size());

    if (lambda_a == 1.0) return cross;
    return lambda_a * cross + (1.0 - lambda_a) * self_attention(Q, K, V);
}

}  // namespace splatpaint
