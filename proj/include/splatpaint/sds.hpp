// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "splatpaint/image.hpp"
#include "splatpaint/schedule.hpp"
#include "splatpaint/score_model.hpp"

namespace splatpaint {

enum class SdsWeightMode {
    one_minus_alpha_bar,
    constant_one,
};

inline SdsWeightMode parse_sds_weight_mode(const std::string& name) {
    if (name == "one_minus_alpha_bar") return SdsWeightMode::one_minus_alpha_bar;
    if (name == "constant") return SdsWeightMode::constant_one;
    throw ValidationError("unknown sds weight mode '" + name + "' (expected one_minus_alpha_bar or constant)");
}

struct SdsConfig {
    double t_min_frac = 0.02;
    double t_max_frac = 0.98;
    SdsWeightMode weight_mode = SdsWeightMode::one_minus_alpha_bar;

    void validate() const {
        if (!(t_min_frac >= 0.0 && t_max_frac <= 1.0 && t_min_frac <= t_max_frac))
            throw ValidationError("sds timestep fractions must satisfy 0 <= min <= max <= 1");
    }
};

/// One score-distillation draw: the sampled timestep, the injected noise, the
/// model's prediction for the noised input, and the timestep weight.
struct SdsSample {
    int t = 0;
    ImageD epsilon;
    ImageD predicted;
    double weight = 0.0;
};

/// Score-distillation gradient w(t) * (eps_hat - eps) with respect to the
/// rendered image x. The chain through the splat parameters is applied by the
/// renderer's backward pass.
inline ImageD sds_grad(const ImageD& x, const ScoreModel& model, const Condition& cond,
                       const NoiseSchedule& schedule, Rng& rng, const SdsConfig& config = SdsConfig(),
                       SdsSample* out_sample = nullptr) {
    config.validate();
    schedule.validate();
    const int t_lo = std::max<int>(1, std::lround(config.t_min_frac * schedule.timesteps));
    const int t_hi = std::min<int>(schedule.timesteps, std::lround(config.t_max_frac * schedule.timesteps));

    SdsSample sample;
    sample.t = t_lo + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(t_hi - t_lo) + 1));
    const double ab = schedule.at(sample.t);
    sample.weight = config.weight_mode == SdsWeightMode::one_minus_alpha_bar ? 1.0 - ab : 1.0;

    sample.epsilon = ImageD(x.width(), x.height(), x.channels());
    for (double& v : sample.epsilon.data()) v = rng.normal();

    ImageD noised(x.width(), x.height(), x.channels());
    const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
    for (std::size_t i = 0; i < x.size(); ++i) noised[i] = sa * x[i] + sb * sample.epsilon[i];

    sample.predicted = model.predict_noise(noised, sample.t, cond);

    ImageD grad(x.width(), x.height(), x.channels());
    for (std::size_t i = 0; i < x.size(); ++i)
        grad[i] = sample.weight * (sample.predicted[i] - sample.epsilon[i]);
    if (out_sample) *out_sample = std::move(sample);
    return grad;
}

/// Texture-guided SDS: the conditioning rasters are blanked wherever the warp
/// validity is zero, and the returned gradient is blanked outside the
/// inpainting mask so only masked pixels backpropagate.
inline ImageD tg_sds_grad(const ImageD& x, const MaskImage& mask, const MaskImage& edge_map,
                          const ImageD& depth_map, const MaskImage& validity, const ScoreModel& model,
                          const Condition& base_cond, const NoiseSchedule& schedule, Rng& rng,
                          const SdsConfig& config = SdsConfig(), SdsSample* out_sample = nullptr) {
    const auto check_mask = [&x](const MaskImage& m, const char* who) {
        if (m.width() != x.width() || m.height() != x.height())
            throw ValidationError(std::string("tg_sds_grad: ") + who + " shape disagrees with the image");
    };
    check_mask(mask, "mask");
    check_mask(edge_map, "edge map");
    check_mask(validity, "validity");
    if (depth_map.width() != x.width() || depth_map.height() != x.height() || depth_map.channels() != 1)
        throw ValidationError("tg_sds_grad: depth map shape disagrees with the image");

    Condition cond = base_cond;
    cond.mask = mask;
    cond.edge_map = edge_map;
    cond.depth_map = depth_map;
    cond.validity = validity;
    for (int y = 0; y < x.height(); ++y)
        for (int x0 = 0; x0 < x.width(); ++x0) {
            if (validity.at(x0, y)) continue;
            cond.edge_map.at(x0, y) = 0;
            cond.depth_map.at(x0, y) = 0.0;
        }

    ImageD grad = sds_grad(x, model, cond, schedule, rng, config, out_sample);
    for (int y = 0; y < x.height(); ++y)
        for (int x0 = 0; x0 < x.width(); ++x0) {
            if (mask.at(x0, y)) continue;
            for (int c = 0; c < grad.channels(); ++c) grad.at(x0, y, c) = 0.0;
        }
    return grad;
}

}  // namespace splatpaint
