// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "splatpaint/common.hpp"
#include "splatpaint/image.hpp"
#include "splatpaint/schedule.hpp"
#include "splatpaint/score_model.hpp"

namespace splatpaint {

struct LatentImage {
    ImageD data;
    int t = 0;
};

namespace detail {

inline ImageD ddim_transition(const ImageD& x, const ImageD& eps, double ab_from, double ab_to) {
    const double sqrt_from = std::sqrt(ab_from);
    const double sqrt_1m_from = std::sqrt(1.0 - ab_from);
    const double sqrt_to = std::sqrt(ab_to);
    const double sqrt_1m_to = std::sqrt(1.0 - ab_to);
    ImageD out(x.width(), x.height(), x.channels());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0_hat = (x[i] - sqrt_1m_from * eps[i]) / sqrt_from;
        out[i] = sqrt_to * x0_hat + sqrt_1m_to * eps[i];
    }
    return out;
}

inline void check_latent_finite(const ImageD& x, const char* op, int step, int t) {
    if (!x.all_finite())
        throw NumericError(std::string(op) + ": non-finite latent at step " + std::to_string(step) +
                           " (t=" + std::to_string(t) + ")");
}

}  // namespace detail

/// Deterministic DDIM inversion: walks the uniform sub-schedule upward from
/// t=0, producing the full latent trajectory (steps + 1 entries, the first
/// being x0 itself).
inline std::vector<LatentImage> ddim_invert(const ImageD& x0, int steps, const ScoreModel& model,
                                            const Condition& cond, const NoiseSchedule& schedule) {
    if (x0.empty() || !x0.all_finite()) throw ValidationError("ddim_invert: input image must be non-empty and finite");
    cond.validate_for(x0);
    const std::vector<int> tau = ddim_timesteps(schedule, steps);

    std::vector<LatentImage> trajectory;
    trajectory.reserve(steps + 1);
    trajectory.push_back({x0, 0});
    ImageD x = x0;
    for (int i = 0; i < steps; ++i) {
        const int t = tau[i];
        const int t_next = tau[i + 1];
        const ImageD eps = model.predict_noise(x, t, cond);
        x = detail::ddim_transition(x, eps, schedule.at(t), schedule.at(t_next));
        detail::check_latent_finite(x, "ddim_invert", i + 1, t_next);
        trajectory.push_back({x, t_next});
    }
    return trajectory;
}

/// Deterministic DDIM sampling (eta = 0) from the latent at t = T down to
/// t = 0. With guidance_scale > 1 the prediction is the classifier-free
/// combination of the positive- and negative-prompt passes. When
/// cond.known_image is set, mask=0 pixels are overwritten with the
/// schedule-noised known image after every transition, so only masked content
/// is synthesized. `afp` blends reference attention features into every
/// attention block; `capture` records this run's per-step block features.
inline ImageD ddim_sample(const ImageD& x_start, int steps, const ScoreModel& model, const Condition& cond,
                          const NoiseSchedule& schedule, const AfpContext* afp = nullptr,
                          std::vector<BlockFeatures>* capture = nullptr) {
    if (x_start.empty() || !x_start.all_finite())
        throw ValidationError("ddim_sample: start latent must be non-empty and finite");
    cond.validate_for(x_start);
    const std::vector<int> tau = ddim_timesteps(schedule, steps);
    if (afp) afp->validate(steps);

    const bool blend = !cond.known_image.empty();
    if (blend && cond.mask.empty())
        throw ValidationError("ddim_sample: latent blending requires a mask alongside known_image");

    Condition cond_neg = cond;
    cond_neg.text = cond.text_negative;

    ImageD x = x_start;
    for (int i = steps; i >= 1; --i) {
        const int t = tau[i];
        const int t_prev = tau[i - 1];
        const int slot = steps - i;

        AfpStepView step_view;
        if (afp) {
            step_view.lambda_a = afp->lambda_a;
            step_view.references.reserve(afp->references.size());
            for (const auto& trajectory : afp->references) step_view.references.push_back(&trajectory[slot]);
        }
        const AfpStepView* step = afp ? &step_view : nullptr;

        BlockFeatures step_capture;
        ImageD eps = model.predict_noise(x, t, cond, step, capture ? &step_capture : nullptr);
        if (cond.guidance_scale > 1.0) {
            const ImageD eps_neg = model.predict_noise(x, t, cond_neg, step);
            for (std::size_t k = 0; k < eps.size(); ++k)
                eps[k] = eps_neg[k] + cond.guidance_scale * (eps[k] - eps_neg[k]);
        }

        x = detail::ddim_transition(x, eps, schedule.at(t), schedule.at(t_prev));

        if (blend) {
            const double sqrt_ab = std::sqrt(schedule.at(t_prev));
            const double sqrt_1m = std::sqrt(1.0 - schedule.at(t_prev));
            for (int y = 0; y < x.height(); ++y)
                for (int px = 0; px < x.width(); ++px) {
                    if (cond.mask.at(px, y)) continue;
                    for (int c = 0; c < x.channels(); ++c)
                        x.at(px, y, c) = sqrt_ab * cond.known_image.at(px, y, c) + sqrt_1m * eps.at(px, y, c);
                }
        }

        detail::check_latent_finite(x, "ddim_sample", steps - i + 1, t_prev);
        if (capture) capture->push_back(std::move(step_capture));
    }
    return x;
}

}  // namespace splatpaint
