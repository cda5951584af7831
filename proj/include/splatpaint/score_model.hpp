// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "splatpaint/canny.hpp"
#include "splatpaint/common.hpp"
#include "splatpaint/image.hpp"
#include "splatpaint/schedule.hpp"

namespace splatpaint {

/// Everything a noise predictor may condition on. Empty rasters mean "absent".
/// `known_image` carries the original rendered view; when set, sampling keeps
/// mask=0 pixels pinned to its schedule-noised values (latent blending).
struct Condition {
    std::string text;           // positive prompt handle
    std::string text_negative;  // negative prompt handle for guidance
    MaskImage mask;             // 1 = synthesize
    EdgeMap edge_map;
    ImageD depth_map;
    MaskImage validity;
    ImageD known_image;
    double guidance_scale = 1.0;
    double cond_scale_texture = 0.8;
    double cond_scale_depth = 1.0;

    void validate_for(const ImageD& latent) const {
        const auto check = [&](int w, int h, const char* name) {
            if (w != latent.width() || h != latent.height())
                throw ValidationError(std::string("condition ") + name + " dimensions do not match the latent");
        };
        if (!mask.empty()) check(mask.width(), mask.height(), "mask");
        if (!edge_map.empty()) check(edge_map.width(), edge_map.height(), "edge_map");
        if (!depth_map.empty()) check(depth_map.width(), depth_map.height(), "depth_map");
        if (!validity.empty()) check(validity.width(), validity.height(), "validity");
        if (!known_image.empty()) {
            check(known_image.width(), known_image.height(), "known_image");
            if (known_image.channels() != latent.channels())
                throw ValidationError("condition known_image channel count does not match the latent");
        }
        if (!(guidance_scale >= 1.0)) throw ValidationError("guidance_scale must be >= 1");
    }
};

/// Keys/values of every attention block in a model, captured at one denoising
/// step of one reference view.
struct BlockFeatures {
    std::vector<Eigen::MatrixXd> keys;
    std::vector<Eigen::MatrixXd> values;
};

using ClipImageHook = std::function<void(const ImageD&)>;

/// Reference-view attention features for a whole sampling run.
/// references[r][s] holds reference r's per-block keys/values at sampling step
/// s, captured during the reference pass with the same step count.
struct AfpContext {
    std::vector<std::vector<BlockFeatures>> references;
    double lambda_a = 0.6;
    ClipImageHook clip_image_hook;  // declared extension point, no-op by default

    std::size_t reference_count() const { return references.size(); }

    void validate(int steps) const {
        if (references.empty()) throw ValidationError("afp context needs at least one reference");
        if (!(lambda_a >= 0.0 && lambda_a <= 1.0)) throw ValidationError("afp lambda_a must be in [0,1]");
        for (const auto& trajectory : references) {
            if (trajectory.size() != static_cast<std::size_t>(steps))
                throw ValidationError("afp reference trajectory length does not match the step count");
        }
    }
};

/// Per-step slice of an AfpContext, as consumed by a model's attention blocks.
struct AfpStepView {
    std::vector<const BlockFeatures*> references;
    double lambda_a = 0.6;
};

/// Conditional noise predictor. Implementations must be deterministic for
/// fixed inputs and safe for concurrent read-only use. When `afp` is given,
/// every self-attention block blends in the reference features; when `capture`
/// is given, the block keys/values of this call are appended to it.
class ScoreModel {
public:
    virtual ~ScoreModel() = default;
    virtual ImageD predict_noise(const ImageD& latent, int t, const Condition& cond,
                                 const AfpStepView* afp = nullptr, BlockFeatures* capture = nullptr) const = 0;
};

/// Exact noise predictor for a point-mass data distribution concentrated on
/// x0_star: eps(x_t, t) = (x_t - sqrt(alpha_bar_t) * x0_star) / sqrt(1 - alpha_bar_t).
/// At t = 0 the fraction is 0/0; this returns zeros there.
class PointTargetModel final : public ScoreModel {
public:
    PointTargetModel(ImageD x0_star, NoiseSchedule schedule)
        : x0_(std::move(x0_star)), schedule_(std::move(schedule)) {
        schedule_.validate();
        if (x0_.empty() || !x0_.all_finite()) throw ValidationError("point_target: x0 must be non-empty and finite");
    }

    const ImageD& target() const { return x0_; }

    ImageD predict_noise(const ImageD& latent, int t, const Condition& cond, const AfpStepView* = nullptr,
                         BlockFeatures* = nullptr) const override {
        if (!latent.same_shape(x0_))
            throw ValidationError("point_target: latent shape does not match the target image");
        cond.validate_for(latent);
        const double ab = schedule_.at(t);
        ImageD eps(latent.width(), latent.height(), latent.channels());
        if (!(ab < 1.0)) {
            eps.fill(0.0);
            return eps;
        }
        const double sqrt_ab = std::sqrt(ab);
        const double inv_sqrt_1m = 1.0 / std::sqrt(1.0 - ab);
        for (std::size_t i = 0; i < latent.size(); ++i) eps[i] = (latent[i] - sqrt_ab * x0_[i]) * inv_sqrt_1m;
        return eps;
    }

private:
    ImageD x0_;
    NoiseSchedule schedule_;
};

}  // namespace splatpaint
