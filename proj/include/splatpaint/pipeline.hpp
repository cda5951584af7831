// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "splatpaint/adam.hpp"
#include "splatpaint/conditions.hpp"
#include "splatpaint/config.hpp"
#include "splatpaint/losses.hpp"
#include "splatpaint/multiview_inpaint.hpp"
#include "splatpaint/png_io.hpp"
#include "splatpaint/renderer.hpp"
#include "splatpaint/sds.hpp"
#include "splatpaint/tiny_unet.hpp"
#include "splatpaint/view_select.hpp"

namespace splatpaint {

struct StageReport {
    std::string stage;
    int iterations = 0;
    double final_loss_rgb = 0.0;
    double final_loss_depth = 0.0;
    double final_tgsds_gradnorm = 0.0;
    double final_total = 0.0;
    double wall_seconds = 0.0;
    std::vector<std::string> artifacts;
};

inline LossWeights loss_weights_from(const PipelineConfig& config) {
    LossWeights weights;
    weights.lambda_rgb = config.lambda_rgb;
    weights.lambda_depth = config.lambda_depth;
    weights.lambda_tgsds = config.lambda_tgsds;
    weights.lambda_dssim = config.lambda_dssim;
    weights.validate();
    return weights;
}

inline SdsConfig sds_config_from(const PipelineConfig& config) {
    SdsConfig sds;
    sds.t_min_frac = config.t_min_frac;
    sds.t_max_frac = config.t_max_frac;
    sds.weight_mode = parse_sds_weight_mode(config.sds_weight_mode);
    sds.validate();
    return sds;
}

inline AdamConfig adam_config_from(const PipelineConfig& config) {
    AdamConfig adam;
    adam.lr_position = config.lr_position;
    adam.lr_rotation = config.lr_rotation;
    adam.lr_scale = config.lr_scale;
    adam.lr_opacity = config.lr_opacity;
    adam.lr_color = config.lr_color;
    return adam;
}

/// Builds the configured score model. Point-target models need the view
/// resolution for their default constant-gray target.
inline std::unique_ptr<ScoreModel> make_score_model(const PipelineConfig& config, const NoiseSchedule& schedule,
                                                    int width, int height) {
    if (config.score_model == "point_target") {
        ImageD target = config.score_model_x0.empty() ? make_rgb(width, height, 0.5)
                                                      : read_image_png(config.score_model_x0);
        if (target.width() != width || target.height() != height)
            throw ValidationError("score model target image is " + std::to_string(target.width()) + "x" +
                                  std::to_string(target.height()) + ", views are " + std::to_string(width) + "x" +
                                  std::to_string(height));
        return std::make_unique<PointTargetModel>(std::move(target), schedule);
    }
    if (config.score_model == "tiny_attention_unet") {
        if (config.score_model_weights.empty()) return std::make_unique<TinyAttentionUnet>();
        return std::make_unique<TinyAttentionUnet>(config.score_model_weights);
    }
    throw ValidationError("unknown score model '" + config.score_model +
                          "' (expected point_target or tiny_attention_unet)");
}

inline std::unique_ptr<DepthEstimator> make_depth_estimator(const PipelineConfig& config,
                                                            const ImageD& rendered_depth) {
    if (config.depth_estimator == "rendered_passthrough")
        return std::make_unique<RenderedPassthroughEstimator>(rendered_depth);
    if (config.depth_estimator == "constant_plane")
        return std::make_unique<ConstantPlaneEstimator>(config.depth_plane_base, config.depth_plane_slope);
    throw ValidationError("unknown depth estimator '" + config.depth_estimator +
                          "' (expected rendered_passthrough or constant_plane)");
}

namespace detail {

/// Drops splats below the opacity threshold, keeping the optimizer moments
/// aligned with the surviving splats. Skipped when nothing would survive.
inline std::size_t prune_aligned(GaussianCloud& cloud, OptimState& state, double threshold) {
    std::size_t survivors = 0;
    for (const Gaussian3D& g : cloud.gaussians)
        if (g.opacity() >= threshold) ++survivors;
    if (survivors == 0 || survivors == cloud.gaussians.size()) return 0;

    std::size_t write = 0;
    for (std::size_t read = 0; read < cloud.gaussians.size(); ++read) {
        if (cloud.gaussians[read].opacity() < threshold) continue;
        if (write != read) {
            cloud.gaussians[write] = cloud.gaussians[read];
            state.m_position[write] = state.m_position[read];
            state.v_position[write] = state.v_position[read];
            state.m_rotation[write] = state.m_rotation[read];
            state.v_rotation[write] = state.v_rotation[read];
            state.m_scale[write] = state.m_scale[read];
            state.v_scale[write] = state.v_scale[read];
            state.m_opacity[write] = state.m_opacity[read];
            state.v_opacity[write] = state.v_opacity[read];
            state.m_color[write] = state.m_color[read];
            state.v_color[write] = state.v_color[read];
        }
        ++write;
    }
    const std::size_t pruned = cloud.gaussians.size() - write;
    cloud.gaussians.resize(write);
    state.m_position.resize(write);
    state.v_position.resize(write);
    state.m_rotation.resize(write);
    state.v_rotation.resize(write);
    state.m_scale.resize(write);
    state.v_scale.resize(write);
    state.m_opacity.resize(write);
    state.v_opacity.resize(write);
    state.m_color.resize(write);
    state.v_color.resize(write);
    return pruned;
}

inline double mean_abs(const ImageD& raster) {
    double total = 0.0;
    for (double v : raster.data()) total += std::abs(v);
    return raster.size() ? total / static_cast<double>(raster.size()) : 0.0;
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

struct CoarseResult {
    StageReport report;
    std::map<int, ImageD> inpainted;
    std::map<int, ImageD> depth_targets;
};

/// Coarse stage: render every view, inpaint them jointly, estimate per-view
/// depth targets from the inpainted images, then fit the cloud to those
/// targets with photometric and depth losses.
inline CoarseResult run_coarse(const SceneBundle& scene, GaussianCloud& cloud, const Clustering& clustering,
                               const ScoreModel& model, const PipelineConfig& config,
                               std::ostream* log = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    if (scene.views.empty()) throw ValidationError("run_coarse: scene has no views");
    if (cloud.empty()) throw ValidationError("run_coarse: cloud is empty");

    const NoiseSchedule schedule = make_linear_schedule(config.schedule_timesteps);
    const LossWeights weights = loss_weights_from(config);
    const AdamConfig adam = adam_config_from(config);

    std::map<int, ImageD> rendered_color;
    std::map<int, ImageD> rendered_depth;
    for (const View& view : scene.views) {
        RenderOutput out = rasterize(cloud, view.pose, view.intrinsics);
        rendered_color.emplace(view.id, std::move(out.color));
        rendered_depth.emplace(view.id, std::move(out.depth));
    }

    CoarseResult result;
    result.inpainted = inpaint_multiview(scene, rendered_color, clustering, model, config, schedule);
    for (const View& view : scene.views) {
        const auto estimator = make_depth_estimator(config, rendered_depth.at(view.id));
        result.depth_targets.emplace(view.id, estimator->estimate(result.inpainted.at(view.id)));
    }

    OptimState state(cloud.size());
    double last_rgb = 0.0, last_depth = 0.0, last_total = 0.0;
    for (int iter = 0; iter < config.coarse_iterations; ++iter) {
        const View& view = scene.views[iter % scene.views.size()];
        const RenderOutput out = rasterize(cloud, view.pose, view.intrinsics);
        const LossValue rgb = rgb_loss(out.color, result.inpainted.at(view.id), weights);
        const LossValue depth = depth_loss(out.depth, result.depth_targets.at(view.id));
        last_rgb = rgb.value;
        last_depth = depth.value;
        last_total = total_loss(weights, rgb.value, depth.value, 0.0);
        if (!std::isfinite(last_total))
            throw NumericError("coarse iteration " + std::to_string(iter) + ": non-finite loss");

        ImageD color_grad = rgb.gradient;
        for (double& v : color_grad.data()) v *= weights.lambda_rgb;
        ImageD depth_grad = depth.gradient;
        for (double& v : depth_grad.data()) v *= weights.lambda_depth;

        const CloudGrads grads = render_backward(cloud, view.pose, view.intrinsics, color_grad, depth_grad);
        adam_step(cloud, grads, state, adam);
        if (config.prune_interval > 0 && (iter + 1) % config.prune_interval == 0)
            detail::prune_aligned(cloud, state, config.prune_opacity);
        if (log) *log << format_iteration_log(iter, last_rgb, last_depth, 0.0, last_total) << '\n';
    }

    result.report.stage = "coarse";
    result.report.iterations = config.coarse_iterations;
    result.report.final_loss_rgb = last_rgb;
    result.report.final_loss_depth = last_depth;
    result.report.final_total = last_total;
    result.report.wall_seconds = detail::seconds_since(start);
    return result;
}

/// Fine stage: per iteration, render the round-robin view, build warp-based
/// conditions from its cluster reference, and descend on the texture-guided
/// score gradient plus the photometric and depth losses against the coarse
/// targets.
inline StageReport run_fine(const SceneBundle& scene, GaussianCloud& cloud, const Clustering& clustering,
                            const ScoreModel& model, const PipelineConfig& config,
                            const std::map<int, ImageD>& target_images,
                            const std::map<int, ImageD>& target_depths, std::ostream* log = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    if (scene.views.empty()) throw ValidationError("run_fine: scene has no views");
    if (cloud.empty()) throw ValidationError("run_fine: cloud is empty");

    const NoiseSchedule schedule = make_linear_schedule(config.schedule_timesteps);
    const LossWeights weights = loss_weights_from(config);
    const SdsConfig sds = sds_config_from(config);
    const AdamConfig adam = adam_config_from(config);
    const DepthConditionSource source = parse_depth_condition_source(config.depth_condition_source);
    Rng rng(config.seed);

    Condition base;
    base.text = scene.prompts.positive;
    base.text_negative = scene.prompts.negative;
    base.guidance_scale = config.guidance_scale;
    base.cond_scale_texture = config.cond_scale_texture;
    base.cond_scale_depth = config.cond_scale_depth;

    OptimState state(cloud.size());
    StageReport report;
    for (int iter = 0; iter < config.fine_iterations; ++iter) {
        const View& view = scene.views[iter % scene.views.size()];
        const View& reference = scene.view_by_id(clustering.reference_of(view.id));
        const RenderOutput out = rasterize(cloud, view.pose, view.intrinsics);

        const RenderOutput ref_out = rasterize(cloud, reference.pose, reference.intrinsics);
        const auto estimator = make_depth_estimator(config, ref_out.depth);
        const ConditionRasters conditions = build_conditions(reference, view, ref_out.depth, *estimator, source);

        SdsSample sample;
        const ImageD tg = tg_sds_grad(out.color, view.mask, conditions.edges, conditions.depth,
                                      conditions.validity, model, base, schedule, rng, sds, &sample);
        const LossValue rgb = rgb_loss(out.color, target_images.at(view.id), weights);
        const LossValue depth = depth_loss(out.depth, target_depths.at(view.id));
        const double gradnorm = detail::mean_abs(tg);

        report.final_loss_rgb = rgb.value;
        report.final_loss_depth = depth.value;
        report.final_tgsds_gradnorm = gradnorm;
        report.final_total = total_loss(weights, rgb.value, depth.value, gradnorm);
        if (!std::isfinite(report.final_total))
            throw NumericError("fine iteration " + std::to_string(iter) + ": non-finite loss");

        ImageD color_grad = rgb.gradient;
        for (std::size_t i = 0; i < color_grad.size(); ++i)
            color_grad[i] = weights.lambda_rgb * color_grad[i] + weights.lambda_tgsds * tg[i];
        ImageD depth_grad = depth.gradient;
        for (double& v : depth_grad.data()) v *= weights.lambda_depth;

        const CloudGrads grads = render_backward(cloud, view.pose, view.intrinsics, color_grad, depth_grad);
        adam_step(cloud, grads, state, adam);
        if (log)
            *log << format_iteration_log(iter, rgb.value, depth.value, gradnorm, report.final_total) << '\n';
    }

    report.stage = "fine";
    report.iterations = config.fine_iterations;
    report.wall_seconds = detail::seconds_since(start);
    return report;
}

struct PipelineResult {
    CoarseResult coarse;
    StageReport fine;
};

/// Both stages back to back on the same cloud; the fine stage consumes the
/// coarse stage's inpainted targets.
inline PipelineResult run_pipeline(const SceneBundle& scene, GaussianCloud& cloud, const Clustering& clustering,
                                   const ScoreModel& model, const PipelineConfig& config,
                                   std::ostream* log = nullptr) {
    PipelineResult result;
    result.coarse = run_coarse(scene, cloud, clustering, model, config, log);
    result.fine = run_fine(scene, cloud, clustering, model, config, result.coarse.inpainted,
                           result.coarse.depth_targets, log);
    return result;
}

}  // namespace splatpaint
