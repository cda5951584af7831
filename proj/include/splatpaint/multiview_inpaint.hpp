// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "splatpaint/common.hpp"
#include "splatpaint/config.hpp"
#include "splatpaint/ddim.hpp"
#include "splatpaint/image.hpp"
#include "splatpaint/scene_io.hpp"
#include "splatpaint/score_model.hpp"
#include "splatpaint/view_select.hpp"

namespace splatpaint {

namespace detail {

inline Condition make_view_condition(const View& view, const ImageD& rendered, const PipelineConfig& config,
                                     const InpaintPrompts& prompts) {
    Condition cond;
    cond.text = prompts.positive;
    cond.text_negative = prompts.negative;
    cond.mask = view.mask;
    cond.known_image = rendered;
    cond.guidance_scale = config.guidance_scale;
    cond.cond_scale_texture = config.cond_scale_texture;
    cond.cond_scale_depth = config.cond_scale_depth;
    return cond;
}

}  // namespace detail

/// Coarse-stage multiview inpainting. Reference views (per the clustering) are
/// inverted and resampled first while their per-step attention features are
/// captured; the remaining views then sample with those features blended into
/// every attention block. Returns the inpainted image per view id.
inline std::map<int, ImageD> inpaint_multiview(const SceneBundle& scene, const std::map<int, ImageD>& rendered,
                                               const Clustering& clustering, const ScoreModel& model,
                                               const PipelineConfig& config, const NoiseSchedule& schedule,
                                               ClipImageHook clip_image_hook = {}) {
    std::vector<int> reference_ids = clustering.references().reference_view_ids;
    std::sort(reference_ids.begin(), reference_ids.end());

    std::map<int, ImageD> inpainted;
    AfpContext afp;
    afp.lambda_a = config.lambda_a;
    afp.clip_image_hook = std::move(clip_image_hook);

    const auto inpaint_one = [&](const View& view, const AfpContext* context,
                                 std::vector<BlockFeatures>* capture) {
        const auto it = rendered.find(view.id);
        if (it == rendered.end())
            throw ValidationError("inpaint_multiview: no rendered image for view " + std::to_string(view.id));
        const Condition cond = detail::make_view_condition(view, it->second, config, scene.prompts);
        const std::vector<LatentImage> trajectory = ddim_invert(it->second, config.ddim_steps, model, cond, schedule);
        return ddim_sample(trajectory.back().data, config.ddim_steps, model, cond, schedule, context, capture);
    };

    for (int id : reference_ids) {
        const View& view = scene.view_by_id(id);
        std::vector<BlockFeatures> capture;
        ImageD image = inpaint_one(view, nullptr, &capture);
        if (afp.clip_image_hook) afp.clip_image_hook(image);
        afp.references.push_back(std::move(capture));
        inpainted.emplace(id, std::move(image));
    }

    for (const View& view : scene.views) {
        if (inpainted.count(view.id)) continue;
        inpainted.emplace(view.id, inpaint_one(view, &afp, nullptr));
    }
    return inpainted;
}

}  // namespace splatpaint
