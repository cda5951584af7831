// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "splatpaint/common.hpp"

namespace splatpaint {

/// Every tunable of the pipeline, loaded from a flat key=value text file.
/// Unknown keys are rejected so typos fail loudly.
struct PipelineConfig {
    // reference-view selection
    int k_clusters = 3;

    // attention feature blending
    double lambda_a = 0.6;

    // loss weights
    double lambda_dssim = 0.2;
    double lambda_rgb = 1.0;
    double lambda_depth = 0.05;
    double lambda_tgsds = 0.01;

    // diffusion guidance and conditioning
    double guidance_scale = 7.5;
    double cond_scale_depth = 1.0;
    double cond_scale_texture = 0.8;

    // diffusion time discretization
    int schedule_timesteps = 1000;
    int ddim_steps = 50;
    double t_min_frac = 0.02;
    double t_max_frac = 0.98;
    std::string sds_weight_mode = "one_minus_alpha_bar";  // or "constant"

    // stage iteration budgets
    int coarse_iterations = 2000;
    int fine_iterations = 1000;

    std::uint64_t seed = 0;

    // pluggable learned components
    std::string score_model = "point_target";  // or "tiny_attention_unet"
    std::string score_model_x0;                // image path for point_target; empty = constant 0.5
    std::string score_model_weights;           // weight file for tiny_attention_unet; empty = built-in seed 0
    std::string depth_estimator = "rendered_passthrough";  // or "constant_plane"
    double depth_plane_base = 2.0;
    double depth_plane_slope = 0.01;
    std::string depth_condition_source = "estimator";  // or "warped"

    // optimizer
    double lr_position = 1.6e-4;
    double lr_rotation = 1e-3;
    double lr_scale = 5e-3;
    double lr_opacity = 5e-2;
    double lr_color = 2.5e-3;
    int prune_interval = 500;  // optimizer steps between opacity pruning passes; 0 disables
    double prune_opacity = 0.005;

    // renderer background
    double background_r = 0.0;
    double background_g = 0.0;
    double background_b = 0.0;

    void validate() const;
    std::string serialize() const;
    std::uint64_t hash() const { return fnv1a64(serialize()); }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct ConfigField {
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const std::string&)> set;
};

inline double parse_double_field(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ValidationError("config: invalid number for " + key + ": '" + value + "'");
    }
    if (pos != value.size()) throw ValidationError("config: invalid number for " + key + ": '" + value + "'");
    return v;
}

inline long long parse_int_field(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        throw ValidationError("config: invalid integer for " + key + ": '" + value + "'");
    }
    if (pos != value.size()) throw ValidationError("config: invalid integer for " + key + ": '" + value + "'");
    return v;
}

inline const std::map<std::string, ConfigField>& config_fields() {
    static const std::map<std::string, ConfigField> fields = [] {
        std::map<std::string, ConfigField> m;
        auto add_int = [&m](const std::string& key, int PipelineConfig::*member) {
            m[key] = {[member](const PipelineConfig& c) { return std::to_string(c.*member); },
                      [member, key](PipelineConfig& c, const std::string& v) {
                          c.*member = static_cast<int>(parse_int_field(key, v));
                      }};
        };
        auto add_double = [&m](const std::string& key, double PipelineConfig::*member) {
            m[key] = {[member](const PipelineConfig& c) { return format_double(c.*member); },
                      [member, key](PipelineConfig& c, const std::string& v) {
                          c.*member = parse_double_field(key, v);
                      }};
        };
        auto add_string = [&m](const std::string& key, std::string PipelineConfig::*member) {
            m[key] = {[member](const PipelineConfig& c) { return c.*member; },
                      [member](PipelineConfig& c, const std::string& v) { c.*member = v; }};
        };
        add_int("k_clusters", &PipelineConfig::k_clusters);
        add_double("lambda_a", &PipelineConfig::lambda_a);
        add_double("lambda_dssim", &PipelineConfig::lambda_dssim);
        add_double("lambda_rgb", &PipelineConfig::lambda_rgb);
        add_double("lambda_depth", &PipelineConfig::lambda_depth);
        add_double("lambda_tgsds", &PipelineConfig::lambda_tgsds);
        add_double("guidance_scale", &PipelineConfig::guidance_scale);
        add_double("cond_scale_depth", &PipelineConfig::cond_scale_depth);
        add_double("cond_scale_texture", &PipelineConfig::cond_scale_texture);
        add_int("schedule_timesteps", &PipelineConfig::schedule_timesteps);
        add_int("ddim_steps", &PipelineConfig::ddim_steps);
        add_double("t_min_frac", &PipelineConfig::t_min_frac);
        add_double("t_max_frac", &PipelineConfig::t_max_frac);
        add_string("sds_weight_mode", &PipelineConfig::sds_weight_mode);
        add_int("coarse_iterations", &PipelineConfig::coarse_iterations);
        add_int("fine_iterations", &PipelineConfig::fine_iterations);
        m["seed"] = {[](const PipelineConfig& c) { return std::to_string(c.seed); },
                     [](PipelineConfig& c, const std::string& v) {
                         c.seed = static_cast<std::uint64_t>(parse_int_field("seed", v));
                     }};
        add_string("score_model", &PipelineConfig::score_model);
        add_string("score_model_x0", &PipelineConfig::score_model_x0);
        add_string("score_model_weights", &PipelineConfig::score_model_weights);
        add_string("depth_estimator", &PipelineConfig::depth_estimator);
        add_double("depth_plane_base", &PipelineConfig::depth_plane_base);
        add_double("depth_plane_slope", &PipelineConfig::depth_plane_slope);
        add_string("depth_condition_source", &PipelineConfig::depth_condition_source);
        add_double("lr_position", &PipelineConfig::lr_position);
        add_double("lr_rotation", &PipelineConfig::lr_rotation);
        add_double("lr_scale", &PipelineConfig::lr_scale);
        add_double("lr_opacity", &PipelineConfig::lr_opacity);
        add_double("lr_color", &PipelineConfig::lr_color);
        add_int("prune_interval", &PipelineConfig::prune_interval);
        add_double("prune_opacity", &PipelineConfig::prune_opacity);
        add_double("background_r", &PipelineConfig::background_r);
        add_double("background_g", &PipelineConfig::background_g);
        add_double("background_b", &PipelineConfig::background_b);
        return m;
    }();
    return fields;
}

}  // namespace detail

inline void PipelineConfig::validate() const {
    auto check = [](bool ok, const std::string& msg) {
        if (!ok) throw ValidationError("config: " + msg);
    };
    check(k_clusters >= 1, "k_clusters must be >= 1");
    check(lambda_a >= 0.0 && lambda_a <= 1.0, "lambda_a must be in [0,1]");
    check(lambda_dssim >= 0.0 && lambda_dssim <= 1.0, "lambda_dssim must be in [0,1]");
    check(std::isfinite(lambda_rgb) && lambda_rgb >= 0.0, "lambda_rgb must be finite and non-negative");
    check(std::isfinite(lambda_depth) && lambda_depth >= 0.0, "lambda_depth must be finite and non-negative");
    check(std::isfinite(lambda_tgsds) && lambda_tgsds >= 0.0, "lambda_tgsds must be finite and non-negative");
    check(guidance_scale >= 1.0, "guidance_scale must be >= 1");
    check(cond_scale_depth >= 0.0 && cond_scale_depth <= 2.0, "cond_scale_depth must be in [0,2]");
    check(cond_scale_texture >= 0.0 && cond_scale_texture <= 2.0, "cond_scale_texture must be in [0,2]");
    check(schedule_timesteps >= 1, "schedule_timesteps must be >= 1");
    check(ddim_steps >= 1, "ddim_steps must be >= 1");
    check(t_min_frac < t_max_frac, "t_min_frac must be < t_max_frac");
    check(t_min_frac >= 0.0 && t_max_frac <= 1.0, "timestep fractions must lie in [0,1]");
    check(sds_weight_mode == "one_minus_alpha_bar" || sds_weight_mode == "constant",
          "sds_weight_mode must be one_minus_alpha_bar or constant");
    check(coarse_iterations >= 0 && fine_iterations >= 0, "iteration counts must be non-negative");
    check(score_model == "point_target" || score_model == "tiny_attention_unet",
          "score_model must be point_target or tiny_attention_unet");
    check(depth_estimator == "rendered_passthrough" || depth_estimator == "constant_plane",
          "depth_estimator must be rendered_passthrough or constant_plane");
    check(depth_condition_source == "estimator" || depth_condition_source == "warped",
          "depth_condition_source must be estimator or warped");
    check(lr_position > 0.0 && lr_rotation > 0.0 && lr_scale > 0.0 && lr_opacity > 0.0 && lr_color > 0.0,
          "learning rates must be positive");
    check(prune_interval >= 0, "prune_interval must be >= 0");
    check(prune_opacity >= 0.0 && prune_opacity < 1.0, "prune_opacity must be in [0,1)");
}

/// Canonical sorted key=value serialization; also what the config hash covers.
inline std::string PipelineConfig::serialize() const {
    std::ostringstream out;
    for (const auto& [key, field] : detail::config_fields()) {
        out << key << "=" << field.get(*this) << "\n";
    }
    return out.str();
}

inline PipelineConfig parse_config_text(std::istream& in, const std::string& origin) {
    PipelineConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config: missing '=' at " + origin + ":" + std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& fields = detail::config_fields();
        auto it = fields.find(key);
        if (it == fields.end()) {
            throw ValidationError("config: unknown key '" + key + "' at " + origin + ":" + std::to_string(line_no));
        }
        it->second.set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("config: cannot open " + path);
    return parse_config_text(f, path);
}

}  // namespace splatpaint
