// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splatpaint/conditions.hpp"
#include "splatpaint/gaussian.hpp"
#include "splatpaint/metrics.hpp"
#include "splatpaint/pfm_io.hpp"
#include "splatpaint/pipeline.hpp"
#include "splatpaint/scene_io.hpp"

namespace splatpaint {

namespace detail {

inline std::string hash_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

inline nlohmann::json report_json(const StageReport& report) {
    nlohmann::json j;
    j["stage"] = report.stage;
    j["iterations"] = report.iterations;
    j["final_loss_rgb"] = report.final_loss_rgb;
    j["final_loss_depth"] = report.final_loss_depth;
    j["final_tgsds_gradnorm"] = report.final_tgsds_gradnorm;
    j["final_total"] = report.final_total;
    return j;
}

/// Tracks everything one subcommand writes under --out and freezes it into a
/// run.json manifest. Wall time is deliberately absent so reruns match byte
/// for byte.
class RunWriter {
public:
    RunWriter(std::string command, std::filesystem::path out, const PipelineConfig& config)
        : command_(std::move(command)), out_(std::move(out)), config_(&config) {
        std::filesystem::create_directories(out_);
    }

    const std::filesystem::path& out() const { return out_; }

    std::filesystem::path resolve(const std::string& relative) {
        const std::filesystem::path path = out_ / relative;
        std::filesystem::create_directories(path.parent_path());
        artifacts_.push_back(relative);
        return path;
    }

    void add_report(const StageReport& report) { reports_.push_back(report_json(report)); }
    void add_extra(const std::string& key, nlohmann::json value) { extras_[key] = std::move(value); }

    void finish() {
        nlohmann::json manifest;
        manifest["command"] = command_;
        manifest["config_hash"] = hash_hex(config_->hash());
        manifest["seed"] = config_->seed;
        std::sort(artifacts_.begin(), artifacts_.end());
        manifest["artifacts"] = artifacts_;
        if (!reports_.empty()) manifest["reports"] = reports_;
        for (auto& [key, value] : extras_) manifest[key] = std::move(value);
        std::ofstream f(out_ / "run.json");
        if (!f) throw ValidationError("cannot write " + (out_ / "run.json").string());
        f << manifest.dump(2) << "\n";
    }

private:
    std::string command_;
    std::filesystem::path out_;
    const PipelineConfig* config_;
    std::vector<std::string> artifacts_;
    std::vector<nlohmann::json> reports_;
    std::map<std::string, nlohmann::json> extras_;
};

inline GaussianCloud initial_cloud(const SceneBundle& bundle, const PipelineConfig& config) {
    const Eigen::Vector3d background(config.background_r, config.background_g, config.background_b);
    if (!bundle.points.empty()) return init_cloud_from_points(bundle.points, background);
    for (const View& view : bundle.views)
        if (!view.depth.empty()) return init_cloud_from_depth(view, 4, background);
    throw ValidationError("scene provides neither points.txt nor depth maps to seed a splat cloud");
}

inline GaussianCloud obtain_cloud(const std::string& cloud_path, const SceneBundle& bundle,
                                  const PipelineConfig& config) {
    if (!cloud_path.empty()) return read_cloud(cloud_path);
    return initial_cloud(bundle, config);
}

inline void write_cloud_artifacts(RunWriter& run, const GaussianCloud& cloud) {
    std::vector<ScenePoint> points;
    points.reserve(cloud.size());
    for (const Gaussian3D& g : cloud.gaussians) {
        ScenePoint p;
        p.position = g.position;
        for (int c = 0; c < 3; ++c) p.color(c) = std::clamp(g.color(c), 0.0, 1.0);
        points.push_back(p);
    }
    write_point_cloud_txt(run.resolve("cloud.txt").string(), points);
    write_cloud(run.resolve("cloud.splc").string(), cloud);
}

inline void write_view_renders(RunWriter& run, const SceneBundle& bundle, const GaussianCloud& cloud,
                               bool with_depth) {
    for (const View& view : bundle.views) {
        const RenderOutput out = rasterize(cloud, view.pose, view.intrinsics);
        ImageD color = out.color;
        for (double& v : color.data()) v = std::clamp(v, 0.0, 1.0);
        write_image_png(run.resolve("renders/" + std::to_string(view.id) + ".png").string(), color);
        if (with_depth)
            write_depth_pfm(run.resolve("depths/" + std::to_string(view.id) + ".pfm").string(), out.depth);
    }
}

inline void run_cluster_command(RunWriter& run, const SceneBundle& bundle, const PipelineConfig& config) {
    const Clustering clustering = cluster_views(bundle, config.k_clusters, config.seed);
    const std::filesystem::path path = run.resolve("clusters.txt");
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write " + path.string());
    for (int id : clustering.view_ids())
        f << id << " " << clustering.assign_cluster(id) << " " << (clustering.is_reference(id) ? 1 : 0) << "\n";
    run.add_extra("clusters", config.k_clusters);
}

inline void run_render_command(RunWriter& run, const SceneBundle& bundle, const PipelineConfig& config,
                               const std::string& cloud_path) {
    const GaussianCloud cloud = obtain_cloud(cloud_path, bundle, config);
    write_view_renders(run, bundle, cloud, true);
}

inline void run_warp_command(RunWriter& run, const SceneBundle& bundle, const PipelineConfig& config,
                             const std::string& cloud_path) {
    const GaussianCloud cloud = obtain_cloud(cloud_path, bundle, config);
    const Clustering clustering = cluster_views(bundle, config.k_clusters, config.seed);
    const DepthConditionSource source = parse_depth_condition_source(config.depth_condition_source);
    for (const View& view : bundle.views) {
        if (clustering.is_reference(view.id)) continue;
        const View& reference = bundle.view_by_id(clustering.reference_of(view.id));
        const RenderOutput ref_out = rasterize(cloud, reference.pose, reference.intrinsics);
        const auto estimator = make_depth_estimator(config, ref_out.depth);
        const ConditionRasters cond = build_conditions(reference, view, ref_out.depth, *estimator, source);
        const std::string tag = std::to_string(view.id);
        ImageD warped = cond.warped_image;
        for (double& v : warped.data()) v = std::clamp(v, 0.0, 1.0);
        write_image_png(run.resolve("warped_" + tag + ".png").string(), warped);
        write_mask_png(run.resolve("edges_" + tag + ".png").string(), cond.edges);
        write_depth_pfm(run.resolve("depthcond_" + tag + ".pfm").string(), cond.depth);
        write_mask_png(run.resolve("valid_" + tag + ".png").string(), cond.validity);
    }
}

inline void run_coarse_command(RunWriter& run, const SceneBundle& bundle, const PipelineConfig& config,
                               const std::string& cloud_path, std::ostream* log) {
    GaussianCloud cloud = obtain_cloud(cloud_path, bundle, config);
    const Clustering clustering = cluster_views(bundle, config.k_clusters, config.seed);
    const NoiseSchedule schedule = make_linear_schedule(config.schedule_timesteps);
    const auto model =
        make_score_model(config, schedule, bundle.views.front().image.width(), bundle.views.front().image.height());

    const CoarseResult result = run_coarse(bundle, cloud, clustering, *model, config, log);
    for (const View& view : bundle.views) {
        const std::string tag = std::to_string(view.id);
        ImageD inpainted = result.inpainted.at(view.id);
        write_color_pfm(run.resolve("inpainted/" + tag + ".pfm").string(), inpainted);
        for (double& v : inpainted.data()) v = std::clamp(v, 0.0, 1.0);
        write_image_png(run.resolve("inpainted/" + tag + ".png").string(), inpainted);
        write_depth_pfm(run.resolve("depths/" + tag + ".pfm").string(), result.depth_targets.at(view.id));
    }
    write_view_renders(run, bundle, cloud, false);
    write_cloud_artifacts(run, cloud);
    run.add_report(result.report);
}

inline void run_fine_command(RunWriter& run, const SceneBundle& bundle, const PipelineConfig& config,
                             const std::string& cloud_path, std::ostream* log) {
    namespace fs = std::filesystem;
    std::string source_cloud = cloud_path;
    if (source_cloud.empty()) {
        const fs::path default_cloud = run.out() / "cloud.splc";
        if (!fs::exists(default_cloud))
            throw ValidationError("no cloud.splc under " + run.out().string() +
                                  " (run coarse into this directory first or pass --cloud)");
        source_cloud = default_cloud.string();
    }
    GaussianCloud cloud = read_cloud(source_cloud);

    std::map<int, ImageD> target_images;
    std::map<int, ImageD> target_depths;
    for (const View& view : bundle.views) {
        const std::string tag = std::to_string(view.id);
        const fs::path image_path = run.out() / "inpainted" / (tag + ".pfm");
        const fs::path depth_path = run.out() / "depths" / (tag + ".pfm");
        if (!fs::exists(image_path) || !fs::exists(depth_path))
            throw ValidationError("missing coarse targets for view " + tag + " under " + run.out().string());
        target_images.emplace(view.id, read_color_pfm(image_path.string()));
        target_depths.emplace(view.id, read_depth_pfm(depth_path.string()));
    }

    const Clustering clustering = cluster_views(bundle, config.k_clusters, config.seed);
    const NoiseSchedule schedule = make_linear_schedule(config.schedule_timesteps);
    const auto model =
        make_score_model(config, schedule, bundle.views.front().image.width(), bundle.views.front().image.height());

    const StageReport report =
        run_fine(bundle, cloud, clustering, *model, config, target_images, target_depths, log);
    write_view_renders(run, bundle, cloud, false);
    write_cloud_artifacts(run, cloud);
    run.add_report(report);
}

inline std::vector<int> listed_view_ids(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ValidationError("render directory not found: " + dir.string());
    std::vector<int> ids;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
        const std::string stem = entry.path().stem().string();
        if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); }))
            continue;
        ids.push_back(std::stoi(stem));
    }
    if (ids.empty()) throw ValidationError("no {id}.png files in " + dir.string());
    std::sort(ids.begin(), ids.end());
    return ids;
}

inline void run_eval_command(RunWriter& run, const std::string& renders_dir, const std::string& references_dir,
                             const std::string& scene_dir) {
    namespace fs = std::filesystem;
    std::optional<SceneBundle> bundle;
    if (!scene_dir.empty()) bundle = load_scene(scene_dir);

    std::vector<EvalItem> items;
    for (int id : listed_view_ids(renders_dir)) {
        EvalItem item;
        item.view_id = id;
        item.rendered = read_image_png((fs::path(renders_dir) / (std::to_string(id) + ".png")).string());
        const fs::path reference = fs::path(references_dir) / (std::to_string(id) + ".png");
        if (!fs::exists(reference)) throw ValidationError("missing reference image " + reference.string());
        item.reference = read_image_png(reference.string());
        item.mask = bundle ? bundle->view_by_id(id).mask
                           : make_mask(item.rendered.width(), item.rendered.height(), 1);
        items.push_back(std::move(item));
    }

    const MetricsReport report = eval_metrics(items);
    const fs::path path = run.resolve("metrics.txt");
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write " + path.string());
    for (const ViewMetrics& m : report.per_view) {
        char line[160];
        std::snprintf(line, sizeof(line), "%d %.6f %.6f %.6f %.6f", m.view_id, m.psnr, m.ssim, m.masked_psnr,
                      m.masked_ssim);
        f << line << "\n";
    }

    nlohmann::json means;
    means["psnr"] = report.mean_psnr;
    means["ssim"] = report.mean_ssim;
    means["masked_psnr"] = report.mean_masked_psnr;
    means["masked_ssim"] = report.mean_masked_ssim;
    run.add_extra("metrics", means);
    std::cout << "mean psnr " << report.mean_psnr << " ssim " << report.mean_ssim << " masked_psnr "
              << report.mean_masked_psnr << " masked_ssim " << report.mean_masked_ssim << "\n";
}

}  // namespace detail

/// Entry point behind the splatpaint binary. `args` excludes the program
/// name. Returns 0 on success, 1 on validation or usage errors, 2 on numeric
/// failures.
inline int cli_main(const std::vector<std::string>& args, std::ostream* log = nullptr) {
    CLI::App app{"coarse-to-fine multiview inpainting over a 3d gaussian splat cloud"};
    app.name("splatpaint");
    app.require_subcommand(1);

    struct SubOptions {
        std::string config_path;
        std::string scene;
        std::string out;
        std::string cloud;
        std::string renders;
        std::string references;
        std::optional<long long> seed;
    };
    std::map<std::string, SubOptions> opts;

    const std::vector<std::string> commands = {"cluster", "warp", "coarse", "fine", "render", "eval"};
    for (const std::string& name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        SubOptions& o = opts[name];
        sub->add_option("--config", o.config_path, "key=value config file");
        sub->add_option("--out", o.out, "output directory")->required();
        sub->add_option("--seed", o.seed, "seed override");
        if (name == "eval") {
            sub->add_option("--scene", o.scene, "scene directory supplying masks");
            sub->add_option("--renders", o.renders, "directory of rendered {id}.png")->required();
            sub->add_option("--references", o.references, "directory of reference {id}.png")->required();
        } else {
            sub->add_option("--scene", o.scene, "scene directory")->required();
            if (name != "cluster") sub->add_option("--cloud", o.cloud, "splat cloud file (cloud.splc)");
        }
    }

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("splatpaint");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    const SubOptions& o = opts.at(command);
    try {
        PipelineConfig config = o.config_path.empty() ? PipelineConfig{} : load_config(o.config_path);
        if (o.seed) config.seed = static_cast<std::uint64_t>(*o.seed);
        config.validate();

        detail::RunWriter run(command, o.out, config);
        if (command == "eval") {
            detail::run_eval_command(run, o.renders, o.references, o.scene);
        } else {
            const SceneBundle bundle = load_scene(o.scene);
            if (command == "cluster") detail::run_cluster_command(run, bundle, config);
            if (command == "render") detail::run_render_command(run, bundle, config, o.cloud);
            if (command == "warp") detail::run_warp_command(run, bundle, config, o.cloud);
            if (command == "coarse") detail::run_coarse_command(run, bundle, config, o.cloud, log);
            if (command == "fine") detail::run_fine_command(run, bundle, config, o.cloud, log);
        }
        run.finish();
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace splatpaint
