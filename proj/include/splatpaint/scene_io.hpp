// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splatpaint/camera.hpp"
#include "splatpaint/colmap_io.hpp"
#include "splatpaint/common.hpp"
#include "splatpaint/image.hpp"
#include "splatpaint/pfm_io.hpp"
#include "splatpaint/png_io.hpp"

namespace splatpaint {

/// One posed input view. `mask` marks the region to repaint (1 = repaint).
/// `depth` is optional; values <= 0 mean "no measurement at this pixel".
struct View {
    int id = 0;
    CameraIntrinsics intrinsics;
    CameraPose pose;
    ImageD image;      // RGB, [0,1]
    MaskImage mask;    // {0,1}
    ImageD depth;      // scalar, may be empty

    void validate() const {
        const std::string who = "view " + std::to_string(id);
        intrinsics.validate(who);
        pose.validate(who);
        if (image.channels() != 3) throw ValidationError(who + ": image must have 3 channels");
        if (image.width() != intrinsics.width || image.height() != intrinsics.height)
            throw ValidationError(who + ": image is " + std::to_string(image.width()) + "x" +
                                  std::to_string(image.height()) + " but camera expects " +
                                  std::to_string(intrinsics.width) + "x" + std::to_string(intrinsics.height));
        if (mask.width() != image.width() || mask.height() != image.height())
            throw ValidationError(who + ": mask is " + std::to_string(mask.width()) + "x" +
                                  std::to_string(mask.height()) + " but image is " +
                                  std::to_string(image.width()) + "x" + std::to_string(image.height()));
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask[i] != 0 && mask[i] != 1) throw ValidationError(who + ": mask values must be 0 or 1");
        }
        if (!depth.empty()) {
            if (depth.channels() != 1) throw ValidationError(who + ": depth must be single-channel");
            if (depth.width() != image.width() || depth.height() != image.height())
                throw ValidationError(who + ": depth dimensions do not match image");
            if (!depth.all_finite()) throw ValidationError(who + ": depth contains non-finite values");
        }
        if (!image.all_finite()) throw ValidationError(who + ": image contains non-finite values");
    }
};

struct InpaintPrompts {
    std::string positive;
    std::string negative;
    std::string mask_prompt;

    bool any() const { return !positive.empty() || !negative.empty() || !mask_prompt.empty(); }
};

/// Seed geometry for building an initial Gaussian cloud.
struct ScenePoint {
    Eigen::Vector3d position;
    Eigen::Vector3d color;  // [0,1]
};

struct SceneBundle {
    std::vector<View> views;
    InpaintPrompts prompts;
    std::vector<ScenePoint> points;

    const View& view_by_id(int id) const {
        for (const auto& v : views)
            if (v.id == id) return v;
        throw ValidationError("no view with id " + std::to_string(id));
    }
};

namespace detail {

inline std::vector<PosedCamera> parse_native_cameras(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path.string());
    std::vector<PosedCamera> cams;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) continue;
        std::istringstream ss(line);
        PosedCamera cam;
        Eigen::Matrix3d r;
        Eigen::Vector3d t;
        if (!(ss >> cam.id >> cam.intrinsics.width >> cam.intrinsics.height >> cam.intrinsics.fx >>
              cam.intrinsics.fy >> cam.intrinsics.cx >> cam.intrinsics.cy >> r(0, 0) >> r(0, 1) >> r(0, 2) >>
              r(1, 0) >> r(1, 1) >> r(1, 2) >> r(2, 0) >> r(2, 1) >> r(2, 2) >> t(0) >> t(1) >> t(2))) {
            throw ValidationError("malformed camera record at " + path.string() + ":" + std::to_string(line_no));
        }
        std::string extra;
        if (ss >> extra)
            throw ValidationError("trailing fields at " + path.string() + ":" + std::to_string(line_no));
        cam.pose.rotation = r;
        cam.pose.translation = t;
        cams.push_back(cam);
    }
    std::sort(cams.begin(), cams.end(), [](const PosedCamera& a, const PosedCamera& b) { return a.id < b.id; });
    return cams;
}

inline void write_native_cameras(const std::filesystem::path& path, const std::vector<View>& views) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write " + path.string());
    f << "# id width height fx fy cx cy r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz\n";
    f.precision(17);
    for (const auto& v : views) {
        f << v.id << " " << v.intrinsics.width << " " << v.intrinsics.height << " " << v.intrinsics.fx << " "
          << v.intrinsics.fy << " " << v.intrinsics.cx << " " << v.intrinsics.cy;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) f << " " << v.pose.rotation(r, c);
        for (int r = 0; r < 3; ++r) f << " " << v.pose.translation(r);
        f << "\n";
    }
}

inline InpaintPrompts parse_prompts_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path.string());
    InpaintPrompts p;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("missing '=' at " + path.string() + ":" + std::to_string(line_no));
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "positive")
            p.positive = value;
        else if (key == "negative")
            p.negative = value;
        else if (key == "mask_prompt")
            p.mask_prompt = value;
        else
            throw ValidationError("unknown prompt key '" + key + "' at " + path.string() + ":" +
                                  std::to_string(line_no));
    }
    return p;
}

}  // namespace detail

/// Text point cloud: one `x y z r g b` line per point, rgb in [0,255].
inline std::vector<ScenePoint> read_point_cloud_txt(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path);
    std::vector<ScenePoint> points;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (detail::is_blank_or_comment(line)) continue;
        std::istringstream ss(line);
        ScenePoint p;
        double r, g, b;
        if (!(ss >> p.position(0) >> p.position(1) >> p.position(2) >> r >> g >> b))
            throw ValidationError("malformed point at " + path + ":" + std::to_string(line_no));
        if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
            throw ValidationError("point color out of [0,255] at " + path + ":" + std::to_string(line_no));
        p.color = Eigen::Vector3d(r, g, b) / 255.0;
        if (!p.position.allFinite()) throw ValidationError("non-finite point at " + path + ":" + std::to_string(line_no));
        points.push_back(p);
    }
    return points;
}

inline void write_point_cloud_txt(const std::string& path, const std::vector<ScenePoint>& points) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write " + path);
    f.precision(17);
    for (const auto& p : points) {
        f << p.position(0) << " " << p.position(1) << " " << p.position(2) << " " << p.color(0) * 255.0 << " "
          << p.color(1) * 255.0 << " " << p.color(2) * 255.0 << "\n";
    }
}

/// Loads a scene directory:
///   cameras.txt                      native camera records, or
///   colmap/cameras.txt + colmap/images.txt
///   images/{id}.png                  required per camera
///   masks/{id}.png                   required per camera
///   depth/{id}.pfm                   optional per camera
///   prompts.txt, points.txt          optional
/// All views must share one resolution.
inline SceneBundle load_scene(const std::string& dir_path) {
    namespace fs = std::filesystem;
    const fs::path dir(dir_path);
    if (!fs::is_directory(dir)) throw ValidationError("scene directory not found: " + dir_path);

    std::vector<PosedCamera> cams;
    if (fs::exists(dir / "cameras.txt")) {
        cams = detail::parse_native_cameras(dir / "cameras.txt");
    } else if (fs::exists(dir / "colmap" / "cameras.txt") && fs::exists(dir / "colmap" / "images.txt")) {
        cams = parse_colmap_text((dir / "colmap" / "cameras.txt").string(), (dir / "colmap" / "images.txt").string());
    } else {
        throw ValidationError("no cameras.txt or colmap/ model in " + dir_path);
    }
    if (cams.empty()) throw ValidationError("no cameras defined in " + dir_path);

    SceneBundle bundle;
    for (const auto& cam : cams) {
        View v;
        v.id = cam.id;
        v.intrinsics = cam.intrinsics;
        v.pose = cam.pose;
        const std::string who = "view " + std::to_string(v.id);
        const fs::path image_path = dir / "images" / (std::to_string(v.id) + ".png");
        const fs::path mask_path = dir / "masks" / (std::to_string(v.id) + ".png");
        if (!fs::exists(image_path)) throw ValidationError(who + ": missing " + image_path.string());
        if (!fs::exists(mask_path)) throw ValidationError(who + ": missing " + mask_path.string());
        v.image = read_image_png(image_path.string());
        v.mask = read_mask_png(mask_path.string());
        const fs::path depth_path = dir / "depth" / (std::to_string(v.id) + ".pfm");
        if (fs::exists(depth_path)) v.depth = read_depth_pfm(depth_path.string());
        v.validate();
        bundle.views.push_back(std::move(v));
    }
    for (std::size_t i = 1; i < bundle.views.size(); ++i) {
        if (bundle.views[i].id == bundle.views[i - 1].id)
            throw ValidationError("duplicate view id " + std::to_string(bundle.views[i].id));
        if (bundle.views[i].image.width() != bundle.views[0].image.width() ||
            bundle.views[i].image.height() != bundle.views[0].image.height())
            throw ValidationError("view " + std::to_string(bundle.views[i].id) +
                                  ": resolution differs from view " + std::to_string(bundle.views[0].id) +
                                  " (all views must share one resolution)");
    }

    if (fs::exists(dir / "prompts.txt")) bundle.prompts = detail::parse_prompts_file(dir / "prompts.txt");
    if (fs::exists(dir / "points.txt")) bundle.points = read_point_cloud_txt((dir / "points.txt").string());
    return bundle;
}

/// Inverse of load_scene. Round-trips exactly: PNGs are written from data that
/// was itself 8-bit, depth goes to lossless PFM.
inline void save_scene(const std::string& dir_path, const SceneBundle& bundle) {
    namespace fs = std::filesystem;
    const fs::path dir(dir_path);
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    bool any_depth = false;
    for (const auto& v : bundle.views) any_depth = any_depth || !v.depth.empty();
    if (any_depth) fs::create_directories(dir / "depth");

    detail::write_native_cameras(dir / "cameras.txt", bundle.views);
    for (const auto& v : bundle.views) {
        v.validate();
        write_image_png((dir / "images" / (std::to_string(v.id) + ".png")).string(), v.image);
        write_mask_png((dir / "masks" / (std::to_string(v.id) + ".png")).string(), v.mask);
        if (!v.depth.empty())
            write_depth_pfm((dir / "depth" / (std::to_string(v.id) + ".pfm")).string(), v.depth);
    }
    if (bundle.prompts.any()) {
        std::ofstream f(dir / "prompts.txt");
        if (!f) throw ValidationError("cannot write " + (dir / "prompts.txt").string());
        f << "positive=" << bundle.prompts.positive << "\n";
        f << "negative=" << bundle.prompts.negative << "\n";
        f << "mask_prompt=" << bundle.prompts.mask_prompt << "\n";
    }
    if (!bundle.points.empty()) write_point_cloud_txt((dir / "points.txt").string(), bundle.points);
}

}  // namespace splatpaint
