// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "splatpaint/camera.hpp"

namespace splatpaint {

struct PosedCamera {
    int id = 0;
    CameraIntrinsics intrinsics;
    CameraPose pose;
};

namespace detail {

inline bool is_blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace detail

/// Parse COLMAP text-model cameras.txt + images.txt. Only PINHOLE and
/// SIMPLE_PINHOLE camera models are supported; quaternions are stored
/// qw qx qy qz and encode the world-to-camera rotation.
inline std::vector<PosedCamera> parse_colmap_text(const std::string& cameras_file,
                                                  const std::string& images_file) {
    std::ifstream cams(cameras_file);
    if (!cams) throw ValidationError("parse_colmap_text: cannot open " + cameras_file);

    std::map<int, CameraIntrinsics> intrinsics_by_camera;
    std::string line;
    int line_no = 0;
    while (std::getline(cams, line)) {
        ++line_no;
        if (detail::is_blank_or_comment(line)) continue;
        std::istringstream ss(line);
        int camera_id = 0, width = 0, height = 0;
        std::string model;
        if (!(ss >> camera_id >> model >> width >> height)) {
            throw ValidationError("parse_colmap_text: malformed camera line " + std::to_string(line_no) +
                                  " in " + cameras_file);
        }
        CameraIntrinsics intr;
        intr.width = width;
        intr.height = height;
        if (model == "PINHOLE") {
            if (!(ss >> intr.fx >> intr.fy >> intr.cx >> intr.cy)) {
                throw ValidationError("parse_colmap_text: malformed PINHOLE params, line " +
                                      std::to_string(line_no) + " in " + cameras_file);
            }
        } else if (model == "SIMPLE_PINHOLE") {
            double f = 0.0;
            if (!(ss >> f >> intr.cx >> intr.cy)) {
                throw ValidationError("parse_colmap_text: malformed SIMPLE_PINHOLE params, line " +
                                      std::to_string(line_no) + " in " + cameras_file);
            }
            intr.fx = intr.fy = f;
        } else {
            throw ValidationError("parse_colmap_text: unsupported camera model '" + model + "' (camera " +
                                  std::to_string(camera_id) + ")");
        }
        intr.validate("camera " + std::to_string(camera_id));
        intrinsics_by_camera[camera_id] = intr;
    }

    std::ifstream imgs(images_file);
    if (!imgs) throw ValidationError("parse_colmap_text: cannot open " + images_file);

    std::vector<PosedCamera> out;
    line_no = 0;
    while (std::getline(imgs, line)) {
        ++line_no;
        if (detail::is_blank_or_comment(line)) continue;
        std::istringstream ss(line);
        int image_id = 0, camera_id = 0;
        double qw, qx, qy, qz, tx, ty, tz;
        std::string name;
        if (!(ss >> image_id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> camera_id >> name)) {
            throw ValidationError("parse_colmap_text: malformed image line " + std::to_string(line_no) +
                                  " in " + images_file);
        }
        const double norm = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
        if (std::abs(norm - 1.0) > 1e-3) {
            throw ValidationError("parse_colmap_text: non-normalized quaternion for image " +
                                  std::to_string(image_id) + " (norm " + std::to_string(norm) + ")");
        }
        auto it = intrinsics_by_camera.find(camera_id);
        if (it == intrinsics_by_camera.end()) {
            throw ValidationError("parse_colmap_text: image " + std::to_string(image_id) +
                                  " references unknown camera " + std::to_string(camera_id));
        }
        PosedCamera pc;
        pc.id = image_id;
        pc.intrinsics = it->second;
        pc.pose.rotation = quaternion_to_matrix(qw / norm, qx / norm, qy / norm, qz / norm);
        pc.pose.translation = Eigen::Vector3d(tx, ty, tz);
        pc.pose.validate("image " + std::to_string(image_id));
        out.push_back(pc);

        // The POINTS2D line that follows each image record is not used here.
        std::getline(imgs, line);
        ++line_no;
    }

    std::sort(out.begin(), out.end(), [](const PosedCamera& a, const PosedCamera& b) { return a.id < b.id; });
    return out;
}

}  // namespace splatpaint
