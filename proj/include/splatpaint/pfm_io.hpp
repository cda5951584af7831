// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "splatpaint/image.hpp"

namespace splatpaint {

// Grayscale PFM ("Pf"), little-endian only (negative scale header), rows
// stored bottom-up per the format. Values round-trip bit exactly through
// the 32-bit float payload.

inline void write_depth_pfm(const std::string& path, const ImageD& raster) {
    if (raster.channels() != 1) throw ValidationError("write_depth_pfm: raster must be single channel: " + path);
    if (raster.empty()) throw ValidationError("write_depth_pfm: empty raster: " + path);
    for (double v : raster.data()) {
        if (std::isnan(v)) throw ValidationError("write_depth_pfm: NaN in payload: " + path);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("write_depth_pfm: cannot open for writing: " + path);
    f << "Pf\n" << raster.width() << " " << raster.height() << "\n-1.0\n";
    // Bottom row first.
    std::vector<float> row(raster.width());
    for (int y = raster.height() - 1; y >= 0; --y) {
        for (int x = 0; x < raster.width(); ++x) row[x] = static_cast<float>(raster.at(x, y));
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!f) throw ValidationError("write_depth_pfm: write failed: " + path);
}

/// Color PFM ("PF"), interleaved RGB with the same conventions as above.
inline void write_color_pfm(const std::string& path, const ImageD& raster) {
    if (raster.channels() != 3) throw ValidationError("write_color_pfm: raster must have 3 channels: " + path);
    if (raster.empty()) throw ValidationError("write_color_pfm: empty raster: " + path);
    for (double v : raster.data()) {
        if (std::isnan(v)) throw ValidationError("write_color_pfm: NaN in payload: " + path);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("write_color_pfm: cannot open for writing: " + path);
    f << "PF\n" << raster.width() << " " << raster.height() << "\n-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(raster.width()) * 3);
    for (int y = raster.height() - 1; y >= 0; --y) {
        for (int x = 0; x < raster.width(); ++x)
            for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(x) * 3 + c] = static_cast<float>(raster.at(x, y, c));
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!f) throw ValidationError("write_color_pfm: write failed: " + path);
}

inline ImageD read_color_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("read_color_pfm: cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "PF") throw ValidationError("read_color_pfm: bad magic '" + magic + "' (expected color 'PF'): " + path);
    int w = 0, h = 0;
    double scale = 0.0;
    f >> w >> h >> scale;
    if (!f || w <= 0 || h <= 0) throw ValidationError("read_color_pfm: malformed header: " + path);
    if (!(scale < 0.0)) {
        throw ValidationError("read_color_pfm: non-negative scale (big-endian payload) unsupported: " + path);
    }
    f.get();
    ImageD raster(w, h, 3);
    std::vector<float> row(static_cast<std::size_t>(w) * 3);
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!f) throw ValidationError("read_color_pfm: truncated payload: " + path);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = row[static_cast<std::size_t>(x) * 3 + c];
                if (std::isnan(v)) throw ValidationError("read_color_pfm: NaN in payload: " + path);
                raster.at(x, y, c) = static_cast<double>(v);
            }
        }
    }
    return raster;
}

inline ImageD read_depth_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("read_depth_pfm: cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "Pf") {
        // "PF" would be 3-channel color, anything else is not PFM at all.
        throw ValidationError("read_depth_pfm: bad magic '" + magic + "' (expected grayscale 'Pf'): " + path);
    }
    int w = 0, h = 0;
    double scale = 0.0;
    f >> w >> h >> scale;
    if (!f || w <= 0 || h <= 0) throw ValidationError("read_depth_pfm: malformed header: " + path);
    if (!(scale < 0.0)) {
        throw ValidationError("read_depth_pfm: non-negative scale (big-endian payload) unsupported: " + path);
    }
    f.get();  // single whitespace byte terminating the header
    ImageD raster(w, h, 1);
    std::vector<float> row(static_cast<std::size_t>(w));
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!f) throw ValidationError("read_depth_pfm: truncated payload: " + path);
        for (int x = 0; x < w; ++x) {
            if (std::isnan(row[x])) throw ValidationError("read_depth_pfm: NaN in payload: " + path);
            raster.at(x, y) = static_cast<double>(row[x]);
        }
    }
    return raster;
}

}  // namespace splatpaint
