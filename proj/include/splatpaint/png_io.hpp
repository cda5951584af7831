// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "splatpaint/image.hpp"

namespace splatpaint {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

/// Decode a PNG to 8-bit RGB, applying the usual libpng expansions
/// (palette, grayscale, 16-bit strip, alpha drop).
inline void read_png_rgb8(const std::string& path, std::vector<std::uint8_t>& rgb, int& w, int& h) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw ValidationError("read_png: cannot open: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw ValidationError("read_png: out of memory: " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw ValidationError("read_png: out of memory: " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ValidationError("read_png: decode failed: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    rgb.assign(static_cast<std::size_t>(w) * h * 3, 0);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[y] = rgb.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
}

inline void write_png_raw(const std::string& path, const std::uint8_t* data, int w, int h, int channels) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw ValidationError("write_png: cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw ValidationError("write_png: out of memory: " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw ValidationError("write_png: out of memory: " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ValidationError("write_png: encode failed: " + path);
    }
    png_init_io(png, fp.get());
    const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
        rows[y] = const_cast<png_bytep>(data + static_cast<std::size_t>(y) * w * channels);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace detail

/// Load an RGB image as linear [0,1] values (8-bit input divided by 255).
inline ImageD read_image_png(const std::string& path) {
    std::vector<std::uint8_t> rgb;
    int w = 0, h = 0;
    detail::read_png_rgb8(path, rgb, w, h);
    ImageD img(w, h, 3);
    for (std::size_t i = 0; i < rgb.size(); ++i) img[i] = rgb[i] / 255.0;
    return img;
}

/// Save an RGB [0,1] image as 8-bit PNG. Values are clamped then rounded,
/// so read_image_png(write...) is the identity on 8-bit-representable data.
inline void write_image_png(const std::string& path, const ImageD& img) {
    if (img.channels() != 3) throw ValidationError("write_image_png: expected 3 channels: " + path);
    std::vector<std::uint8_t> rgb(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, img[i]));
        rgb[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    detail::write_png_raw(path, rgb.data(), img.width(), img.height(), 3);
}

/// Load a mask, binarized at 128 of the 8-bit grayscale input so that
/// antialiased exports still come out clean {0,1}.
inline MaskImage read_mask_png(const std::string& path) {
    std::vector<std::uint8_t> rgb;
    int w = 0, h = 0;
    detail::read_png_rgb8(path, rgb, w, h);
    MaskImage mask(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
            // Integer luma rounding matches what an 8-bit grayscale export holds.
            const int gray = static_cast<int>(std::lround(0.299 * rgb[i] + 0.587 * rgb[i + 1] + 0.114 * rgb[i + 2]));
            mask.at(x, y) = gray >= 128 ? 1 : 0;
        }
    }
    return mask;
}

inline void write_mask_png(const std::string& path, const MaskImage& mask) {
    std::vector<std::uint8_t> gray(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) gray[i] = mask[i] ? 255 : 0;
    detail::write_png_raw(path, gray.data(), mask.width(), mask.height(), 1);
}

}  // namespace splatpaint
