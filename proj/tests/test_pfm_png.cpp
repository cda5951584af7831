// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "splatpaint/pfm_io.hpp"
#include "splatpaint/png_io.hpp"
#include "test_util.hpp"

using namespace splatpaint;

TEST_CASE("pfm write then read is bit-exact", "[pfm]") {
    test_util::TempDir tmp("pfm");
    ImageD depth(4, 4, 1);
    for (std::size_t i = 0; i < depth.size(); ++i) depth[i] = 0.25 * static_cast<double>(i) + 0.125;
    const std::string path = (tmp.path() / "ramp.pfm").string();
    write_depth_pfm(path, depth);
    const ImageD back = read_depth_pfm(path);
    REQUIRE(back.width() == 4);
    REQUIRE(back.height() == 4);
    for (std::size_t i = 0; i < depth.size(); ++i) {
        CHECK(static_cast<float>(depth[i]) == static_cast<float>(back[i]));
    }
}

TEST_CASE("pfm rejects big-endian scale", "[pfm]") {
    test_util::TempDir tmp("pfm");
    const std::string path = (tmp.path() / "be.pfm").string();
    {
        std::ofstream f(path, std::ios::binary);
        f << "Pf\n2 1\n+1.0\n";
        const float vals[2] = {1.0f, 2.0f};
        f.write(reinterpret_cast<const char*>(vals), sizeof(vals));
    }
    CHECK_THROWS_AS(read_depth_pfm(path), ValidationError);
}

TEST_CASE("pfm rejects bad magic", "[pfm]") {
    test_util::TempDir tmp("pfm");
    const std::string path = (tmp.path() / "bad.pfm").string();
    {
        std::ofstream f(path, std::ios::binary);
        f << "PF\n1 1\n-1.0\n";
        const float vals[3] = {1.0f, 1.0f, 1.0f};
        f.write(reinterpret_cast<const char*>(vals), sizeof(vals));
    }
    CHECK_THROWS_AS(read_depth_pfm(path), ValidationError);
}

TEST_CASE("pfm rejects NaN payloads both ways", "[pfm]") {
    test_util::TempDir tmp("pfm");
    ImageD depth(2, 2, 1);
    depth.fill(1.0);
    depth.at(1, 1) = std::nan("");
    CHECK_THROWS_AS(write_depth_pfm((tmp.path() / "nan.pfm").string(), depth), ValidationError);

    const std::string path = (tmp.path() / "nan_payload.pfm").string();
    {
        std::ofstream f(path, std::ios::binary);
        f << "Pf\n2 1\n-1.0\n";
        const float vals[2] = {1.0f, std::nanf("")};
        f.write(reinterpret_cast<const char*>(vals), sizeof(vals));
    }
    CHECK_THROWS_AS(read_depth_pfm(path), ValidationError);
}

TEST_CASE("pfm detects truncated payload", "[pfm]") {
    test_util::TempDir tmp("pfm");
    const std::string path = (tmp.path() / "short.pfm").string();
    {
        std::ofstream f(path, std::ios::binary);
        f << "Pf\n3 2\n-1.0\n";
        const float vals[3] = {1.0f, 2.0f, 3.0f};
        f.write(reinterpret_cast<const char*>(vals), sizeof(vals));
    }
    CHECK_THROWS_AS(read_depth_pfm(path), ValidationError);
}

TEST_CASE("color pfm round-trips interleaved rgb bit-exactly", "[pfm]") {
    test_util::TempDir tmp("pfm");
    ImageD img(5, 4, 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(0.01 * (x + 10 * y) + 0.3 * c);
    const std::string path = (tmp.path() / "color.pfm").string();
    write_color_pfm(path, img);
    const ImageD back = read_color_pfm(path);
    REQUIRE(back.same_shape(img));
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(back[i] == img[i]);
}

TEST_CASE("color and grayscale pfm magics are not interchangeable", "[pfm]") {
    test_util::TempDir tmp("pfm");
    const std::string gray = (tmp.path() / "gray.pfm").string();
    const std::string color = (tmp.path() / "color.pfm").string();
    write_depth_pfm(gray, ImageD(3, 3, 1, 2.0));
    write_color_pfm(color, ImageD(3, 3, 3, 0.25));
    CHECK_THROWS_WITH(read_color_pfm(gray), Catch::Matchers::ContainsSubstring("'Pf'"));
    CHECK_THROWS_WITH(read_depth_pfm(color), Catch::Matchers::ContainsSubstring("'PF'"));
    CHECK_THROWS_AS(write_color_pfm(gray, ImageD(3, 3, 1, 1.0)), ValidationError);
}

TEST_CASE("png round-trips 8-bit color images exactly", "[png]") {
    test_util::TempDir tmp("png");
    ImageD img(5, 3, 3);
    int v = 0;
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = ((v++ * 37) % 256) / 255.0;
    const std::string path = (tmp.path() / "rt.png").string();
    write_image_png(path, img);
    const ImageD back = read_image_png(path);
    REQUIRE(back.width() == 5);
    REQUIRE(back.height() == 3);
    REQUIRE(back.channels() == 3);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(back[i] == img[i]);
}

TEST_CASE("png values land in [0,1]", "[png]") {
    test_util::TempDir tmp("png");
    ImageD img(2, 2, 3);
    img.fill(1.0);
    img.at(0, 0, 0) = 0.0;
    const std::string path = (tmp.path() / "bounds.png").string();
    write_image_png(path, img);
    const ImageD back = read_image_png(path);
    CHECK(back.at(0, 0, 0) == 0.0);
    CHECK(back.at(1, 1, 2) == 1.0);
}

TEST_CASE("mask png thresholds at 128 of 8-bit luma", "[png]") {
    test_util::TempDir tmp("png");
    ImageD img(3, 1, 3);
    // gray 127 -> 0, gray 128 -> 1, gray 255 -> 1
    for (int c = 0; c < 3; ++c) {
        img.at(0, 0, c) = 127.0 / 255.0;
        img.at(1, 0, c) = 128.0 / 255.0;
        img.at(2, 0, c) = 1.0;
    }
    const std::string path = (tmp.path() / "mask.png").string();
    write_image_png(path, img);
    const MaskImage mask = read_mask_png(path);
    CHECK(mask.at(0, 0) == 0);
    CHECK(mask.at(1, 0) == 1);
    CHECK(mask.at(2, 0) == 1);
}

TEST_CASE("mask png round-trips binary masks", "[png]") {
    test_util::TempDir tmp("png");
    MaskImage mask(4, 2, 1);
    mask.fill(0);
    mask.at(1, 0) = 1;
    mask.at(3, 1) = 1;
    const std::string path = (tmp.path() / "binmask.png").string();
    write_mask_png(path, mask);
    const MaskImage back = read_mask_png(path);
    for (std::size_t i = 0; i < mask.size(); ++i) CHECK(back[i] == mask[i]);
}

TEST_CASE("png reader rejects missing files", "[png]") {
    CHECK_THROWS_AS(read_image_png("/nonexistent/nowhere.png"), ValidationError);
}
