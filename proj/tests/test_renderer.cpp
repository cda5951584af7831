// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "fd_scenes.hpp"
#include "splatpaint/renderer.hpp"

using namespace splatpaint;

namespace {

CameraIntrinsics square_camera(int size, double f) {
    return {size, size, f, f, (size - 1) / 2.0, (size - 1) / 2.0};
}

CameraPose identity_pose() {
    CameraPose pose;
    pose.rotation = Eigen::Matrix3d::Identity();
    pose.translation = Eigen::Vector3d::Zero();
    return pose;
}

Gaussian3D centered_gaussian(double z, double logit, const Eigen::Vector3d& color) {
    Gaussian3D g;
    g.position = Eigen::Vector3d(0, 0, z);
    g.opacity_logit = logit;
    g.color = color;
    return g;
}

}  // namespace

TEST_CASE("covariance_from_rs identity and axis-aligned scaling", "[renderer]") {
    CHECK(covariance_from_rs(Eigen::Vector4d(1, 0, 0, 0), Eigen::Vector3d::Zero())
              .isApprox(Eigen::Matrix3d::Identity(), 1e-14));
    const Eigen::Matrix3d scaled =
        covariance_from_rs(Eigen::Vector4d(1, 0, 0, 0), Eigen::Vector3d(std::log(2.0), 0, 0));
    CHECK(scaled.isApprox(Eigen::Vector3d(4, 1, 1).asDiagonal().toDenseMatrix(), 1e-12));
}

TEST_CASE("covariance_from_rs rotates the scale axes", "[renderer]") {
    const double s = std::sqrt(0.5);  // 90 degrees about z
    const Eigen::Matrix3d rotated =
        covariance_from_rs(Eigen::Vector4d(s, 0, 0, s), Eigen::Vector3d(std::log(2.0), 0, 0));
    CHECK(rotated.isApprox(Eigen::Vector3d(1, 4, 1).asDiagonal().toDenseMatrix(), 1e-12));
}

TEST_CASE("covariance_from_rs stays symmetric positive definite", "[renderer]") {
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        q.normalize();
        const Eigen::Vector3d ls(rng.uniform(-3, 2), rng.uniform(-3, 2), rng.uniform(-3, 2));
        const Eigen::Matrix3d sigma = covariance_from_rs(q, ls);
        CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::Vector3d eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(sigma).eigenvalues();
        CHECK(eig.minCoeff() > 0.0);
    }
}

TEST_CASE("project_gaussian on the optical axis", "[renderer]") {
    Gaussian3D g = centered_gaussian(1.0, 0.0, Eigen::Vector3d::Ones());
    CameraIntrinsics intr{100, 100, 100.0, 100.0, 50.0, 50.0};
    const auto proj = project_gaussian(g, identity_pose(), intr);
    REQUIRE(proj.has_value());
    CHECK(proj->mean2d.isApprox(Eigen::Vector2d(50, 50), 1e-12));
    CHECK(proj->depth == 1.0);
    Eigen::Matrix2d expect;
    expect << 10000.3, 0, 0, 10000.3;
    CHECK(proj->cov2d.isApprox(expect, 1e-10));
}

TEST_CASE("project_gaussian culls at the near plane", "[renderer]") {
    CameraIntrinsics intr{100, 100, 100.0, 100.0, 50.0, 50.0};
    Gaussian3D g = centered_gaussian(0.0, 0.0, Eigen::Vector3d::Ones());
    CHECK(!project_gaussian(g, identity_pose(), intr).has_value());
    g.position.z() = 0.01;
    CHECK(!project_gaussian(g, identity_pose(), intr).has_value());
    g.position.z() = 0.02;
    CHECK(project_gaussian(g, identity_pose(), intr).has_value());
}

TEST_CASE("project_gaussian focal scaling moves the mean and grows the footprint", "[renderer]") {
    Gaussian3D g;
    g.position = Eigen::Vector3d(0.2, 0.1, 1.0);
    CameraIntrinsics intr{100, 100, 100.0, 100.0, 50.0, 50.0};
    CameraIntrinsics intr2 = intr;
    intr2.fx = 200.0;
    const auto p1 = project_gaussian(g, identity_pose(), intr);
    const auto p2 = project_gaussian(g, identity_pose(), intr2);
    REQUIRE(p1.has_value());
    REQUIRE(p2.has_value());
    CHECK((p2->mean2d.x() - intr.cx) == Catch::Approx(2.0 * (p1->mean2d.x() - intr.cx)).epsilon(1e-12));
    CHECK((p2->cov2d(0, 0) - kCovDilation) == Catch::Approx(4.0 * (p1->cov2d(0, 0) - kCovDilation)).epsilon(1e-10));
}

TEST_CASE("rasterize single saturated splat hits the alpha cap", "[renderer]") {
    GaussianCloud cloud;
    cloud.background = Eigen::Vector3d(0.2, 0.3, 0.4);
    cloud.gaussians.push_back(centered_gaussian(1.0, 20.0, Eigen::Vector3d(1.0, 0.0, 0.5)));
    const CameraIntrinsics intr = square_camera(33, 100.0);
    const RenderOutput out = rasterize(cloud, identity_pose(), intr);
    const int cx = 16, cy = 16;
    for (int c = 0; c < 3; ++c) {
        const double expect = 0.999 * cloud.gaussians[0].color(c) + 0.001 * cloud.background(c);
        CHECK(out.color.at(cx, cy, c) == Catch::Approx(expect).margin(1e-9));
    }
    CHECK(out.final_transmittance.at(cx, cy) == Catch::Approx(0.001).margin(1e-9));
}

TEST_CASE("rasterize composites front-to-back", "[renderer]") {
    GaussianCloud cloud;
    cloud.background = Eigen::Vector3d(1.0, 1.0, 0.0);
    cloud.gaussians.push_back(centered_gaussian(2.0, 0.0, Eigen::Vector3d(0, 0, 1)));  // back, blue
    cloud.gaussians.push_back(centered_gaussian(1.0, 0.0, Eigen::Vector3d(1, 0, 0)));  // front, red
    const CameraIntrinsics intr = square_camera(33, 100.0);
    const RenderOutput out = rasterize(cloud, identity_pose(), intr);
    const int cx = 16, cy = 16;
    // 0.5 red + 0.25 blue + 0.25 background
    CHECK(out.color.at(cx, cy, 0) == Catch::Approx(0.5 + 0.25).margin(1e-12));
    CHECK(out.color.at(cx, cy, 1) == Catch::Approx(0.25).margin(1e-12));
    CHECK(out.color.at(cx, cy, 2) == Catch::Approx(0.25).margin(1e-12));
    // depth: 0.5*1 + 0.25*2 + 0.25*far with far = 2
    CHECK(out.depth.at(cx, cy) == Catch::Approx(1.5).margin(1e-12));
    CHECK(out.final_transmittance.at(cx, cy) == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("rasterize with zero opacity shows only background", "[renderer]") {
    GaussianCloud cloud;
    cloud.background = Eigen::Vector3d(0.3, 0.6, 0.9);
    cloud.gaussians.push_back(centered_gaussian(1.0, -40.0, Eigen::Vector3d::Ones()));
    const CameraIntrinsics intr = square_camera(16, 30.0);
    const RenderOutput out = rasterize(cloud, identity_pose(), intr);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            for (int c = 0; c < 3; ++c) CHECK(out.color.at(x, y, c) == Catch::Approx(cloud.background(c)).margin(1e-12));
            CHECK(out.final_transmittance.at(x, y) == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("rasterize rejects an empty cloud", "[renderer]") {
    GaussianCloud cloud;
    CHECK_THROWS_AS(rasterize(cloud, identity_pose(), square_camera(8, 10.0)), ValidationError);
}

TEST_CASE("compositing weights conserve to one", "[renderer]") {
    // White splats over a white background must render exactly white wherever
    // weights sum to one; any conservation leak shows up as a deviation.
    Rng rng(71);
    for (int s = 0; s < 20; ++s) {
        fd_scenes::FdScene scene = fd_scenes::make_fd_scene(rng);
        scene.cloud.background = Eigen::Vector3d::Ones();
        for (auto& g : scene.cloud.gaussians) g.color = Eigen::Vector3d::Ones();
        const RenderOutput out = rasterize(scene.cloud, scene.pose, scene.intr);
        for (std::size_t i = 0; i < out.color.size(); ++i) {
            REQUIRE(std::abs(out.color[i] - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("rendered color stays in the convex hull of splat colors and background", "[renderer]") {
    Rng rng(72);
    for (int s = 0; s < 20; ++s) {
        const fd_scenes::FdScene scene = fd_scenes::make_fd_scene(rng);
        Eigen::Vector3d lo = scene.cloud.background;
        Eigen::Vector3d hi = scene.cloud.background;
        for (const auto& g : scene.cloud.gaussians) {
            lo = lo.cwiseMin(g.color);
            hi = hi.cwiseMax(g.color);
        }
        const RenderOutput out = rasterize(scene.cloud, scene.pose, scene.intr);
        for (int y = 0; y < scene.intr.height; ++y) {
            for (int x = 0; x < scene.intr.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    REQUIRE(out.color.at(x, y, c) >= lo(c) - 1e-9);
                    REQUIRE(out.color.at(x, y, c) <= hi(c) + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("moving a splat away never decreases its center-pixel depth", "[renderer]") {
    const CameraIntrinsics intr = square_camera(33, 100.0);
    double previous = 0.0;
    for (double z = 1.0; z <= 4.0; z += 0.25) {
        GaussianCloud cloud;
        cloud.gaussians.push_back(centered_gaussian(z, 1.0, Eigen::Vector3d::Ones()));
        const RenderOutput out = rasterize(cloud, identity_pose(), intr);
        const double depth = out.depth.at(16, 16);
        CHECK(depth >= previous);
        previous = depth;
    }
}

TEST_CASE("render_backward zero upstream gives zero gradients", "[renderer]") {
    Rng rng(73);
    const fd_scenes::FdScene scene = fd_scenes::make_fd_scene(rng);
    const ImageD zero_color(scene.intr.width, scene.intr.height, 3);
    const CloudGrads grads = render_backward(scene.cloud, scene.pose, scene.intr, zero_color, ImageD());
    CHECK(grads.norm() == 0.0);
}

TEST_CASE("render_backward single splat color gradient equals its compositing weight", "[renderer]") {
    GaussianCloud cloud;
    cloud.gaussians.push_back(centered_gaussian(1.0, 20.0, Eigen::Vector3d(0.5, 0.5, 0.5)));
    const CameraIntrinsics intr = square_camera(33, 100.0);
    ImageD upstream(33, 33, 3);
    for (int c = 0; c < 3; ++c) upstream.at(16, 16, c) = 1.0;
    const CloudGrads grads = render_backward(cloud, identity_pose(), intr, upstream, ImageD());
    for (int c = 0; c < 3; ++c) CHECK(grads.color[0](c) == Catch::Approx(0.999).margin(1e-9));
}

TEST_CASE("analytic color-loss gradients match finite differences", "[renderer][fd]") {
    Rng rng(74);
    for (int s = 0; s < 5; ++s) {
        const fd_scenes::FdScene scene = fd_scenes::make_fd_scene(rng);
        const RenderOutput out = rasterize(scene.cloud, scene.pose, scene.intr);
        const ImageD upstream = fd_scenes::l1_color_grad(out, scene.target);
        const CloudGrads grads = render_backward(scene.cloud, scene.pose, scene.intr, upstream, ImageD());

        const auto loss = [&](const GaussianCloud& c) {
            return fd_scenes::l1_to_target(rasterize(c, scene.pose, scene.intr), scene.target);
        };
        for (std::size_t gi = 0; gi < scene.cloud.size(); ++gi) {
            for (int a = 0; a < 3; ++a) {
                const double fd = fd_scenes::central_difference(
                    scene.cloud, loss, [gi, a](GaussianCloud& c, double h) { c.gaussians[gi].position(a) += h; });
                REQUIRE(fd_scenes::grads_close(grads.position[gi](a), fd));
            }
            for (int a = 0; a < 4; ++a) {
                const double fd = fd_scenes::central_difference(
                    scene.cloud, loss, [gi, a](GaussianCloud& c, double h) { c.gaussians[gi].rotation(a) += h; });
                REQUIRE(fd_scenes::grads_close(grads.rotation[gi](a), fd));
            }
            for (int a = 0; a < 3; ++a) {
                const double fd = fd_scenes::central_difference(
                    scene.cloud, loss, [gi, a](GaussianCloud& c, double h) { c.gaussians[gi].log_scale(a) += h; });
                REQUIRE(fd_scenes::grads_close(grads.log_scale[gi](a), fd));
            }
            {
                const double fd = fd_scenes::central_difference(
                    scene.cloud, loss, [gi](GaussianCloud& c, double h) { c.gaussians[gi].opacity_logit += h; });
                REQUIRE(fd_scenes::grads_close(grads.opacity_logit[gi], fd));
            }
            for (int a = 0; a < 3; ++a) {
                const double fd = fd_scenes::central_difference(
                    scene.cloud, loss, [gi, a](GaussianCloud& c, double h) { c.gaussians[gi].color(a) += h; });
                REQUIRE(fd_scenes::grads_close(grads.color[gi](a), fd));
            }
        }
    }
}

TEST_CASE("analytic depth gradients match finite differences", "[renderer][fd]") {
    // A far backdrop splat pins the far-depth completion constant, so finite
    // differences of the other splats see the same stop-gradient semantics as
    // the analytic pass.
    Rng rng(75);
    fd_scenes::FdScene scene = fd_scenes::make_fd_scene(rng, 6);
    Gaussian3D backdrop;
    backdrop.position = Eigen::Vector3d(0, 0, 5.0);
    backdrop.log_scale.setConstant(0.9);
    backdrop.opacity_logit = 0.0;
    backdrop.color = Eigen::Vector3d(0.5, 0.5, 0.5);
    scene.cloud.gaussians.push_back(backdrop);
    const std::size_t perturbable = scene.cloud.size() - 1;

    // depth loss: weighted sum of rendered depth with fixed random weights
    ImageD weights(scene.intr.width, scene.intr.height, 1);
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = rng.uniform(-1.0, 1.0);
    const auto loss = [&](const GaussianCloud& c) {
        const RenderOutput out = rasterize(c, scene.pose, scene.intr);
        double l = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) l += weights[i] * out.depth[i];
        return l;
    };
    const ImageD zero_color(scene.intr.width, scene.intr.height, 3);
    const CloudGrads grads = render_backward(scene.cloud, scene.pose, scene.intr, zero_color, weights);

    for (std::size_t gi = 0; gi < perturbable; ++gi) {
        for (int a = 0; a < 3; ++a) {
            const double fd = fd_scenes::central_difference(
                scene.cloud, loss, [gi, a](GaussianCloud& c, double h) { c.gaussians[gi].position(a) += h; });
            REQUIRE(fd_scenes::grads_close(grads.position[gi](a), fd));
        }
        for (int a = 0; a < 4; ++a) {
            const double fd = fd_scenes::central_difference(
                scene.cloud, loss, [gi, a](GaussianCloud& c, double h) { c.gaussians[gi].rotation(a) += h; });
            REQUIRE(fd_scenes::grads_close(grads.rotation[gi](a), fd));
        }
        for (int a = 0; a < 3; ++a) {
            const double fd = fd_scenes::central_difference(
                scene.cloud, loss, [gi, a](GaussianCloud& c, double h) { c.gaussians[gi].log_scale(a) += h; });
            REQUIRE(fd_scenes::grads_close(grads.log_scale[gi](a), fd));
        }
        const double fd = fd_scenes::central_difference(
            scene.cloud, loss, [gi](GaussianCloud& c, double h) { c.gaussians[gi].opacity_logit += h; });
        REQUIRE(fd_scenes::grads_close(grads.opacity_logit[gi], fd));
    }
}

TEST_CASE("render_backward is deterministic", "[renderer]") {
    Rng rng(76);
    const fd_scenes::FdScene scene = fd_scenes::make_fd_scene(rng);
    const RenderOutput out = rasterize(scene.cloud, scene.pose, scene.intr);
    const ImageD upstream = fd_scenes::l1_color_grad(out, scene.target);
    const CloudGrads a = render_backward(scene.cloud, scene.pose, scene.intr, upstream, ImageD());
    const CloudGrads b = render_backward(scene.cloud, scene.pose, scene.intr, upstream, ImageD());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.position[i] == b.position[i]);
        CHECK(a.rotation[i] == b.rotation[i]);
        CHECK(a.log_scale[i] == b.log_scale[i]);
        CHECK(a.opacity_logit[i] == b.opacity_logit[i]);
        CHECK(a.color[i] == b.color[i]);
    }
}
