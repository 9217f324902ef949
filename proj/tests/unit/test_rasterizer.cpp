#include <doctest.h>

#include "core/common.hpp"
#include "core/rasterizer.hpp"

using namespace rsplat;

namespace {

Camera test_camera(int size = 64, double f = 80.0) {
    Camera cam;
    cam.fx = cam.fy = f;
    cam.cx = size * 0.5;
    cam.cy = size * 0.5;
    cam.width = cam.height = size;
    return cam;  // identity extrinsics: camera at origin looking +z
}

GaussianSet<double> random_scene(int n, Rng& rng, double spread = 0.35) {
    GaussianSet<double> set;
    set.resize(n);
    for (int i = 0; i < n; ++i) {
        set.means[3 * i] = rng.uniform(-spread, spread);
        set.means[3 * i + 1] = rng.uniform(-spread, spread);
        set.means[3 * i + 2] = 2.0 + rng.uniform(-0.4, 0.4);
        Vec4<double> q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        q /= q.norm();
        for (int k = 0; k < 4; ++k) set.rotations[4 * i + k] = q[k];
        for (int k = 0; k < 3; ++k) set.log_scales[3 * i + k] = rng.uniform(-3.6, -2.6);
        set.opacity_logits[i] = rng.uniform(-0.5, 1.5);  // sigmoid in (0.38, 0.82)
        for (int k = 0; k < kShCoeffs; ++k) set.sh[kShCoeffs * i + k] = rng.uniform(-0.25, 0.25);
    }
    return set;
}

}  // namespace

TEST_CASE("project_gaussian on-axis closed form") {
    const Camera cam = test_camera(64, 100.0);
    const double sigma2 = 0.01;
    const Mat3d cov = sigma2 * Mat3d::Identity();

    auto proj = project_gaussian(cam, Vec3d(0, 0, 2.0), cov);
    REQUIRE(proj.has_value());
    CHECK(proj->mean2d.x() == doctest::Approx(cam.cx).epsilon(1e-12));
    CHECK(proj->mean2d.y() == doctest::Approx(cam.cy).epsilon(1e-12));
    CHECK(proj->depth == doctest::Approx(2.0));
    const double expected = sigma2 * (100.0 / 2.0) * (100.0 / 2.0) + 0.3;
    CHECK(proj->cov2d(0, 0) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(proj->cov2d(1, 1) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(std::abs(proj->cov2d(0, 1)) < 1e-12);

    SUBCASE("behind the camera is culled") {
        CHECK(!project_gaussian(cam, Vec3d(0, 0, -1.0), cov).has_value());
    }
    SUBCASE("doubling depth halves the projected standard deviation") {
        auto far = project_gaussian(cam, Vec3d(0, 0, 4.0), cov);
        REQUIRE(far.has_value());
        const double near_std = std::sqrt(proj->cov2d(0, 0) - 0.3);
        const double far_std = std::sqrt(far->cov2d(0, 0) - 0.3);
        CHECK(near_std / far_std == doctest::Approx(2.0).epsilon(1e-9));
    }
}

TEST_CASE("empty visible set renders the background") {
    const Camera cam = test_camera();
    GaussianSet<double> set;
    set.resize(1);
    set.means[2] = -5.0;  // behind the camera
    set.rotations[0] = 1.0;
    const Vec3<double> bg(0.1, 0.5, 0.9);
    const Image<double> img = rasterize<double>(cam, set, bg, RasterConfig{});
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) CHECK(img.px(y, x)[c] == bg[c]);
}

TEST_CASE("single bright Gaussian: center brightness and radial decay") {
    const Camera cam = test_camera();
    GaussianSet<double> set;
    set.resize(1);
    set.means = {0, 0, 2.0};
    set.rotations = {1, 0, 0, 0};
    set.log_scales = {-2.3, -2.3, -2.3};
    set.opacity_logits = {6.0};  // sigmoid ~0.9975 -> alpha clamp region
    set.sh.assign(kShCoeffs, 0.0);
    for (int ch = 0; ch < 3; ++ch) set.sh[ch] = 0.5 / kSh0;  // white pre-clamp

    const Image<double> img = rasterize<double>(cam, set, Vec3<double>::Zero(), RasterConfig{});
    const int cx = cam.width / 2, cy = cam.height / 2;
    CHECK(img.px(cy, cx)[0] >= 0.95);
    // Monotone decay along a scanline from the center.
    double prev = img.px(cy, cx)[0];
    for (int x = cx + 1; x < cam.width; ++x) {
        CHECK(img.px(cy, x)[0] <= prev + 1e-12);
        prev = img.px(cy, x)[0];
    }
}

TEST_CASE("front-to-back compositing: opaque front wins") {
    const Camera cam = test_camera();
    GaussianSet<double> set;
    set.resize(2);
    // Front red at z=1.5, back green at z=3 (same axis).
    set.means = {0, 0, 1.5, 0, 0, 3.0};
    set.rotations = {1, 0, 0, 0, 1, 0, 0, 0};
    set.log_scales = {-2.3, -2.3, -2.3, -1.8, -1.8, -1.8};
    set.opacity_logits = {8.0, 8.0};
    set.sh.assign(2 * kShCoeffs, 0.0);
    // Pure red front, pure green back (DC terms invert the +0.5 offset).
    set.sh[0] = 0.5 / kSh0;
    set.sh[1] = set.sh[2] = -0.5 / kSh0;
    set.sh[kShCoeffs + 1] = 0.5 / kSh0;
    set.sh[kShCoeffs + 0] = set.sh[kShCoeffs + 2] = -0.5 / kSh0;

    const Image<double> img = rasterize<double>(cam, set, Vec3<double>::Zero(), RasterConfig{});
    const double* center = img.px(cam.height / 2, cam.width / 2);
    // Alpha clamps at 0.99, so T after the front Gaussian is 0.01.
    CHECK(center[0] == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(center[1] == doctest::Approx(0.01 * 0.99).epsilon(1e-4));
}

TEST_CASE("output channels stay within [0,1] for random scenes") {
    Rng rng(100);
    const Camera cam = test_camera();
    for (int trial = 0; trial < 3; ++trial) {
        const GaussianSet<double> set = random_scene(60, rng);
        const Vec3<double> bg(rng.uniform(), rng.uniform(), rng.uniform());
        const Image<double> img = rasterize<double>(cam, set, bg, RasterConfig{});
        for (double v : img.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("per-pixel transmittance is within [0,1]") {
    Rng rng(101);
    const Camera cam = test_camera();
    const GaussianSet<double> set = random_scene(40, rng);
    RenderAux<double> aux;
    rasterize(cam, set, Vec3<double>::Zero(), RasterConfig{}, &aux);
    for (double t : aux.final_transmittance) {
        CHECK(t >= 0.0);
        CHECK(t <= 1.0);
    }
}

TEST_CASE("opacity gradient sign at the center pixel") {
    const Camera cam = test_camera();
    GaussianSet<double> set;
    set.resize(1);
    set.means = {0, 0, 2.0};
    set.rotations = {1, 0, 0, 0};
    set.log_scales = {-2.3, -2.3, -2.3};
    set.opacity_logits = {0.0};
    set.sh.assign(kShCoeffs, 0.0);
    for (int ch = 0; ch < 3; ++ch) set.sh[ch] = 0.4 / kSh0;

    RenderAux<double> aux;
    rasterize(cam, set, Vec3<double>::Zero(), RasterConfig{}, &aux);
    Image<double> cot(cam.width, cam.height);
    cot.px(cam.height / 2, cam.width / 2)[0] = 1.0;  // L = center red brightness
    const auto grads = rasterize_backward(cam, set, aux, cot, RasterConfig{});
    CHECK(grads.opacity_logits[0] > 0.0);

    SUBCASE("zero cotangent gives zero gradients") {
        Image<double> zero(cam.width, cam.height);
        const auto g0 = rasterize_backward(cam, set, aux, zero, RasterConfig{});
        for (double v : g0.means) CHECK(v == 0.0);
        for (double v : g0.sh) CHECK(v == 0.0);
        CHECK(g0.camera.axis_angle.norm() == 0.0);
    }
}

TEST_CASE("stale aux is rejected") {
    Rng rng(55);
    const Camera cam = test_camera();
    GaussianSet<double> set = random_scene(10, rng);
    RenderAux<double> aux;
    rasterize(cam, set, Vec3<double>::Zero(), RasterConfig{}, &aux);
    set.means[0] += 0.01;  // mutate after the forward pass
    Image<double> cot(cam.width, cam.height);
    try {
        rasterize_backward(cam, set, aux, cot, RasterConfig{});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::StaleAux);
    }
}

TEST_CASE("full-frame L2 gradients match central finite differences") {
    Rng rng(2025);
    const Camera base_cam = test_camera(48, 60.0);
    GaussianSet<double> set = random_scene(50, rng);
    const RasterConfig cfg = RasterConfig::exact_gradients();
    const Vec3<double> bg(0.05, 0.05, 0.05);

    Image<double> target(base_cam.width, base_cam.height);
    for (double& v : target.data) v = rng.uniform();

    auto loss_of = [&](const GaussianSet<double>& s, const Camera& cam) {
        const Image<double> img = rasterize<double>(cam, s, bg, cfg);
        double total = 0.0;
        for (size_t i = 0; i < img.data.size(); ++i) {
            const double d = img.data[i] - target.data[i];
            total += d * d;
        }
        return total / double(img.data.size());
    };

    RenderAux<double> aux;
    const Image<double> img = rasterize(base_cam, set, bg, cfg, &aux);
    Image<double> cot(base_cam.width, base_cam.height);
    for (size_t i = 0; i < img.data.size(); ++i)
        cot.data[i] = 2.0 * (img.data[i] - target.data[i]) / double(img.data.size());
    const GaussianSetGrads<double> grads = rasterize_backward(base_cam, set, aux, cot, cfg);

    const double h = 1e-5;
    int checked = 0;
    auto check_param = [&](double* ptr, double analytic, const Camera& cam) {
        const double orig = *ptr;
        *ptr = orig + h;
        const double up = loss_of(set, cam);
        *ptr = orig - h;
        const double down = loss_of(set, cam);
        *ptr = orig;
        const double numeric = (up - down) / (2.0 * h);
        if (std::abs(numeric) < 1e-10 && std::abs(analytic) < 1e-8) return;  // both zero
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        CHECK(std::abs(numeric - analytic) / scale < 1e-3);
        ++checked;
    };

    for (int probe = 0; probe < 10; ++probe) {
        const int64_t g = rng.uniform_int(set.size());
        check_param(&set.means[3 * g + probe % 3], grads.means[3 * g + probe % 3], base_cam);
        check_param(&set.rotations[4 * g + probe % 4], grads.rotations[4 * g + probe % 4],
                    base_cam);
        check_param(&set.log_scales[3 * g + probe % 3], grads.log_scales[3 * g + probe % 3],
                    base_cam);
        check_param(&set.opacity_logits[g], grads.opacity_logits[g], base_cam);
        const int shk = int(rng.uniform_int(kShCoeffs));
        check_param(&set.sh[kShCoeffs * g + shk], grads.sh[kShCoeffs * g + shk], base_cam);
    }
    CHECK(checked >= 30);

    // Camera extrinsics: all six parameters at a perturbed viewpoint.
    Camera cam = base_cam;
    cam.axis_angle = Vec3d(0.03, -0.02, 0.05);
    cam.translation = Vec3d(0.01, -0.03, 0.02);
    RenderAux<double> aux2;
    const Image<double> img2 = rasterize(cam, set, bg, cfg, &aux2);
    Image<double> cot2(cam.width, cam.height);
    for (size_t i = 0; i < img2.data.size(); ++i)
        cot2.data[i] = 2.0 * (img2.data[i] - target.data[i]) / double(img2.data.size());
    const GaussianSetGrads<double> cgrads = rasterize_backward(cam, set, aux2, cot2, cfg);
    for (int i = 0; i < 3; ++i) {
        check_param(&cam.axis_angle[i], cgrads.camera.axis_angle[i], cam);
        check_param(&cam.translation[i], cgrads.camera.translation[i], cam);
    }
}

TEST_CASE("rendering and gradients are identical at any thread count") {
    Rng rng(321);
    const Camera cam = test_camera();
    const GaussianSet<double> set = random_scene(80, rng);
    Image<double> cot(cam.width, cam.height);
    for (double& v : cot.data) v = rng.uniform(-1.0, 1.0);

    const int orig_threads = thread_count();
    set_thread_count(1);
    RenderAux<double> aux1;
    const Image<double> img1 = rasterize(cam, set, Vec3<double>::Zero(), RasterConfig{}, &aux1);
    const auto g1 = rasterize_backward(cam, set, aux1, cot, RasterConfig{});

    set_thread_count(4);
    RenderAux<double> aux4;
    const Image<double> img4 = rasterize(cam, set, Vec3<double>::Zero(), RasterConfig{}, &aux4);
    const auto g4 = rasterize_backward(cam, set, aux4, cot, RasterConfig{});
    set_thread_count(orig_threads);

    CHECK(img1.data == img4.data);
    CHECK(g1.means == g4.means);
    CHECK(g1.rotations == g4.rotations);
    CHECK(g1.log_scales == g4.log_scales);
    CHECK(g1.opacity_logits == g4.opacity_logits);
    CHECK(g1.sh == g4.sh);
    CHECK(g1.camera.axis_angle == g4.camera.axis_angle);
    CHECK(g1.camera.translation == g4.camera.translation);
}

TEST_CASE("depth sort is stable with deterministic tie-breaks") {
    const Camera cam = test_camera();
    GaussianSet<double> set;
    set.resize(2);
    set.means = {0.01, 0, 2.0, -0.01, 0, 2.0};  // identical depth
    set.rotations = {1, 0, 0, 0, 1, 0, 0, 0};
    set.log_scales.assign(6, -2.5);
    set.opacity_logits = {1.0, 1.0};
    set.sh.assign(2 * kShCoeffs, 0.0);
    RenderAux<double> aux;
    rasterize(cam, set, Vec3<double>::Zero(), RasterConfig{}, &aux);
    REQUIRE(aux.order.size() == 2);
    CHECK(aux.order[0] == 0);
    CHECK(aux.order[1] == 1);
}

TEST_CASE("raw image and PNG round trips") {
    Rng rng(7);
    Image<float> img(20, 14);
    for (float& v : img.data) v = float(rng.uniform());
    write_raw_image("/tmp/rsplat_test.raw", img);
    const Image<float> back = read_raw_image<float>("/tmp/rsplat_test.raw");
    CHECK(back.width == img.width);
    CHECK(back.data == img.data);

    write_png("/tmp/rsplat_test.png", img);
    const Image<float> png = read_png<float>("/tmp/rsplat_test.png");
    REQUIRE(png.width == img.width);
    REQUIRE(png.height == img.height);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::abs(png.data[i] - img.data[i]) <= 0.5f / 255.0f + 1e-6f);
}
