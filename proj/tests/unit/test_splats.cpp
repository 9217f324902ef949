#include <doctest.h>

#include <sstream>

#include "core/splats.hpp"

using namespace rsplat;

TEST_CASE("covariance3d closed forms") {
    SUBCASE("identity") {
        const Mat3d cov = covariance3d<double>(Vec4<double>(1, 0, 0, 0), Vec3d::Zero());
        CHECK((cov - Mat3d::Identity()).norm() < 1e-15);
    }
    SUBCASE("diagonal from log scales") {
        const Mat3d cov =
            covariance3d<double>(Vec4<double>(1, 0, 0, 0), Vec3d(std::log(2.0), 0, 0));
        CHECK(cov(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(cov(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(cov(2, 2) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("conjugation by a 90 degree z-rotation") {
        const double h = M_PI / 4.0;
        const Mat3d cov = covariance3d<double>(Vec4<double>(std::cos(h), 0, 0, std::sin(h)),
                                               Vec3d(std::log(2.0), 0, 0));
        CHECK(cov(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(cov(1, 1) == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(cov(2, 2) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(cov(0, 1)) < 1e-12);
    }
}

TEST_CASE("covariance3d is SPD for random inputs") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        Vec4<double> q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        if (q.norm() < 1e-3) q[0] = 1.0;
        Vec3d ls(rng.uniform(kMinLogScale, kMaxLogScale), rng.uniform(kMinLogScale, kMaxLogScale),
                 rng.uniform(kMinLogScale, kMaxLogScale));
        const Mat3d cov = covariance3d<double>(q, ls);
        CHECK((cov - cov.transpose()).norm() < 1e-12 * std::max(1.0, cov.norm()));
        Eigen::LLT<Mat3d> llt(cov);
        CHECK(llt.info() == Eigen::Success);
    }
}

TEST_CASE("eval_sh conventions") {
    std::vector<double> coeffs(kShCoeffs, 0.0);
    SUBCASE("zero coefficients give mid gray") {
        const Vec3d c = eval_sh<double>(coeffs, Vec3d(0, 0, 1));
        CHECK(c == Vec3d(0.5, 0.5, 0.5));
    }
    SUBCASE("DC-only saturates to white") {
        for (int ch = 0; ch < 3; ++ch) coeffs[ch] = 1.0 / kSh0;
        const Vec3d c = eval_sh<double>(coeffs, Vec3d(1, 0, 0).normalized());
        CHECK(c == Vec3d(1, 1, 1));
    }
    SUBCASE("degree-1 z antisymmetry") {
        const double k = 0.1;
        coeffs[3 * 2 + 0] = k;  // z-linear basis, red channel
        const Vec3d up = eval_sh<double>(coeffs, Vec3d(0, 0, 1));
        const Vec3d down = eval_sh<double>(coeffs, Vec3d(0, 0, -1));
        CHECK(up[0] - down[0] == doctest::Approx(2.0 * 0.48860251 * k).epsilon(1e-6));
    }
}

TEST_CASE("eval_sh coefficient gradients match finite differences") {
    Rng rng(5);
    std::vector<double> coeffs(kShCoeffs);
    for (double& c : coeffs) c = rng.uniform(-0.15, 0.15);  // away from the clamp
    Vec3d dir(rng.normal(), rng.normal(), rng.normal());
    dir.normalize();
    Vec3d cbar(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));

    std::vector<double> grad(kShCoeffs, 0.0);
    eval_sh_vjp<double>(coeffs, dir, cbar, grad.data());
    for (int k = 0; k < kShCoeffs; ++k) {
        const double orig = coeffs[k];
        coeffs[k] = orig + 1e-6;
        const double up = cbar.dot(eval_sh<double>(coeffs, dir));
        coeffs[k] = orig - 1e-6;
        const double down = cbar.dot(eval_sh<double>(coeffs, dir));
        coeffs[k] = orig;
        const double numeric = (up - down) / 2e-6;
        CHECK(std::abs(numeric - grad[k]) / std::max({std::abs(numeric), std::abs(grad[k]), 1e-8}) <
              1e-6);
    }
}

TEST_CASE("eval_sh direction gradient matches finite differences") {
    Rng rng(6);
    std::vector<double> coeffs(kShCoeffs);
    for (double& c : coeffs) c = rng.uniform(-0.15, 0.15);
    Vec3d v(0.3, -0.8, 0.6);
    Vec3d cbar(0.7, -0.2, 0.4);
    std::vector<double> cgrad(kShCoeffs, 0.0);
    const Vec3d dir = v.normalized();
    const Vec3d dir_bar = eval_sh_vjp<double>(coeffs, dir, cbar, cgrad.data());
    // Chain through the normalization by hand.
    const Vec3d v_bar = (dir_bar - dir * dir.dot(dir_bar)) / v.norm();
    for (int i = 0; i < 3; ++i) {
        Vec3d up = v, down = v;
        up[i] += 1e-7;
        down[i] -= 1e-7;
        const double numeric = (cbar.dot(eval_sh<double>(coeffs, up.normalized())) -
                                cbar.dot(eval_sh<double>(coeffs, down.normalized()))) /
                               2e-7;
        CHECK(std::abs(numeric - v_bar[i]) /
                  std::max({std::abs(numeric), std::abs(v_bar[i]), 1e-8}) <
              1e-5);
    }
}

namespace {

GaussianSet<double> small_set(int n, Rng& rng) {
    GaussianSet<double> set;
    set.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) set.means[3 * i + k] = rng.uniform(-1.0, 1.0);
        Vec4<double> q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        q /= q.norm();
        for (int k = 0; k < 4; ++k) set.rotations[4 * i + k] = q[k];
        for (int k = 0; k < 3; ++k) set.log_scales[3 * i + k] = rng.uniform(-4.0, -2.0);
        set.opacity_logits[i] = rng.uniform(-1.0, 2.0);
        for (int k = 0; k < kShCoeffs; ++k) set.sh[kShCoeffs * i + k] = rng.uniform(-0.2, 0.2);
    }
    return set;
}

}  // namespace

TEST_CASE("densify_and_prune rules") {
    Rng rng(13);
    GaussianSet<double> set = small_set(5, rng);
    DensifyStats stats;
    stats.resize(5);

    SUBCASE("no stats, healthy opacities: unchanged") {
        for (int i = 0; i < 5; ++i) set.opacity_logits[i] = logit(0.9);
        GaussianSet<double> before = set;
        Rng drng(1);
        densify_and_prune(set, stats, 1e-3, 0.005, drng);
        CHECK(set.size() == 5);
        CHECK(set.means == before.means);
        CHECK(set.rotations == before.rotations);
        CHECK(set.sh == before.sh);
    }

    SUBCASE("one Gaussian above the gradient threshold splits") {
        for (int i = 0; i < 5; ++i) set.opacity_logits[i] = logit(0.9);
        GaussianSet<double> before = set;
        stats.grad_accum[2] = 10.0;
        stats.obs_count[2] = 1;
        Rng drng(2);
        const DensifyReport report = densify_and_prune(set, stats, 1e-3, 0.005, drng);
        CHECK(report.split == 1);
        CHECK(set.size() == 6);
        // Children keep the parent scale divided by 1.6 (log shift).
        const double expected = before.log_scales[3 * 2] - std::log(1.6);
        CHECK(set.log_scales[3 * 2] == doctest::Approx(expected).epsilon(1e-12));
        // Untouched neighbors are bitwise identical.
        for (int k = 0; k < 3; ++k) CHECK(set.means[3 * 0 + k] == before.means[3 * 0 + k]);
        for (int k = 0; k < kShCoeffs; ++k)
            CHECK(set.sh[kShCoeffs * 1 + k] == before.sh[kShCoeffs * 1 + k]);
        // Stats reset.
        CHECK(stats.size() == 6);
        CHECK(stats.grad_accum[0] == 0.0);
    }

    SUBCASE("low opacity is pruned") {
        set.opacity_logits[3] = logit(0.001);
        for (int i = 0; i < 5; ++i)
            if (i != 3) set.opacity_logits[i] = logit(0.9);
        Rng drng(3);
        const DensifyReport report = densify_and_prune(set, stats, 1e9, 0.005, drng);
        CHECK(report.pruned == 1);
        CHECK(set.size() == 4);
    }

    SUBCASE("pruning everything raises EmptyAfterPrune") {
        for (int i = 0; i < 5; ++i) set.opacity_logits[i] = logit(0.0001);
        Rng drng(4);
        try {
            densify_and_prune(set, stats, 1e9, 0.5, drng);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyAfterPrune);
        }
    }

    SUBCASE("misaligned stats raise ShapeMismatch") {
        DensifyStats bad;
        bad.resize(3);
        Rng drng(5);
        try {
            densify_and_prune(set, bad, 1.0, 0.005, drng);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ShapeMismatch);
        }
    }
}

TEST_CASE("init_from_points conventions") {
    std::vector<SurfacePoint> pts(1);
    pts[0].position = Vec3d(0.1, 0.2, 0.3);
    pts[0].color = Vec3d(1.0, 0.0, 0.0);
    pts[0].link = 2;
    const GaussianSet<double> set = init_from_points<double>(pts, 0.01, 0.5);
    CHECK(set.size() == 1);
    CHECK(set.opacity_logits[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(set.source_link[0] == 2);
    const Vec3d c = eval_sh<double>(std::span<const double>(set.sh.data(), kShCoeffs),
                                    Vec3d(0, 1, 0));
    CHECK((c - Vec3d(1, 0, 0)).norm() < 1e-6);

    std::vector<SurfacePoint> many(10000);
    for (auto& p : many) p.color = Vec3d(0.5, 0.5, 0.5);
    CHECK(init_from_points<double>(many, 0.01, 0.5).size() == 10000);
}

TEST_CASE("DRGS segment round trips") {
    Rng rng(21);
    GaussianSet<float> set = small_set(7, rng).cast<float>();
    std::ostringstream out(std::ios::binary);
    write_drgs(out, set);
    std::istringstream in(out.str(), std::ios::binary);
    const GaussianSet<float> back = read_drgs<float>(in);
    CHECK(back.size() == set.size());
    CHECK(back.means == set.means);
    CHECK(back.rotations == set.rotations);
    CHECK(back.log_scales == set.log_scales);
    CHECK(back.opacity_logits == set.opacity_logits);
    CHECK(back.sh == set.sh);
}
