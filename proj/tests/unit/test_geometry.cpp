#include <doctest.h>

#include "core/common.hpp"
#include "core/geometry.hpp"

using namespace rsplat;

namespace {

// Central finite difference of a scalar function of an n-vector.
template <typename F>
double fd(F&& f, double* x, int i, double h = 1e-6) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f();
    x[i] = orig - h;
    const double down = f();
    x[i] = orig;
    return (up - down) / (2.0 * h);
}

double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / scale;
}

}  // namespace

TEST_CASE("quat_to_mat matches axis rotations") {
    const double half = M_PI / 4.0;  // 90 degree rotation about z
    Vec4<double> q(std::cos(half), 0, 0, std::sin(half));
    const Mat3d R = quat_to_mat(q);
    const Mat3d expected = axis_rotation(Vec3d(0, 0, 1), M_PI / 2.0);
    CHECK((R - expected).norm() < 1e-12);
}

TEST_CASE("rotation_from_quat VJP matches finite differences") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        Vec4<double> q;
        for (int k = 0; k < 4; ++k) q[k] = rng.uniform(-1.0, 1.0);
        if (q.norm() < 0.3) q[0] += 1.0;
        Mat3d w;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) w(r, c) = rng.uniform(-1.0, 1.0);
        auto loss = [&]() { return (w.array() * rotation_from_quat(q).array()).sum(); };
        const Vec4<double> g = rotation_from_quat_vjp(q, w);
        for (int i = 0; i < 4; ++i) {
            const double numeric = fd(loss, q.data(), i);
            CHECK(rel_err(numeric, g[i]) < 1e-6);
        }
    }
}

TEST_CASE("mat_to_quat round trips") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        Vec3d axis(rng.normal(), rng.normal(), rng.normal());
        axis.normalize();
        const double angle = rng.uniform(-3.0, 3.0);
        const Mat3d R = axis_rotation(axis, angle);
        const Vec4<double> q = mat_to_quat(R);
        CHECK((quat_to_mat(q) - R).norm() < 1e-9);
        CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("quat_mul is consistent with matrix multiplication") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        Vec4<double> a, b;
        for (int k = 0; k < 4; ++k) {
            a[k] = rng.normal();
            b[k] = rng.normal();
        }
        a /= a.norm();
        b /= b.norm();
        const Mat3d lhs = quat_to_mat(quat_mul(a, b));
        const Mat3d rhs = quat_to_mat(a) * quat_to_mat(b);
        CHECK((lhs - rhs).norm() < 1e-12);
    }
}

TEST_CASE("rodrigues VJP matches finite differences") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Vec3d r(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
        if (trial == 0) r = Vec3d(1e-9, 0, 0);  // small-angle branch
        Mat3d w;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) w(i, j) = rng.uniform(-1.0, 1.0);
        auto loss = [&]() { return (w.array() * rodrigues(r).array()).sum(); };
        const Vec3d g = rodrigues_vjp(r, w);
        for (int i = 0; i < 3; ++i) {
            const double numeric = fd(loss, r.data(), i);
            CHECK(rel_err(numeric, g[i]) < 1e-5);
        }
    }
}

TEST_CASE("rotation_log inverts rodrigues") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        Vec3d r(rng.normal(), rng.normal(), rng.normal());
        r *= rng.uniform(0.0, 3.0) / std::max(1e-9, r.norm());
        const Mat3d R = rodrigues(r);
        const Vec3d back = rotation_log(R);
        CHECK((rodrigues(back) - R).norm() < 1e-9);
    }
}

TEST_CASE("polar projection recovers rotations and is differentiable") {
    Rng rng(23);
    SUBCASE("pure rotation is a fixed point") {
        const Mat3d R = axis_rotation(Vec3d(0, 1, 0).normalized(), 0.8);
        PolarCache<double> cache;
        const Mat3d Q = polar_rotation(R, &cache);
        CHECK((Q - R).norm() < 1e-12);
    }
    SUBCASE("output is orthonormal for blended rotations") {
        for (int trial = 0; trial < 20; ++trial) {
            Vec3d a1(rng.normal(), rng.normal(), rng.normal());
            Vec3d a2(rng.normal(), rng.normal(), rng.normal());
            a1.normalize();
            a2.normalize();
            const double w = rng.uniform(0.0, 1.0);
            const Mat3d M = w * axis_rotation(a1, rng.uniform(-2.0, 2.0)) +
                            (1.0 - w) * axis_rotation(a2, rng.uniform(-2.0, 2.0));
            if (std::abs(M.determinant()) < 1e-3) continue;
            const Mat3d Q = polar_rotation(M);
            CHECK((Q.transpose() * Q - Mat3d::Identity()).norm() < 1e-10);
            CHECK(Q.determinant() == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("VJP matches finite differences") {
        for (int trial = 0; trial < 15; ++trial) {
            Vec3d a1(rng.normal(), rng.normal(), rng.normal());
            a1.normalize();
            Mat3d M = axis_rotation(a1, rng.uniform(-2.0, 2.0));
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) M(i, j) += 0.25 * rng.normal();
            if (std::abs(M.determinant()) < 0.05) continue;
            Mat3d w;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) w(i, j) = rng.uniform(-1.0, 1.0);
            PolarCache<double> cache;
            polar_rotation(M, &cache);
            const Mat3d g = polar_rotation_vjp(cache, w);
            auto loss = [&]() { return (w.array() * polar_rotation(M).array()).sum(); };
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    const double numeric = fd(loss, M.data() + 3 * j + i, 0);
                    CHECK(rel_err(numeric, g(i, j)) < 1e-5);
                }
            }
        }
    }
}

TEST_CASE("rigid transform compose and inverse") {
    Rng rng(5);
    Rigidd a(axis_rotation(Vec3d(0, 0, 1), 0.5), Vec3d(1, 2, 3));
    Rigidd b(axis_rotation(Vec3d(1, 0, 0), -0.7), Vec3d(-1, 0.5, 2));
    const Vec3d p(0.3, -0.2, 0.9);
    CHECK((a.compose(b).apply(p) - a.apply(b.apply(p))).norm() < 1e-12);
    const Rigidd ab_inv = a.compose(a.inverse());
    CHECK((ab_inv.R - Mat3d::Identity()).norm() < 1e-12);
    CHECK(ab_inv.t.norm() < 1e-12);
    (void)rng;
}
