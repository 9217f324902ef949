#include "geometry.hpp"

namespace rsplat {

namespace {

// Coefficients of R(r) = I + a [r]x + b [r]x^2 and their radial derivatives,
// with series fallbacks near theta = 0.
struct RodriguesCoeffs {
    double a, b, da, db;  // da = d a / d theta^2 ... expressed per r_i below
};

RodriguesCoeffs rodrigues_coeffs(double theta) {
    RodriguesCoeffs c{};
    if (theta < 1e-6) {
        const double t2 = theta * theta;
        c.a = 1.0 - t2 / 6.0;
        c.b = 0.5 - t2 / 24.0;
        // d a / d r_i = a' * r_i with a' = (theta cos - sin)/theta^3, etc.
        c.da = -1.0 / 3.0 + t2 / 30.0;
        c.db = -1.0 / 12.0 + t2 / 180.0;
    } else {
        const double s = std::sin(theta), cth = std::cos(theta);
        const double t2 = theta * theta;
        c.a = s / theta;
        c.b = (1.0 - cth) / t2;
        c.da = (theta * cth - s) / (t2 * theta);
        c.db = (theta * s - 2.0 * (1.0 - cth)) / (t2 * t2);
    }
    return c;
}

}  // namespace

Mat3d rodrigues(const Vec3d& r) {
    const double theta = r.norm();
    const RodriguesCoeffs c = rodrigues_coeffs(theta);
    const Mat3d K = skew(r);
    return Mat3d::Identity() + c.a * K + c.b * (K * K);
}

Vec3d rodrigues_vjp(const Vec3d& r, const Mat3d& r_bar) {
    const double theta = r.norm();
    const RodriguesCoeffs c = rodrigues_coeffs(theta);
    const Mat3d K = skew(r);
    const Mat3d K2 = K * K;
    const double gK = (r_bar.array() * K.array()).sum();
    const double gK2 = (r_bar.array() * K2.array()).sum();
    Vec3d g;
    for (int i = 0; i < 3; ++i) {
        Vec3d e = Vec3d::Zero();
        e[i] = 1.0;
        const Mat3d Ei = skew(e);
        const Mat3d cross_term = Ei * K + K * Ei;
        g[i] = r[i] * (c.da * gK + c.db * gK2) +
               c.a * (r_bar.array() * Ei.array()).sum() +
               c.b * (r_bar.array() * cross_term.array()).sum();
    }
    return g;
}

Vec3d rotation_log(const Mat3d& R) {
    const double tr = std::min(3.0, std::max(-1.0, R.trace()));
    const double cos_theta = 0.5 * (tr - 1.0);
    const double theta = std::acos(std::min(1.0, std::max(-1.0, cos_theta)));
    Vec3d w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    if (theta < 1e-9) return 0.5 * w;
    if (theta > M_PI - 1e-6) {
        // Near pi: extract axis from the symmetric part.
        Mat3d A = 0.5 * (R + Mat3d::Identity());
        Vec3d axis(std::sqrt(std::max(0.0, A(0, 0))), std::sqrt(std::max(0.0, A(1, 1))),
                   std::sqrt(std::max(0.0, A(2, 2))));
        int k = 0;
        if (axis[1] > axis[k]) k = 1;
        if (axis[2] > axis[k]) k = 2;
        if (axis[k] < 1e-12) return Vec3d::Zero();
        for (int i = 0; i < 3; ++i) {
            if (i != k && A(k, i) < 0) axis[i] = -axis[i];
        }
        if (w[k] < 0) axis = -axis;
        axis.normalize();
        return theta * axis;
    }
    return (theta / (2.0 * std::sin(theta))) * w;
}

}  // namespace rsplat
