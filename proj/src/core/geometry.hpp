#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace rsplat {

template <typename S>
using Vec2 = Eigen::Matrix<S, 2, 1>;
template <typename S>
using Vec3 = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Vec4 = Eigen::Matrix<S, 4, 1>;
template <typename S>
using Mat2 = Eigen::Matrix<S, 2, 2>;
template <typename S>
using Mat3 = Eigen::Matrix<S, 3, 3>;
template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

inline Mat3d skew(const Vec3d& v) {
    Mat3d m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

// Rigid transform in double precision; the kinematic chain always composes in
// double so orthonormality survives long chains.
struct Rigidd {
    Mat3d R = Mat3d::Identity();
    Vec3d t = Vec3d::Zero();

    Rigidd() = default;
    Rigidd(const Mat3d& rot, const Vec3d& trans) : R(rot), t(trans) {}

    Vec3d apply(const Vec3d& p) const { return R * p + t; }

    Rigidd compose(const Rigidd& other) const { return {R * other.R, R * other.t + t}; }

    Rigidd inverse() const {
        Mat3d rt = R.transpose();
        return {rt, -(rt * t)};
    }

    static Rigidd identity() { return {}; }
};

inline bool same_transform(const Rigidd& a, const Rigidd& b) {
    return (a.R.array() == b.R.array()).all() && (a.t.array() == b.t.array()).all();
}

// Cotangent of a rigid transform (matrix + vector parts, no constraints).
struct RigidCot {
    Mat3d R = Mat3d::Zero();
    Vec3d t = Vec3d::Zero();
};

// Rotation about a unit axis by angle q (Rodrigues, closed form).
inline Mat3d axis_rotation(const Vec3d& axis, double q) {
    const double c = std::cos(q), s = std::sin(q);
    Mat3d K = skew(axis);
    return Mat3d::Identity() + s * K + (1.0 - c) * (K * K);
}

// Rotation matrix from an axis-angle 3-vector.
Mat3d rodrigues(const Vec3d& r);

// VJP of rodrigues: given dL/dR, returns dL/dr.
Vec3d rodrigues_vjp(const Vec3d& r, const Mat3d& r_bar);

// Axis-angle from rotation matrix (log map), principal branch.
Vec3d rotation_log(const Mat3d& R);

// ---------------------------------------------------------------------------
// Quaternions stored as (w, x, y, z).
// ---------------------------------------------------------------------------

template <typename S>
Mat3<S> quat_to_mat(const Vec4<S>& q) {
    const S w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3<S> R;
    R(0, 0) = 1 - 2 * (y * y + z * z);
    R(0, 1) = 2 * (x * y - w * z);
    R(0, 2) = 2 * (x * z + w * y);
    R(1, 0) = 2 * (x * y + w * z);
    R(1, 1) = 1 - 2 * (x * x + z * z);
    R(1, 2) = 2 * (y * z - w * x);
    R(2, 0) = 2 * (x * z - w * y);
    R(2, 1) = 2 * (y * z + w * x);
    R(2, 2) = 1 - 2 * (x * x + y * y);
    return R;
}

// dL/d(unit quat) given dL/dR, for R = quat_to_mat(q) with q assumed unit.
template <typename S>
Vec4<S> quat_to_mat_vjp(const Vec4<S>& q, const Mat3<S>& Rb) {
    const S w = q[0], x = q[1], y = q[2], z = q[3];
    Vec4<S> g;
    g[0] = 2 * (-z * Rb(0, 1) + y * Rb(0, 2) + z * Rb(1, 0) - x * Rb(1, 2) - y * Rb(2, 0) +
                x * Rb(2, 1));
    g[1] = 2 * (y * Rb(0, 1) + z * Rb(0, 2) + y * Rb(1, 0) - 2 * x * Rb(1, 1) - w * Rb(1, 2) +
                z * Rb(2, 0) + w * Rb(2, 1) - 2 * x * Rb(2, 2));
    g[2] = 2 * (-2 * y * Rb(0, 0) + x * Rb(0, 1) + w * Rb(0, 2) + x * Rb(1, 0) + z * Rb(1, 2) -
                w * Rb(2, 0) + z * Rb(2, 1) - 2 * y * Rb(2, 2));
    g[3] = 2 * (-2 * z * Rb(0, 0) - w * Rb(0, 1) + x * Rb(0, 2) + w * Rb(1, 0) - 2 * z * Rb(1, 1) +
                y * Rb(1, 2) + x * Rb(2, 0) + y * Rb(2, 1));
    return g;
}

// Rotation from a possibly non-unit quaternion: R(q/|q|). The VJP chains the
// normalization so raw optimizer parameters get exact gradients.
template <typename S>
Mat3<S> rotation_from_quat(const Vec4<S>& q_raw) {
    Vec4<S> q = q_raw / q_raw.norm();
    return quat_to_mat(q);
}

template <typename S>
Vec4<S> rotation_from_quat_vjp(const Vec4<S>& q_raw, const Mat3<S>& Rb) {
    const S n = q_raw.norm();
    Vec4<S> q = q_raw / n;
    Vec4<S> gq = quat_to_mat_vjp(q, Rb);
    return (gq - q * q.dot(gq)) / n;
}

// Quaternion (w,x,y,z) from a rotation matrix. Forward-only (not taped).
template <typename S>
Vec4<S> mat_to_quat(const Mat3<S>& R) {
    Vec4<S> q;
    const S tr = R(0, 0) + R(1, 1) + R(2, 2);
    if (tr > S(0)) {
        S s = std::sqrt(tr + S(1)) * S(2);
        q[0] = S(0.25) * s;
        q[1] = (R(2, 1) - R(1, 2)) / s;
        q[2] = (R(0, 2) - R(2, 0)) / s;
        q[3] = (R(1, 0) - R(0, 1)) / s;
    } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
        S s = std::sqrt(S(1) + R(0, 0) - R(1, 1) - R(2, 2)) * S(2);
        q[0] = (R(2, 1) - R(1, 2)) / s;
        q[1] = S(0.25) * s;
        q[2] = (R(0, 1) + R(1, 0)) / s;
        q[3] = (R(0, 2) + R(2, 0)) / s;
    } else if (R(1, 1) > R(2, 2)) {
        S s = std::sqrt(S(1) + R(1, 1) - R(0, 0) - R(2, 2)) * S(2);
        q[0] = (R(0, 2) - R(2, 0)) / s;
        q[1] = (R(0, 1) + R(1, 0)) / s;
        q[2] = S(0.25) * s;
        q[3] = (R(1, 2) + R(2, 1)) / s;
    } else {
        S s = std::sqrt(S(1) + R(2, 2) - R(0, 0) - R(1, 1)) * S(2);
        q[0] = (R(1, 0) - R(0, 1)) / s;
        q[1] = (R(0, 2) + R(2, 0)) / s;
        q[2] = (R(1, 2) + R(2, 1)) / s;
        q[3] = S(0.25) * s;
    }
    if (q[0] < S(0)) q = -q;
    return q / q.norm();
}

// Quaternion product a ⊗ b, (w,x,y,z) convention.
template <typename S>
Vec4<S> quat_mul(const Vec4<S>& a, const Vec4<S>& b) {
    Vec4<S> q;
    q[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
    q[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2];
    q[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1];
    q[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0];
    return q;
}

// ---------------------------------------------------------------------------
// Polar projection: nearest rotation to a 3x3 matrix via Newton iteration
// X <- (X + X^-T)/2. Iterates are stored so the backward pass can replay the
// exact chain of matrix inverses.
// ---------------------------------------------------------------------------

template <typename S>
struct PolarCache {
    // Iterates X_0..X_k; X_0 is the input, back() is the result.
    std::vector<Mat3<S>> iterates;
    bool degenerate = false;  // input near-singular; output forced to identity
};

template <typename S>
Mat3<S> polar_rotation(const Mat3<S>& M, PolarCache<S>* cache = nullptr) {
    PolarCache<S> local;
    PolarCache<S>& c = cache ? *cache : local;
    c.iterates.clear();
    c.degenerate = false;
    if (std::abs(M.determinant()) < S(1e-10)) {
        c.degenerate = true;
        c.iterates.push_back(M);
        return Mat3<S>::Identity();
    }
    Mat3<S> X = M;
    c.iterates.push_back(X);
    for (int it = 0; it < 24; ++it) {
        Mat3<S> Xn = S(0.5) * (X + X.inverse().transpose().eval());
        c.iterates.push_back(Xn);
        if ((Xn - X).template lpNorm<Eigen::Infinity>() < S(1e-14)) {
            X = Xn;
            break;
        }
        X = Xn;
    }
    return c.iterates.back();
}

// VJP: dL/dM given dL/dQ where Q = polar_rotation(M).
template <typename S>
Mat3<S> polar_rotation_vjp(const PolarCache<S>& cache, const Mat3<S>& q_bar) {
    if (cache.degenerate) return Mat3<S>::Zero();
    Mat3<S> g = q_bar;
    // Walk the Newton steps in reverse: X_{k+1} = (X_k + X_k^-T)/2.
    for (size_t k = cache.iterates.size() - 1; k-- > 0;) {
        const Mat3<S>& X = cache.iterates[k];
        Mat3<S> Xit = X.inverse().transpose();
        g = S(0.5) * g - S(0.5) * (Xit * g.transpose() * Xit);
    }
    return g;
}

}  // namespace rsplat
