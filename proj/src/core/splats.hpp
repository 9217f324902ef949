#pragma once

#include <iosfwd>
#include <span>

#include "common.hpp"
#include "geometry.hpp"
#include "robot.hpp"

namespace rsplat {

// Spherical harmonics, real basis, degrees 0..2 (9 functions, 27 coefficients
// per Gaussian with rgb interleaved as coeff*3 + channel).
inline constexpr int kShCoeffs = 27;
inline constexpr double kSh0 = 0.28209479177387814;
inline constexpr double kSh1 = 0.4886025119029199;
inline constexpr double kSh2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                   -1.0925484305920792, 0.5462742152960396};

inline constexpr double kMinLogScale = -13.0;  // exp > 1e-6
inline constexpr double kMaxLogScale = 2.302;  // exp < 10

template <typename S>
S sigmoid(S x) {
    return S(1) / (S(1) + std::exp(-x));
}

template <typename S>
S logit(S p) {
    return std::log(p / (S(1) - p));
}

// Canonical Gaussian set, struct-of-arrays. Rotations are quaternions in
// (w,x,y,z) order; scales live in log space and opacities in logit space so
// every parameter is unconstrained during optimization.
template <typename S>
struct GaussianSet {
    std::vector<S> means;           // 3N
    std::vector<S> rotations;       // 4N
    std::vector<S> log_scales;      // 3N
    std::vector<S> opacity_logits;  // N
    std::vector<S> sh;              // 27N
    std::vector<int32_t> source_link;  // N or empty (synthetic oracle tags)

    int64_t size() const { return static_cast<int64_t>(opacity_logits.size()); }

    void resize(int64_t n) {
        means.resize(3 * n);
        rotations.resize(4 * n);
        log_scales.resize(3 * n);
        opacity_logits.resize(n);
        sh.resize(kShCoeffs * n);
    }

    Vec3<S> mean(int64_t i) const { return Vec3<S>(means[3 * i], means[3 * i + 1], means[3 * i + 2]); }
    Vec4<S> rotation(int64_t i) const {
        return Vec4<S>(rotations[4 * i], rotations[4 * i + 1], rotations[4 * i + 2],
                       rotations[4 * i + 3]);
    }
    Vec3<S> log_scale(int64_t i) const {
        return Vec3<S>(log_scales[3 * i], log_scales[3 * i + 1], log_scales[3 * i + 2]);
    }

    template <typename T>
    GaussianSet<T> cast() const {
        GaussianSet<T> out;
        auto conv = [](const std::vector<S>& src, std::vector<T>& dst) {
            dst.resize(src.size());
            for (size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<T>(src[i]);
        };
        conv(means, out.means);
        conv(rotations, out.rotations);
        conv(log_scales, out.log_scales);
        conv(opacity_logits, out.opacity_logits);
        conv(sh, out.sh);
        out.source_link = source_link;
        return out;
    }
};

// Sigma = R * diag(exp(2*log_scale)) * R^T for a (possibly unnormalized)
// quaternion. Always symmetric positive definite for finite inputs.
template <typename S>
Mat3<S> covariance3d(const Vec4<S>& quat, const Vec3<S>& log_scale) {
    const Mat3<S> R = rotation_from_quat(quat);
    const Vec3<S> d = (S(2) * log_scale).array().exp();
    return R * d.asDiagonal() * R.transpose();
}

// View-conditioned color: per channel sum_k Y_k(dir) * sh[k*3+ch] + 0.5,
// clamped to [0,1]. Gradients are zero in the clamped regions.
template <typename S>
Vec3<S> sh_basis_values(const Vec3<S>& dir, S* basis /*9*/) {
    const S x = dir.x(), y = dir.y(), z = dir.z();
    basis[0] = S(kSh0);
    basis[1] = S(-kSh1) * y;
    basis[2] = S(kSh1) * z;
    basis[3] = S(-kSh1) * x;
    basis[4] = S(kSh2[0]) * x * y;
    basis[5] = S(kSh2[1]) * y * z;
    basis[6] = S(kSh2[2]) * (S(2) * z * z - x * x - y * y);
    basis[7] = S(kSh2[3]) * x * z;
    basis[8] = S(kSh2[4]) * (x * x - y * y);
    return dir;
}

template <typename S>
Vec3<S> eval_sh(std::span<const S> coeffs /*27*/, const Vec3<S>& dir) {
    S basis[9];
    sh_basis_values(dir, basis);
    Vec3<S> c;
    for (int ch = 0; ch < 3; ++ch) {
        S v = S(0.5);
        for (int k = 0; k < 9; ++k) v += basis[k] * coeffs[3 * k + ch];
        c[ch] = std::min(S(1), std::max(S(0), v));
    }
    return c;
}

// VJP of eval_sh. Accumulates into coeff_bar (27) and returns dL/ddir for the
// unit direction (caller chains the normalization).
template <typename S>
Vec3<S> eval_sh_vjp(std::span<const S> coeffs, const Vec3<S>& dir, const Vec3<S>& color_bar,
                    S* coeff_bar /*27, accumulated*/) {
    S basis[9];
    sh_basis_values(dir, basis);
    const S x = dir.x(), y = dir.y(), z = dir.z();
    Vec3<S> dir_bar = Vec3<S>::Zero();
    for (int ch = 0; ch < 3; ++ch) {
        S v = S(0.5);
        for (int k = 0; k < 9; ++k) v += basis[k] * coeffs[3 * k + ch];
        if (v <= S(0) || v >= S(1)) continue;  // clamped: flat region
        const S g = color_bar[ch];
        if (g == S(0)) continue;
        for (int k = 0; k < 9; ++k) coeff_bar[3 * k + ch] += g * basis[k];
        const S c1 = coeffs[3 * 1 + ch], c2 = coeffs[3 * 2 + ch], c3 = coeffs[3 * 3 + ch];
        const S c4 = coeffs[3 * 4 + ch], c5 = coeffs[3 * 5 + ch], c6 = coeffs[3 * 6 + ch];
        const S c7 = coeffs[3 * 7 + ch], c8 = coeffs[3 * 8 + ch];
        dir_bar.x() += g * (S(-kSh1) * c3 + S(kSh2[0]) * y * c4 + S(kSh2[2]) * (S(-2) * x) * c6 +
                            S(kSh2[3]) * z * c7 + S(kSh2[4]) * (S(2) * x) * c8);
        dir_bar.y() += g * (S(-kSh1) * c1 + S(kSh2[0]) * x * c4 + S(kSh2[1]) * z * c5 +
                            S(kSh2[2]) * (S(-2) * y) * c6 + S(kSh2[4]) * (S(-2) * y) * c8);
        dir_bar.z() += g * (S(kSh1) * c2 + S(kSh2[1]) * y * c5 + S(kSh2[2]) * (S(4) * z) * c6 +
                            S(kSh2[3]) * x * c7);
    }
    return dir_bar;
}

// Accumulated densification statistics; reset after every densify event.
struct DensifyStats {
    std::vector<double> grad_accum;  // summed screen-space positional gradient norms
    std::vector<int64_t> obs_count;

    void resize(int64_t n) {
        grad_accum.assign(n, 0.0);
        obs_count.assign(n, 0);
    }
    int64_t size() const { return static_cast<int64_t>(grad_accum.size()); }
};

struct DensifyReport {
    int64_t split = 0;
    int64_t pruned = 0;
};

// Splits Gaussians whose mean accumulated positional gradient exceeds the
// threshold into two children (means drawn from the parent's own density,
// scales shrunk by 1.6) and removes Gaussians below the opacity floor.
// Untouched Gaussians keep their parameters bit-for-bit.
template <typename S>
DensifyReport densify_and_prune(GaussianSet<S>& set, DensifyStats& stats, double grad_threshold,
                                double opacity_floor, Rng& rng);

// Initializes from surface samples: identity rotations, isotropic scales,
// uniform opacity, DC-only spherical harmonics matching the point colors.
template <typename S>
GaussianSet<S> init_from_points(std::span<const SurfacePoint> world_points, double base_scale,
                                double base_opacity);

// "DRGS" checkpoint segment: version, N, then float32 arrays in fixed order.
template <typename S>
void write_drgs(std::ostream& out, const GaussianSet<S>& set);
template <typename S>
GaussianSet<S> read_drgs(std::istream& in);

}  // namespace rsplat
