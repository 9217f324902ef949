#include "splats.hpp"

#include <bit>
#include <cmath>
#include <ostream>

#include "binio.hpp"
#include "common.hpp"

namespace rsplat {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts are unsupported");

template <typename S>
DensifyReport densify_and_prune(GaussianSet<S>& set, DensifyStats& stats, double grad_threshold,
                                double opacity_floor, Rng& rng) {
    require(stats.size() == set.size(), ErrorCode::ShapeMismatch,
            "densify stats not aligned with the Gaussian set");
    const int64_t n = set.size();
    GaussianSet<S> out;
    const bool tagged = !set.source_link.empty();

    DensifyReport report;
    auto copy_gaussian = [&](int64_t i) {
        for (int k = 0; k < 3; ++k) out.means.push_back(set.means[3 * i + k]);
        for (int k = 0; k < 4; ++k) out.rotations.push_back(set.rotations[4 * i + k]);
        for (int k = 0; k < 3; ++k) out.log_scales.push_back(set.log_scales[3 * i + k]);
        out.opacity_logits.push_back(set.opacity_logits[i]);
        for (int k = 0; k < kShCoeffs; ++k) out.sh.push_back(set.sh[kShCoeffs * i + k]);
        if (tagged) out.source_link.push_back(set.source_link[i]);
    };

    const S log_split = S(std::log(1.6));
    for (int64_t i = 0; i < n; ++i) {
        const double mean_grad =
            stats.obs_count[i] > 0 ? stats.grad_accum[i] / double(stats.obs_count[i]) : 0.0;
        if (sigmoid(double(set.opacity_logits[i])) < opacity_floor) {
            ++report.pruned;
            continue;
        }
        if (mean_grad > grad_threshold) {
            // Two children sampled from the parent's own density.
            const Mat3<S> R = rotation_from_quat(set.rotation(i));
            const Vec3<S> scale = set.log_scale(i).array().exp();
            for (int child = 0; child < 2; ++child) {
                Vec3<S> z(S(rng.normal()), S(rng.normal()), S(rng.normal()));
                Vec3<S> mu = set.mean(i) + R * (scale.array() * z.array()).matrix();
                for (int k = 0; k < 3; ++k) out.means.push_back(mu[k]);
                for (int k = 0; k < 4; ++k) out.rotations.push_back(set.rotations[4 * i + k]);
                for (int k = 0; k < 3; ++k)
                    out.log_scales.push_back(set.log_scales[3 * i + k] - log_split);
                out.opacity_logits.push_back(set.opacity_logits[i]);
                for (int k = 0; k < kShCoeffs; ++k) out.sh.push_back(set.sh[kShCoeffs * i + k]);
                if (tagged) out.source_link.push_back(set.source_link[i]);
            }
            ++report.split;
        } else {
            copy_gaussian(i);
        }
    }
    require(out.size() >= 1, ErrorCode::EmptyAfterPrune, "all Gaussians pruned");
    set = std::move(out);
    stats.resize(set.size());
    return report;
}

template <typename S>
GaussianSet<S> init_from_points(std::span<const SurfacePoint> points, double base_scale,
                                double base_opacity) {
    require(!points.empty(), ErrorCode::EmptyInput, "need at least one point");
    GaussianSet<S> set;
    const int64_t n = static_cast<int64_t>(points.size());
    set.resize(n);
    set.source_link.resize(n);
    const S ls = S(std::log(base_scale));
    const S op = S(logit(base_opacity));
    for (int64_t i = 0; i < n; ++i) {
        const SurfacePoint& p = points[i];
        for (int k = 0; k < 3; ++k) set.means[3 * i + k] = S(p.position[k]);
        set.rotations[4 * i] = S(1);
        set.rotations[4 * i + 1] = set.rotations[4 * i + 2] = set.rotations[4 * i + 3] = S(0);
        for (int k = 0; k < 3; ++k) set.log_scales[3 * i + k] = ls;
        set.opacity_logits[i] = op;
        for (int k = 0; k < kShCoeffs; ++k) set.sh[kShCoeffs * i + k] = S(0);
        // DC term inverts the 0.5 offset so eval_sh reproduces the color.
        for (int ch = 0; ch < 3; ++ch)
            set.sh[kShCoeffs * i + ch] = S((p.color[ch] - 0.5) / kSh0);
        set.source_link[i] = p.link;
    }
    return set;
}

template <typename S>
void write_drgs(std::ostream& out, const GaussianSet<S>& set) {
    write_magic(out, "DRGS");
    write_u32(out, 1);
    write_u32(out, static_cast<uint32_t>(set.size()));
    write_f32_array(out, set.means);
    write_f32_array(out, set.rotations);
    write_f32_array(out, set.log_scales);
    write_f32_array(out, set.opacity_logits);
    write_f32_array(out, set.sh);
}

template <typename S>
GaussianSet<S> read_drgs(std::istream& in) {
    expect_magic(in, "DRGS", "Gaussian segment");
    const uint32_t version = read_u32(in);
    require(version == 1, ErrorCode::IoFailure, "unsupported DRGS version");
    const uint32_t n = read_u32(in);
    require(n >= 1, ErrorCode::EmptySet, "checkpoint holds no Gaussians");
    GaussianSet<S> set;
    read_f32_array(in, set.means, size_t(3) * n);
    read_f32_array(in, set.rotations, size_t(4) * n);
    read_f32_array(in, set.log_scales, size_t(3) * n);
    read_f32_array(in, set.opacity_logits, n);
    read_f32_array(in, set.sh, size_t(kShCoeffs) * n);
    return set;
}

template DensifyReport densify_and_prune<float>(GaussianSet<float>&, DensifyStats&, double, double,
                                                Rng&);
template DensifyReport densify_and_prune<double>(GaussianSet<double>&, DensifyStats&, double,
                                                 double, Rng&);
template GaussianSet<float> init_from_points<float>(std::span<const SurfacePoint>, double, double);
template GaussianSet<double> init_from_points<double>(std::span<const SurfacePoint>, double,
                                                      double);
template void write_drgs<float>(std::ostream&, const GaussianSet<float>&);
template void write_drgs<double>(std::ostream&, const GaussianSet<double>&);
template GaussianSet<float> read_drgs<float>(std::istream&);
template GaussianSet<double> read_drgs<double>(std::istream&);

}  // namespace rsplat
