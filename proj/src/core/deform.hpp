#pragma once

#include <array>
#include <memory>

#include "kinematics.hpp"
#include "mlp.hpp"
#include "rasterizer.hpp"
#include "splats.hpp"

namespace rsplat {

struct DeformNetConfig {
    FourierEncoding encoding{6, true};
    int hidden = 256;
    int hidden_layers = 4;
    bool no_deform = false;  // bypass the appearance network entirely
};

// Full robot splat model: canonical Gaussians plus the skinning-weight and
// appearance networks. Skinning weights are indexed by link frame (slot 0 is
// the root, whose relative transform is always the identity), so a weight
// argmax compares directly against a Gaussian's source link tag.
template <typename S>
struct SplatModel {
    std::shared_ptr<const RobotModel> robot;
    GaussianSet<S> canonical;
    Mlp<S> lbs_net;         // fourier(mu) -> per-link logits
    Mlp<S> appearance_net;  // fourier(mu), fourier(deformed) -> (dR, dS, do, sh)
    DeformNetConfig config;
    std::vector<Rigidd> canonical_world;    // T_l(p0) per link
    std::vector<Rigidd> canonical_inverse;  // inv(T_l(p0)) per link

    int weight_slots() const { return robot->num_links(); }

    static SplatModel create(std::shared_ptr<const RobotModel> robot, GaussianSet<S> canonical,
                             const DeformNetConfig& config, uint64_t seed);

    template <typename T>
    SplatModel<T> cast() const;
};

inline constexpr int kAppearanceOut = 35;  // 4 quat + 3 scale + 1 opacity + 27 sh

// Per-link transforms that carry canonical geometry to the posed frame:
// rel_l = T_l(p) * inv(T_l(p0)), snapped to the exact identity for links the
// pose did not move (which makes the canonical pose an exact fixed point).
template <typename S>
std::vector<Rigidd> relative_transforms(const SplatModel<S>& model, const FkResult& fk);

// Fourier-encode a packed xyz array into a (dim x count) matrix.
template <typename S>
MatX<S> encode_points(const FourierEncoding& enc, const S* points, int64_t count);

template <typename S>
MatX<S> softmax_columns(const MatX<S>& logits);

// d(softmax)/d(logits), column-wise.
template <typename S>
MatX<S> softmax_columns_vjp(const MatX<S>& weights, const MatX<S>& weights_bar);

// Implicit LBS weights for arbitrary coordinates; columns sum to one.
template <typename S>
MatX<S> lbs_weights(const SplatModel<S>& model, const S* points, int64_t count,
                    typename Mlp<S>::Cache* cache = nullptr);

// ---------------------------------------------------------------------------
// Weighted rigid blending (the geometric deformation)
// ---------------------------------------------------------------------------

template <typename S>
struct BlendResult {
    std::vector<S> positions;  // 3M deformed points
    std::vector<S> blend_t;    // 3M blended translations
    std::vector<S> blend_Q;    // 9M polar-projected blend rotations (with_polar)
};

template <typename S>
struct BlendApplyTape {
    std::vector<S> blend_R;            // 9M full blend matrices
    std::vector<PolarCache<S>> polar;  // M when with_polar
};

// positions_i = B_i mu_i + b_i with B_i = I + sum_l w_li (rel_l.R - I) and
// b_i = sum_l w_li rel_l.t; the delta form keeps the identity exact under
// floating-point softmax normalization.
template <typename S>
BlendResult<S> blend_apply(const std::vector<Rigidd>& rel, const MatX<S>& weights, const S* points,
                           int64_t count, bool with_polar, BlendApplyTape<S>* tape);

// Accumulates cotangents for the weights, the relative transforms and the
// input points. blend_Q_bar may be null.
template <typename S>
void blend_apply_backward(const std::vector<Rigidd>& rel, const MatX<S>& weights, const S* points,
                          const BlendApplyTape<S>& tape, const S* positions_bar,
                          const S* blend_Q_bar, MatX<S>& weights_bar,
                          std::vector<RigidCot>& rel_bar, S* points_bar);

// Chains relative-transform cotangents back to per-link world cotangents.
template <typename S>
std::vector<RigidCot> rel_to_link_cotangents(const SplatModel<S>& model,
                                             const std::vector<RigidCot>& rel_bar);

// ---------------------------------------------------------------------------
// Full geometric deformation of a point set (weights + blend + FK backward)
// ---------------------------------------------------------------------------

template <typename S>
struct BlendTape {
    FkResult fk;  // with tape
    std::vector<Rigidd> rel;
    std::vector<S> points;  // 3M inputs
    typename Mlp<S>::Cache lbs_cache;
    MatX<S> weights;  // slots x M
    BlendApplyTape<S> apply;
    std::vector<S> blend_t;
};

template <typename S>
BlendResult<S> blend_points(const SplatModel<S>& model, const FkResult& fk, const S* points,
                            int64_t count, bool with_polar, BlendTape<S>* tape);

template <typename S>
struct BlendGrads {
    typename Mlp<S>::Grads lbs;
    std::vector<S> points;  // dL/d(input points)
    Pose pose;              // dL/d(pose) through FK
};

template <typename S>
BlendGrads<S> blend_points_backward(const SplatModel<S>& model, const BlendTape<S>& tape,
                                    const S* positions_bar, const S* blend_Q_bar);

// ---------------------------------------------------------------------------
// Posed Gaussians (geometry + appearance deformation)
// ---------------------------------------------------------------------------

template <typename S>
struct PosedSplats {
    std::vector<S> means;           // 3N
    std::vector<S> rot_mats;        // 9N (feeds the rasterizer)
    std::vector<S> quats;           // 4N unit quaternions (reporting/serialization)
    std::vector<S> log_scales;      // 3N
    std::vector<S> opacity_logits;  // N
    std::vector<S> sh;              // 27N
    std::vector<S> blend_Q;         // 9N blended transform rotations
    std::vector<S> blend_t;         // 3N blended transform translations

    struct Tape {
        BlendTape<S> blend;
        typename Mlp<S>::Cache x_cache;
        MatX<S> x_out;  // kAppearanceOut x N raw head outputs
    };
    std::unique_ptr<Tape> tape;

    int64_t size() const { return static_cast<int64_t>(opacity_logits.size()); }

    SplatView<S> view() const {
        return SplatView<S>{means.data(), rot_mats.data(), log_scales.data(),
                            opacity_logits.data(), sh.data(), size()};
    }
};

// Pose-conditioned appearance deformation for a single Gaussian: the head
// output split into a (normalized) residual rotation, log-scale offsets, an
// opacity-logit offset and replacement SH coefficients.
template <typename S>
struct AppearanceDelta {
    Vec4<S> rotation = Vec4<S>(1, 0, 0, 0);  // unit quaternion
    Vec3<S> log_scale = Vec3<S>::Zero();
    S opacity_logit = S(0);
    std::array<S, kShCoeffs> sh{};
};

template <typename S>
AppearanceDelta<S> appearance_delta(const SplatModel<S>& model, const Vec3<S>& canonical_position,
                                    const Vec3<S>& deformed_position);

// Applies the appearance head outputs (or the canonical parameters when
// disabled) on top of the blended geometry: fills rot_mats, quats,
// log_scales, opacity_logits and sh of `posed`. x_out may be null only when
// no_deform is set.
template <typename S>
void apply_appearance(const GaussianSet<S>& canonical, bool no_deform, const MatX<S>* x_out,
                      PosedSplats<S>& posed);

// Adjoint of apply_appearance: scatters rasterizer cotangents into the
// appearance head outputs, the blend rotations and (optionally) the
// canonical parameters. canonical_grads may be null for frozen models.
template <typename S>
void apply_appearance_backward(const GaussianSet<S>& canonical, bool no_deform,
                               const MatX<S>* x_out, const PosedSplats<S>& posed,
                               const RasterGrads<S>& rg, MatX<S>* x_out_bar,
                               GaussianSetGrads<S>* canonical_grads, std::vector<S>& blend_Q_bar);

// Forward composition FK -> blend -> appearance.
template <typename S>
PosedSplats<S> pose_splat(const SplatModel<S>& model, const Pose& pose, bool with_tape = true);

template <typename S>
struct PoseSplatGrads {
    Pose pose;
    GaussianSetGrads<S> canonical;
    typename Mlp<S>::Grads lbs;
    typename Mlp<S>::Grads appearance;
};

// Backward through the posed pipeline given rasterizer cotangents.
template <typename S>
PoseSplatGrads<S> pose_splat_backward(const SplatModel<S>& model, const PosedSplats<S>& posed,
                                      const RasterGrads<S>& raster_grads);

}  // namespace rsplat
