#include "deform.hpp"

#include <cmath>

namespace rsplat {

template <typename S>
SplatModel<S> SplatModel<S>::create(std::shared_ptr<const RobotModel> robot,
                                    GaussianSet<S> canonical, const DeformNetConfig& config,
                                    uint64_t seed) {
    SplatModel<S> model;
    model.robot = std::move(robot);
    model.canonical = std::move(canonical);
    model.config = config;
    Rng rng(seed);
    Rng lbs_rng = rng.fork(0x1b5);
    Rng app_rng = rng.fork(0xa99);
    const int enc = config.encoding.out_dim(3);
    model.lbs_net = Mlp<S>::make(enc, config.hidden, config.hidden_layers,
                                 model.robot->num_links(), lbs_rng);
    model.appearance_net =
        Mlp<S>::make(2 * enc, config.hidden, config.hidden_layers, kAppearanceOut, app_rng);
    const FkResult fk0 = forward_kinematics(*model.robot, Pose::Zero(model.robot->dof));
    model.canonical_world = fk0.link_world;
    model.canonical_inverse.clear();
    for (const Rigidd& T : fk0.link_world) model.canonical_inverse.push_back(T.inverse());
    return model;
}

template <typename S>
template <typename T>
SplatModel<T> SplatModel<S>::cast() const {
    SplatModel<T> out;
    out.robot = robot;
    out.canonical = canonical.template cast<T>();
    out.config = config;
    out.canonical_world = canonical_world;
    out.canonical_inverse = canonical_inverse;
    auto conv_net = [](const Mlp<S>& src, Mlp<T>& dst) {
        dst.weights.clear();
        dst.biases.clear();
        for (const auto& w : src.weights) dst.weights.push_back(w.template cast<T>());
        for (const auto& b : src.biases) dst.biases.push_back(b.template cast<T>());
    };
    conv_net(lbs_net, out.lbs_net);
    conv_net(appearance_net, out.appearance_net);
    return out;
}

template <typename S>
std::vector<Rigidd> relative_transforms(const SplatModel<S>& model, const FkResult& fk) {
    const RobotModel& robot = *model.robot;
    require(fk.num_links == robot.num_links() && fk.dof == robot.dof, ErrorCode::PoseMismatch,
            "forward kinematics came from a different robot");
    const int L = robot.num_links();
    std::vector<Rigidd> rel(L);
    for (int l = 0; l < L; ++l)
        rel[l] = same_transform(fk.link_world[l], model.canonical_world[l])
                     ? Rigidd::identity()
                     : fk.link_world[l].compose(model.canonical_inverse[l]);
    return rel;
}

template <typename S>
MatX<S> encode_points(const FourierEncoding& enc, const S* points, int64_t count) {
    const int dim = enc.out_dim(3);
    MatX<S> encoded(dim, count);
    for (int64_t i = 0; i < count; ++i)
        fourier_encode(enc, points + 3 * i, 3, encoded.col(i).data());
    return encoded;
}

template <typename S>
MatX<S> softmax_columns(const MatX<S>& logits) {
    MatX<S> out(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const S max_logit = logits.col(c).maxCoeff();
        VecX<S> e = (logits.col(c).array() - max_logit).exp();
        out.col(c) = e / e.sum();
    }
    return out;
}

template <typename S>
MatX<S> softmax_columns_vjp(const MatX<S>& weights, const MatX<S>& weights_bar) {
    MatX<S> logits_bar(weights.rows(), weights.cols());
    for (Eigen::Index c = 0; c < weights.cols(); ++c) {
        const S dot = weights.col(c).dot(weights_bar.col(c));
        logits_bar.col(c) = weights.col(c).array() * (weights_bar.col(c).array() - dot);
    }
    return logits_bar;
}

template <typename S>
MatX<S> lbs_weights(const SplatModel<S>& model, const S* points, int64_t count,
                    typename Mlp<S>::Cache* cache) {
    const MatX<S> encoded = encode_points(model.config.encoding, points, count);
    return softmax_columns(model.lbs_net.forward(encoded, cache));
}

template <typename S>
BlendResult<S> blend_apply(const std::vector<Rigidd>& rel, const MatX<S>& weights, const S* points,
                           int64_t count, bool with_polar, BlendApplyTape<S>* tape) {
    const int L = int(rel.size());
    require(weights.rows() == L && weights.cols() == count, ErrorCode::ShapeMismatch,
            "weight matrix does not match links x points");

    std::vector<Mat3<S>> rel_R_delta(L);
    std::vector<Vec3<S>> rel_t(L);
    for (int l = 0; l < L; ++l) {
        rel_R_delta[l] = rel[l].R.template cast<S>() - Mat3<S>::Identity();
        rel_t[l] = rel[l].t.template cast<S>();
    }

    BlendResult<S> result;
    result.positions.resize(3 * count);
    result.blend_t.resize(3 * count);
    if (with_polar) result.blend_Q.resize(9 * count);

    BlendApplyTape<S> local;
    BlendApplyTape<S>& t = tape ? *tape : local;
    t.blend_R.resize(9 * count);
    if (with_polar) t.polar.resize(count);

    parallel_for(count, [&](int64_t i) {
        Mat3<S> B = Mat3<S>::Identity();
        Vec3<S> bt = Vec3<S>::Zero();
        for (int l = 0; l < L; ++l) {
            const S w = weights(l, i);
            B += w * rel_R_delta[l];
            bt += w * rel_t[l];
        }
        const Vec3<S> mu(points[3 * i], points[3 * i + 1], points[3 * i + 2]);
        const Vec3<S> pos = B * mu + bt;
        for (int k = 0; k < 3; ++k) result.positions[3 * i + k] = pos[k];
        for (int k = 0; k < 3; ++k) result.blend_t[3 * i + k] = bt[k];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t.blend_R[9 * i + 3 * r + c] = B(r, c);
        if (with_polar) {
            const Mat3<S> Q = polar_rotation(B, &t.polar[i]);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) result.blend_Q[9 * i + 3 * r + c] = Q(r, c);
        }
    });
    return result;
}

template <typename S>
void blend_apply_backward(const std::vector<Rigidd>& rel, const MatX<S>& weights, const S* points,
                          const BlendApplyTape<S>& tape, const S* positions_bar,
                          const S* blend_Q_bar, MatX<S>& weights_bar,
                          std::vector<RigidCot>& rel_bar, S* points_bar) {
    const int L = int(rel.size());
    const int64_t count = weights.cols();
    std::vector<Mat3<S>> rel_R_delta(L);
    std::vector<Vec3<S>> rel_t(L);
    for (int l = 0; l < L; ++l) {
        rel_R_delta[l] = rel[l].R.template cast<S>() - Mat3<S>::Identity();
        rel_t[l] = rel[l].t.template cast<S>();
    }
    std::vector<Mat3<S>> rel_R_acc(L, Mat3<S>::Zero());
    std::vector<Vec3<S>> rel_t_acc(L, Vec3<S>::Zero());

    for (int64_t i = 0; i < count; ++i) {
        const Vec3<S> mu(points[3 * i], points[3 * i + 1], points[3 * i + 2]);
        Eigen::Map<const Eigen::Matrix<S, 3, 3, Eigen::RowMajor>> B(tape.blend_R.data() + 9 * i);
        const Vec3<S> pos_bar(positions_bar[3 * i], positions_bar[3 * i + 1],
                              positions_bar[3 * i + 2]);

        Mat3<S> B_bar = pos_bar * mu.transpose();
        const Vec3<S> bt_bar = pos_bar;
        const Vec3<S> mu_bar = B.transpose() * pos_bar;

        if (blend_Q_bar && !tape.polar.empty()) {
            Eigen::Map<const Eigen::Matrix<S, 3, 3, Eigen::RowMajor>> Qb(blend_Q_bar + 9 * i);
            if (!Qb.isZero()) B_bar += polar_rotation_vjp(tape.polar[i], Mat3<S>(Qb));
        }

        for (int l = 0; l < L; ++l) {
            weights_bar(l, i) +=
                (rel_R_delta[l].array() * B_bar.array()).sum() + rel_t[l].dot(bt_bar);
            const S w = weights(l, i);
            rel_R_acc[l] += w * B_bar;
            rel_t_acc[l] += w * bt_bar;
        }
        if (points_bar)
            for (int k = 0; k < 3; ++k) points_bar[3 * i + k] += mu_bar[k];
    }
    for (int l = 0; l < L; ++l) {
        rel_bar[l].R += rel_R_acc[l].template cast<double>();
        rel_bar[l].t += rel_t_acc[l].template cast<double>();
    }
}

template <typename S>
std::vector<RigidCot> rel_to_link_cotangents(const SplatModel<S>& model,
                                             const std::vector<RigidCot>& rel_bar) {
    const int L = model.robot->num_links();
    std::vector<RigidCot> link_bar(L);
    for (int l = 0; l < L; ++l) {
        const Rigidd& C = model.canonical_inverse[l];
        link_bar[l].R = rel_bar[l].R * C.R.transpose() + rel_bar[l].t * C.t.transpose();
        link_bar[l].t = rel_bar[l].t;
    }
    return link_bar;
}

template <typename S>
BlendResult<S> blend_points(const SplatModel<S>& model, const FkResult& fk, const S* points,
                            int64_t count, bool with_polar, BlendTape<S>* tape) {
    std::vector<Rigidd> rel = relative_transforms(model, fk);
    typename Mlp<S>::Cache local_cache;
    typename Mlp<S>::Cache& cache = tape ? tape->lbs_cache : local_cache;
    const MatX<S> weights = lbs_weights(model, points, count, &cache);
    BlendResult<S> result =
        blend_apply(rel, weights, points, count, with_polar, tape ? &tape->apply : nullptr);
    if (tape) {
        tape->fk = fk;
        tape->rel = std::move(rel);
        tape->points.assign(points, points + 3 * count);
        tape->weights = weights;
        tape->blend_t = result.blend_t;
    }
    return result;
}

template <typename S>
BlendGrads<S> blend_points_backward(const SplatModel<S>& model, const BlendTape<S>& tape,
                                    const S* positions_bar, const S* blend_Q_bar) {
    const int64_t count = static_cast<int64_t>(tape.points.size() / 3);
    const int L = model.robot->num_links();

    BlendGrads<S> grads;
    grads.points.assign(3 * count, S(0));
    MatX<S> weights_bar = MatX<S>::Zero(L, count);
    std::vector<RigidCot> rel_bar(L);
    blend_apply_backward(tape.rel, tape.weights, tape.points.data(), tape.apply, positions_bar,
                         blend_Q_bar, weights_bar, rel_bar, grads.points.data());

    const MatX<S> logits_bar = softmax_columns_vjp(tape.weights, weights_bar);
    grads.lbs.init_like(model.lbs_net);
    MatX<S> encoded_bar = model.lbs_net.backward(tape.lbs_cache, logits_bar, grads.lbs);
    for (int64_t i = 0; i < count; ++i)
        fourier_encode_vjp(model.config.encoding, tape.points.data() + 3 * i, 3,
                           encoded_bar.col(i).data(), grads.points.data() + 3 * i);

    grads.pose = fk_backward(*model.robot, tape.fk, rel_to_link_cotangents(model, rel_bar));
    return grads;
}

template <typename S>
AppearanceDelta<S> appearance_delta(const SplatModel<S>& model, const Vec3<S>& canonical_position,
                                    const Vec3<S>& deformed_position) {
    const int enc_dim = model.config.encoding.out_dim(3);
    MatX<S> x_in(2 * enc_dim, 1);
    fourier_encode(model.config.encoding, canonical_position.data(), 3, x_in.col(0).data());
    fourier_encode(model.config.encoding, deformed_position.data(), 3,
                   x_in.col(0).data() + enc_dim);
    const MatX<S> out = model.appearance_net.forward(x_in);
    AppearanceDelta<S> delta;
    Vec4<S> dq(out(0, 0) + S(1), out(1, 0), out(2, 0), out(3, 0));
    delta.rotation = dq / dq.norm();
    for (int k = 0; k < 3; ++k) delta.log_scale[k] = out(4 + k, 0);
    delta.opacity_logit = out(7, 0);
    for (int k = 0; k < kShCoeffs; ++k) delta.sh[k] = out(8 + k, 0);
    return delta;
}

template <typename S>
void apply_appearance(const GaussianSet<S>& can, bool no_deform, const MatX<S>* x_out,
                      PosedSplats<S>& posed) {
    const int64_t n = can.size();
    require(no_deform || x_out != nullptr, ErrorCode::ShapeMismatch,
            "appearance outputs required unless disabled");
    posed.rot_mats.resize(9 * n);
    posed.quats.resize(4 * n);
    posed.log_scales.resize(3 * n);
    posed.opacity_logits.resize(n);
    posed.sh.resize(kShCoeffs * n);

    parallel_for(n, [&](int64_t i) {
        Eigen::Map<const Eigen::Matrix<S, 3, 3, Eigen::RowMajor>> Q(posed.blend_Q.data() + 9 * i);
        const Vec4<S> q_can = can.rotation(i);
        const Mat3<S> R_can = rotation_from_quat(q_can);
        Mat3<S> R_total;
        Vec4<S> q_total;
        if (no_deform) {
            R_total = Q * R_can;
            for (int k = 0; k < 3; ++k) posed.log_scales[3 * i + k] = can.log_scales[3 * i + k];
            posed.opacity_logits[i] = can.opacity_logits[i];
            for (int k = 0; k < kShCoeffs; ++k)
                posed.sh[kShCoeffs * i + k] = can.sh[kShCoeffs * i + k];
            q_total = quat_mul(mat_to_quat(Mat3<S>(Q)), Vec4<S>(q_can / q_can.norm()));
        } else {
            Vec4<S> dq((*x_out)(0, i) + S(1), (*x_out)(1, i), (*x_out)(2, i), (*x_out)(3, i));
            const Mat3<S> R_delta = rotation_from_quat(dq);
            R_total = R_delta * Q * R_can;
            for (int k = 0; k < 3; ++k)
                posed.log_scales[3 * i + k] = can.log_scales[3 * i + k] + (*x_out)(4 + k, i);
            posed.opacity_logits[i] = can.opacity_logits[i] + (*x_out)(7, i);
            for (int k = 0; k < kShCoeffs; ++k) posed.sh[kShCoeffs * i + k] = (*x_out)(8 + k, i);
            q_total = quat_mul(Vec4<S>(dq / dq.norm()),
                               quat_mul(mat_to_quat(Mat3<S>(Q)), Vec4<S>(q_can / q_can.norm())));
        }
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) posed.rot_mats[9 * i + 3 * r + c] = R_total(r, c);
        for (int k = 0; k < 4; ++k) posed.quats[4 * i + k] = q_total[k];
    });
}

template <typename S>
void apply_appearance_backward(const GaussianSet<S>& can, bool no_deform, const MatX<S>* x_out,
                               const PosedSplats<S>& posed, const RasterGrads<S>& rg,
                               MatX<S>* x_out_bar, GaussianSetGrads<S>* can_grads,
                               std::vector<S>& blend_Q_bar) {
    const int64_t n = can.size();
    blend_Q_bar.assign(9 * n, S(0));
    for (int64_t i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) {
            if (can_grads) can_grads->log_scales[3 * i + k] += rg.log_scales[3 * i + k];
            if (!no_deform) (*x_out_bar)(4 + k, i) += rg.log_scales[3 * i + k];
        }
        if (can_grads) can_grads->opacity_logits[i] += rg.opacity_logits[i];
        if (!no_deform) (*x_out_bar)(7, i) += rg.opacity_logits[i];
        for (int k = 0; k < kShCoeffs; ++k) {
            if (no_deform) {
                if (can_grads) can_grads->sh[kShCoeffs * i + k] += rg.sh[kShCoeffs * i + k];
            } else {
                (*x_out_bar)(8 + k, i) += rg.sh[kShCoeffs * i + k];
            }
        }

        // Rotation composition R_total = R_delta * Q * R_can.
        Eigen::Map<const Eigen::Matrix<S, 3, 3, Eigen::RowMajor>> Q(posed.blend_Q.data() + 9 * i);
        Eigen::Map<const Eigen::Matrix<S, 3, 3, Eigen::RowMajor>> Rt_bar_map(rg.rot_mats.data() +
                                                                             9 * i);
        const Mat3<S> Rt_bar(Rt_bar_map);
        const Vec4<S> q_can = can.rotation(i);
        const Mat3<S> R_can = rotation_from_quat(q_can);
        Mat3<S> QRcan_bar;
        if (no_deform) {
            QRcan_bar = Rt_bar;
        } else {
            Vec4<S> dq((*x_out)(0, i) + S(1), (*x_out)(1, i), (*x_out)(2, i), (*x_out)(3, i));
            const Mat3<S> R_delta = rotation_from_quat(dq);
            const Mat3<S> QRcan = Q * R_can;
            const Mat3<S> R_delta_bar = Rt_bar * QRcan.transpose();
            QRcan_bar = R_delta.transpose() * Rt_bar;
            const Vec4<S> dq_bar = rotation_from_quat_vjp(dq, R_delta_bar);
            for (int k = 0; k < 4; ++k) (*x_out_bar)(k, i) += dq_bar[k];
        }
        const Mat3<S> Q_bar = QRcan_bar * R_can.transpose();
        if (can_grads) {
            const Mat3<S> R_can_bar = Q.transpose() * QRcan_bar;
            const Vec4<S> q_can_bar = rotation_from_quat_vjp(q_can, R_can_bar);
            for (int k = 0; k < 4; ++k) can_grads->rotations[4 * i + k] += q_can_bar[k];
        }
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) blend_Q_bar[9 * i + 3 * r + c] = Q_bar(r, c);
    }
}

template <typename S>
PosedSplats<S> pose_splat(const SplatModel<S>& model, const Pose& pose, bool with_tape) {
    const GaussianSet<S>& can = model.canonical;
    const int64_t n = can.size();
    PosedSplats<S> posed;
    if (with_tape) posed.tape = std::make_unique<typename PosedSplats<S>::Tape>();

    const FkResult fk = forward_kinematics(*model.robot, pose, /*with_tape=*/true);
    BlendResult<S> blend = blend_points(model, fk, can.means.data(), n, /*with_polar=*/true,
                                        with_tape ? &posed.tape->blend : nullptr);

    posed.means = std::move(blend.positions);
    posed.blend_Q = std::move(blend.blend_Q);
    posed.blend_t = std::move(blend.blend_t);

    MatX<S> x_out;
    if (!model.config.no_deform) {
        const int enc_dim = model.config.encoding.out_dim(3);
        MatX<S> x_in(2 * enc_dim, n);
        for (int64_t i = 0; i < n; ++i) {
            fourier_encode(model.config.encoding, can.means.data() + 3 * i, 3, x_in.col(i).data());
            fourier_encode(model.config.encoding, posed.means.data() + 3 * i, 3,
                           x_in.col(i).data() + enc_dim);
        }
        typename Mlp<S>::Cache local;
        typename Mlp<S>::Cache& cache = with_tape ? posed.tape->x_cache : local;
        x_out = model.appearance_net.forward(x_in, &cache);
        if (with_tape) posed.tape->x_out = x_out;
    }
    apply_appearance(can, model.config.no_deform, model.config.no_deform ? nullptr : &x_out,
                     posed);
    return posed;
}

template <typename S>
PoseSplatGrads<S> pose_splat_backward(const SplatModel<S>& model, const PosedSplats<S>& posed,
                                      const RasterGrads<S>& rg) {
    require(posed.tape != nullptr, ErrorCode::NoTape, "pose_splat ran without a tape");
    const GaussianSet<S>& can = model.canonical;
    const int64_t n = can.size();
    const typename PosedSplats<S>::Tape& tape = *posed.tape;

    PoseSplatGrads<S> grads;
    grads.canonical.means.assign(3 * n, S(0));
    grads.canonical.rotations.assign(4 * n, S(0));
    grads.canonical.log_scales.assign(3 * n, S(0));
    grads.canonical.opacity_logits.assign(n, S(0));
    grads.canonical.sh.assign(kShCoeffs * n, S(0));

    const bool no_deform = model.config.no_deform;
    MatX<S> x_out_bar;
    if (!no_deform) x_out_bar = MatX<S>::Zero(kAppearanceOut, n);

    std::vector<S> blend_Q_bar;
    apply_appearance_backward(can, no_deform, no_deform ? nullptr : &tape.x_out, posed, rg,
                              no_deform ? nullptr : &x_out_bar, &grads.canonical, blend_Q_bar);

    // Appearance network backward; its input cotangent splits into the
    // canonical branch and the posed-position branch.
    std::vector<S> means_bar(rg.means.begin(), rg.means.end());
    grads.appearance.init_like(model.appearance_net);
    if (!no_deform) {
        MatX<S> x_in_bar = model.appearance_net.backward(tape.x_cache, x_out_bar, grads.appearance);
        const int enc_dim = model.config.encoding.out_dim(3);
        for (int64_t i = 0; i < n; ++i) {
            fourier_encode_vjp(model.config.encoding, can.means.data() + 3 * i, 3,
                               x_in_bar.col(i).data(), grads.canonical.means.data() + 3 * i);
            fourier_encode_vjp(model.config.encoding, posed.means.data() + 3 * i, 3,
                               x_in_bar.col(i).data() + enc_dim, means_bar.data() + 3 * i);
        }
    }

    BlendGrads<S> blend_grads =
        blend_points_backward(model, tape.blend, means_bar.data(), blend_Q_bar.data());
    grads.lbs = std::move(blend_grads.lbs);
    grads.pose = std::move(blend_grads.pose);
    for (int64_t k = 0; k < 3 * n; ++k) grads.canonical.means[k] += blend_grads.points[k];
    return grads;
}

#define RSPLAT_INSTANTIATE_DEFORM(S)                                                              \
    template struct SplatModel<S>;                                                                \
    template std::vector<Rigidd> relative_transforms<S>(const SplatModel<S>&, const FkResult&);   \
    template MatX<S> encode_points<S>(const FourierEncoding&, const S*, int64_t);                 \
    template MatX<S> softmax_columns<S>(const MatX<S>&);                                          \
    template MatX<S> softmax_columns_vjp<S>(const MatX<S>&, const MatX<S>&);                      \
    template MatX<S> lbs_weights<S>(const SplatModel<S>&, const S*, int64_t,                      \
                                    typename Mlp<S>::Cache*);                                     \
    template BlendResult<S> blend_apply<S>(const std::vector<Rigidd>&, const MatX<S>&, const S*,  \
                                           int64_t, bool, BlendApplyTape<S>*);                    \
    template void blend_apply_backward<S>(const std::vector<Rigidd>&, const MatX<S>&, const S*,   \
                                          const BlendApplyTape<S>&, const S*, const S*, MatX<S>&, \
                                          std::vector<RigidCot>&, S*);                            \
    template std::vector<RigidCot> rel_to_link_cotangents<S>(const SplatModel<S>&,                \
                                                             const std::vector<RigidCot>&);      \
    template BlendResult<S> blend_points<S>(const SplatModel<S>&, const FkResult&, const S*,      \
                                            int64_t, bool, BlendTape<S>*);                        \
    template BlendGrads<S> blend_points_backward<S>(const SplatModel<S>&, const BlendTape<S>&,    \
                                                    const S*, const S*);                          \
    template AppearanceDelta<S> appearance_delta<S>(const SplatModel<S>&, const Vec3<S>&,        \
                                                    const Vec3<S>&);                             \
    template void apply_appearance<S>(const GaussianSet<S>&, bool, const MatX<S>*,               \
                                      PosedSplats<S>&);                                          \
    template void apply_appearance_backward<S>(const GaussianSet<S>&, bool, const MatX<S>*,      \
                                               const PosedSplats<S>&, const RasterGrads<S>&,     \
                                               MatX<S>*, GaussianSetGrads<S>*,                   \
                                               std::vector<S>&);                                 \
    template PosedSplats<S> pose_splat<S>(const SplatModel<S>&, const Pose&, bool);               \
    template PoseSplatGrads<S> pose_splat_backward<S>(const SplatModel<S>&,                       \
                                                      const PosedSplats<S>&,                      \
                                                      const RasterGrads<S>&);

RSPLAT_INSTANTIATE_DEFORM(float)
RSPLAT_INSTANTIATE_DEFORM(double)

template SplatModel<float> SplatModel<float>::cast<float>() const;
template SplatModel<double> SplatModel<float>::cast<double>() const;
template SplatModel<float> SplatModel<double>::cast<float>() const;
template SplatModel<double> SplatModel<double>::cast<double>() const;

}  // namespace rsplat
