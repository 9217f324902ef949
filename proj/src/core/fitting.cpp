#include "fitting.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

namespace rsplat {

namespace {

// Adjoint of Image::half(): distribute each coarse cotangent back to the
// contributing full-resolution pixels.
template <typename S>
Image<S> upsample_cotangent(const Image<S>& coarse, int width, int height) {
    Image<S> out(width, height);
    for (int y = 0; y < coarse.height; ++y) {
        for (int x = 0; x < coarse.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const S v = coarse.px(y, x)[c] / S(4);
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        out.px(std::min(height - 1, 2 * y + dy),
                               std::min(width - 1, 2 * x + dx))[c] += v;
            }
        }
    }
    return out;
}

template <typename S>
double pixel_loss(TrainConfig::ImageLoss kind, const Image<S>& render, const Image<S>& target,
                  Image<S>& cotangent) {
    cotangent = Image<S>(render.width, render.height);
    const double inv_n = 1.0 / double(render.data.size());
    double loss = 0.0;
    for (size_t i = 0; i < render.data.size(); ++i) {
        const double d = double(render.data[i]) - double(target.data[i]);
        if (kind == TrainConfig::ImageLoss::L1) {
            loss += std::abs(d) * inv_n;
            cotangent.data[i] = S((d > 0.0) - (d < 0.0)) * S(inv_n);
        } else {
            loss += d * d * inv_n;
            cotangent.data[i] = S(2.0 * d * inv_n);
        }
    }
    return loss;
}

}  // namespace

template <typename S>
FrozenModel<S>::FrozenModel(const SplatModel<S>& m) : model(&m) {
    const GaussianSet<S>& can = m.canonical;
    weights = lbs_weights(m, can.means.data(), can.size());
    enc_dim = m.config.encoding.out_dim(3);
    if (!m.config.no_deform) {
        x_in.resize(2 * enc_dim, can.size());
        for (int64_t i = 0; i < can.size(); ++i)
            fourier_encode(m.config.encoding, can.means.data() + 3 * i, 3, x_in.col(i).data());
    }
}

template <typename S>
typename FrozenModel<S>::Forward FrozenModel<S>::forward(const Pose& pose) {
    const GaussianSet<S>& can = model->canonical;
    const int64_t n = can.size();
    Forward f;
    f.fk = forward_kinematics(*model->robot, pose, /*with_tape=*/true);
    f.rel = relative_transforms(*model, f.fk);
    BlendResult<S> blend =
        blend_apply(f.rel, weights, can.means.data(), n, /*with_polar=*/true, &f.blend_tape);
    f.posed.means = std::move(blend.positions);
    f.posed.blend_Q = std::move(blend.blend_Q);
    f.posed.blend_t = std::move(blend.blend_t);
    if (!model->config.no_deform) {
        for (int64_t i = 0; i < n; ++i)
            fourier_encode(model->config.encoding, f.posed.means.data() + 3 * i, 3,
                           x_in.col(i).data() + enc_dim);
        f.x_out = model->appearance_net.forward(x_in, &f.x_cache);
    }
    apply_appearance(can, model->config.no_deform,
                     model->config.no_deform ? nullptr : &f.x_out, f.posed);
    return f;
}

template <typename S>
Pose FrozenModel<S>::backward(Forward& f, const RasterGrads<S>& rg) const {
    const GaussianSet<S>& can = model->canonical;
    const int64_t n = can.size();
    const bool no_deform = model->config.no_deform;

    MatX<S> x_out_bar;
    if (!no_deform) x_out_bar = MatX<S>::Zero(kAppearanceOut, n);
    std::vector<S> blend_Q_bar;
    apply_appearance_backward(can, no_deform, no_deform ? nullptr : &f.x_out, f.posed, rg,
                              no_deform ? nullptr : &x_out_bar, (GaussianSetGrads<S>*)nullptr,
                              blend_Q_bar);

    std::vector<S> means_bar(rg.means.begin(), rg.means.end());
    if (!no_deform) {
        const MatX<S> x_in_bar = model->appearance_net.backward_input(f.x_cache, x_out_bar);
        for (int64_t i = 0; i < n; ++i)
            fourier_encode_vjp(model->config.encoding, f.posed.means.data() + 3 * i, 3,
                               x_in_bar.col(i).data() + enc_dim, means_bar.data() + 3 * i);
    }

    const int L = model->robot->num_links();
    MatX<S> weights_bar_sink = MatX<S>::Zero(L, n);
    std::vector<RigidCot> rel_bar(L);
    blend_apply_backward(f.rel, weights, can.means.data(), f.blend_tape, means_bar.data(),
                         blend_Q_bar.data(), weights_bar_sink, rel_bar, (S*)nullptr);
    return fk_backward(*model->robot, f.fk, rel_to_link_cotangents(*model, rel_bar));
}

template struct FrozenModel<float>;
template struct FrozenModel<double>;


namespace {

// One scorer per target: image in, (loss, full-resolution cotangent, stop).
template <typename S>
struct ScoreResult {
    double loss = 0.0;
    Image<S> cotangent;
    bool stop = false;
};

template <typename S>
using Scorer = std::function<ScoreResult<S>(const Image<S>&, int64_t iter)>;

// Shared analysis-by-synthesis driver. The loss/trace/convergence handling is
// identical for photometric targets and bridge scorers, which is what makes
// the MSE-scorer equivalence exact.
template <typename S>
FitResult optimize_pose_driver(const SplatModel<S>& model, std::vector<Camera> cameras,
                               const Pose& initial, const std::vector<Scorer<S>>& scorers,
                               int max_iters, double lr_pose, double lr_camera, double tol,
                               bool optimize_camera) {
    require(!scorers.empty() && scorers.size() == cameras.size(), ErrorCode::EmptyInput,
            "need at least one target");
    require(initial.size() == model.robot->dof, ErrorCode::PoseLengthMismatch,
            "initial pose length != dof");

    FitResult result;
    Pose pose = clamp_to_limits(*model.robot, initial);
    AdamState<double> pose_state;
    std::vector<AdamState<double>> camera_states(cameras.size());

    Pose best_pose = pose;
    std::vector<Camera> best_cameras = cameras;
    double best_loss = std::numeric_limits<double>::infinity();
    bool stop_requested = false;
    const RasterConfig raster_cfg;
    FrozenModel<S> frozen(model);

    for (int64_t iter = 0; iter < max_iters; ++iter) {
        typename FrozenModel<S>::Forward fwd = frozen.forward(pose);
        const PosedSplats<S>& posed = fwd.posed;
        double loss = 0.0;
        RasterGrads<S> acc;
        acc.init(posed.size());
        std::vector<CameraCot> camera_grads(cameras.size());
        for (size_t t = 0; t < scorers.size(); ++t) {
            RenderAux<S> aux;
            const Vec3<S> black = Vec3<S>::Zero();
            const Image<S> img = render<S>(cameras[t], posed.view(), black, raster_cfg, &aux);
            ScoreResult<S> score = scorers[t](img, iter);
            loss += score.loss / double(scorers.size());
            if (score.stop) stop_requested = true;
            Image<S>& cot = score.cotangent;
            if (scorers.size() > 1)
                for (S& v : cot.data) v /= S(scorers.size());
            RasterGrads<S> rg = render_backward(cameras[t], posed.view(), aux, cot, raster_cfg);
            for (size_t k = 0; k < acc.means.size(); ++k) acc.means[k] += rg.means[k];
            for (size_t k = 0; k < acc.rot_mats.size(); ++k) acc.rot_mats[k] += rg.rot_mats[k];
            for (size_t k = 0; k < acc.log_scales.size(); ++k)
                acc.log_scales[k] += rg.log_scales[k];
            for (size_t k = 0; k < acc.opacity_logits.size(); ++k)
                acc.opacity_logits[k] += rg.opacity_logits[k];
            for (size_t k = 0; k < acc.sh.size(); ++k) acc.sh[k] += rg.sh[k];
            camera_grads[t] = rg.camera;
        }
        require(std::isfinite(loss), ErrorCode::DivergedNonFinite, "fit loss became non-finite");

        if (loss < best_loss) {
            best_loss = loss;
            best_pose = pose;
            best_cameras = cameras;
        }
        result.trace.push_back(best_loss);
        result.iterations = iter + 1;
        if (best_loss < tol) {
            result.converged = true;
            break;
        }
        if (stop_requested) break;

        const Pose pose_grad = frozen.backward(fwd, acc);
        adam_step<double>(std::span<double>(pose.data(), pose.size()),
                          std::span<const double>(pose_grad.data(), pose_grad.size()), pose_state,
                          lr_pose);
        pose = clamp_to_limits(*model.robot, pose);
        if (optimize_camera) {
            for (size_t t = 0; t < cameras.size(); ++t) {
                double params[6] = {cameras[t].axis_angle.x(),  cameras[t].axis_angle.y(),
                                    cameras[t].axis_angle.z(),  cameras[t].translation.x(),
                                    cameras[t].translation.y(), cameras[t].translation.z()};
                const double grads[6] = {
                    camera_grads[t].axis_angle.x(),  camera_grads[t].axis_angle.y(),
                    camera_grads[t].axis_angle.z(),  camera_grads[t].translation.x(),
                    camera_grads[t].translation.y(), camera_grads[t].translation.z()};
                adam_step<double>(std::span<double>(params, 6), std::span<const double>(grads, 6),
                                  camera_states[t], lr_camera);
                cameras[t].axis_angle = Vec3d(params[0], params[1], params[2]);
                cameras[t].translation = Vec3d(params[3], params[4], params[5]);
            }
        }
    }

    result.pose = best_pose;
    result.cameras = best_cameras;
    result.final_loss = result.trace.empty() ? 0.0 : result.trace.back();
    return result;
}

}  // namespace

template <typename S>
FitResult reconstruct_pose(const SplatModel<S>& model, const FitProblem<S>& problem) {
    require(!problem.targets.empty(), ErrorCode::EmptyInput, "no fit targets");
    const FitOptions& opt = problem.options;
    const int64_t coarse_until = int64_t(opt.coarse_fraction * problem.options.max_iters);

    std::vector<Camera> cameras;
    std::vector<Scorer<S>> scorers;
    for (const FitTarget<S>& target : problem.targets) {
        cameras.push_back(target.camera);
        const Image<S>& full = target.image;
        const Image<S> coarse = full.half();
        scorers.push_back([&, coarse](const Image<S>& img, int64_t iter) {
            ScoreResult<S> score;
            if (iter < coarse_until) {
                const Image<S> img_coarse = img.half();
                Image<S> cot_coarse;
                score.loss = pixel_loss(opt.loss, img_coarse, coarse, cot_coarse);
                score.cotangent = upsample_cotangent(cot_coarse, img.width, img.height);
            } else {
                score.loss = pixel_loss(opt.loss, img, full, score.cotangent);
            }
            return score;
        });
    }
    return optimize_pose_driver(model, std::move(cameras), problem.initial_pose, scorers,
                                opt.max_iters, opt.lr_pose, opt.lr_camera, opt.tol,
                                opt.optimize_camera);
}

template <typename S>
std::vector<FitResult> reconstruct_sequence(const SplatModel<S>& model,
                                            const std::vector<Image<S>>& frames,
                                            const FitProblem<S>& problem_template) {
    require(!frames.empty(), ErrorCode::EmptyInput, "no frames to reconstruct");
    require(problem_template.targets.size() == 1, ErrorCode::ConfigError,
            "sequence reconstruction expects a single-view template");
    std::vector<FitResult> results;
    FitProblem<S> problem = problem_template;
    for (size_t f = 0; f < frames.size(); ++f) {
        problem.targets[0].image = frames[f];
        if (f > 0) {
            problem.initial_pose = results.back().pose;
            problem.targets[0].camera = results.back().cameras[0];
            problem.options.max_iters = std::max(1, problem_template.options.max_iters / 4);
            problem.options.coarse_fraction = 0.0;  // warm starts are already in the basin
        }
        results.push_back(reconstruct_pose(model, problem));
    }
    return results;
}

// ---------------------------------------------------------------------------
// Track retargeting
// ---------------------------------------------------------------------------

std::string TrackSet::to_json() const {
    nlohmann::ordered_json j;
    j["frames"] = frames;
    j["points"] = points;
    j["indices"] = indices;
    j["coords"] = coords;
    if (!visible.empty()) {
        std::vector<int> vis(visible.begin(), visible.end());
        j["visible"] = vis;
    }
    return j.dump(2) + "\n";
}

TrackSet TrackSet::from_json(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorCode::IoFailure, std::string("track set is not valid JSON: ") + e.what());
    }
    TrackSet t;
    t.frames = j.at("frames").get<int>();
    t.points = j.at("points").get<int>();
    t.indices = j.at("indices").get<std::vector<int32_t>>();
    t.coords = j.at("coords").get<std::vector<double>>();
    require(t.frames >= 1 && t.points >= 1, ErrorCode::EmptyInput, "track set is empty");
    require(int(t.indices.size()) == t.points, ErrorCode::ShapeMismatch,
            "track indices do not match point count");
    require(int(t.coords.size()) == t.frames * t.points * 2, ErrorCode::ShapeMismatch,
            "track coords do not match frames x points x 2");
    if (j.contains("visible")) {
        const auto vis = j.at("visible").get<std::vector<int>>();
        require(int(vis.size()) == t.frames * t.points, ErrorCode::ShapeMismatch,
                "track visibility mask shape mismatch");
        t.visible.assign(vis.begin(), vis.end());
    }
    return t;
}

template <typename S>
TrackProjection<S> project_track_points(const SplatModel<S>& model, const Pose& pose,
                                        const Camera& camera, std::span<const int32_t> indices) {
    for (int32_t idx : indices)
        require(idx >= 0 && idx < model.canonical.size(), ErrorCode::IndexOutOfRange,
                "track index out of range");
    const FkResult fk = forward_kinematics(*model.robot, pose);
    const BlendResult<S> blent = blend_points<S>(
        model, fk, model.canonical.means.data(), model.canonical.size(), false, nullptr);
    const Rigidd wc = camera.world_to_camera();
    const Mat3<S> R = wc.R.template cast<S>();
    const Vec3<S> t = wc.t.template cast<S>();

    TrackProjection<S> proj;
    proj.coords.assign(indices.size() * 2, S(0));
    proj.on_screen.assign(indices.size(), 0);
    for (size_t k = 0; k < indices.size(); ++k) {
        const int32_t i = indices[k];
        const Vec3<S> m(blent.positions[3 * i], blent.positions[3 * i + 1],
                        blent.positions[3 * i + 2]);
        const Vec3<S> xc = R * m + t;
        if (!(xc.z() > S(0.01))) continue;
        const S inv_z = S(1) / xc.z();
        const S u = S(camera.fx) * xc.x() * inv_z + S(camera.cx);
        const S v = S(camera.fy) * xc.y() * inv_z + S(camera.cy);
        proj.coords[2 * k] = u;
        proj.coords[2 * k + 1] = v;
        proj.on_screen[k] =
            (u >= S(0) && u <= S(camera.width) && v >= S(0) && v <= S(camera.height)) ? 1 : 0;
    }
    return proj;
}

namespace {

// Projection of tracked centers with a backward path to the pose.
template <typename S>
struct TrackFrame {
    FkResult fk;
    std::vector<Rigidd> rel;
    BlendApplyTape<S> tape;
    TrackProjection<S> projection;
    std::vector<Vec3<S>> cam_means;  // camera-space means of tracked points
};

template <typename S>
TrackFrame<S> project_frame(const SplatModel<S>& model, const MatX<S>& weights, const Pose& pose,
                            const Camera& camera, std::span<const int32_t> indices) {
    TrackFrame<S> frame;
    frame.fk = forward_kinematics(*model.robot, pose, true);
    frame.rel = relative_transforms(model, frame.fk);
    const BlendResult<S> blent =
        blend_apply(frame.rel, weights, model.canonical.means.data(), model.canonical.size(),
                    false, &frame.tape);
    const Rigidd wc = camera.world_to_camera();
    const Mat3<S> R = wc.R.template cast<S>();
    const Vec3<S> t = wc.t.template cast<S>();
    frame.projection.coords.assign(indices.size() * 2, S(0));
    frame.projection.on_screen.assign(indices.size(), 0);
    frame.cam_means.resize(indices.size());
    for (size_t k = 0; k < indices.size(); ++k) {
        const int32_t i = indices[k];
        const Vec3<S> m(blent.positions[3 * i], blent.positions[3 * i + 1],
                        blent.positions[3 * i + 2]);
        const Vec3<S> xc = R * m + t;
        frame.cam_means[k] = xc;
        if (!(xc.z() > S(0.01))) continue;
        const S inv_z = S(1) / xc.z();
        const S u = S(camera.fx) * xc.x() * inv_z + S(camera.cx);
        const S v = S(camera.fy) * xc.y() * inv_z + S(camera.cy);
        frame.projection.coords[2 * k] = u;
        frame.projection.coords[2 * k + 1] = v;
        frame.projection.on_screen[k] =
            (u >= S(0) && u <= S(camera.width) && v >= S(0) && v <= S(camera.height)) ? 1 : 0;
    }
    return frame;
}

template <typename S>
Pose frame_backward(const SplatModel<S>& model, const MatX<S>& weights, const Camera& camera,
                    TrackFrame<S>& frame, std::span<const int32_t> indices,
                    const std::vector<S>& coord_bar) {
    std::vector<S> positions_bar(3 * model.canonical.size(), S(0));
    const Rigidd wc = camera.world_to_camera();
    const Mat3<S> R = wc.R.template cast<S>();
    for (size_t k = 0; k < indices.size(); ++k) {
        if (!frame.projection.on_screen[k]) continue;
        const Vec3<S>& xc = frame.cam_means[k];
        const S inv_z = S(1) / xc.z();
        Vec3<S> xc_bar = Vec3<S>::Zero();
        const S u_bar = coord_bar[2 * k], v_bar = coord_bar[2 * k + 1];
        xc_bar.x() += u_bar * S(camera.fx) * inv_z;
        xc_bar.z() -= u_bar * S(camera.fx) * xc.x() * inv_z * inv_z;
        xc_bar.y() += v_bar * S(camera.fy) * inv_z;
        xc_bar.z() -= v_bar * S(camera.fy) * xc.y() * inv_z * inv_z;
        const Vec3<S> m_bar = R.transpose() * xc_bar;
        const int32_t i = indices[k];
        for (int d = 0; d < 3; ++d) positions_bar[3 * i + d] += m_bar[d];
    }
    const int L = model.robot->num_links();
    MatX<S> weights_bar_sink = MatX<S>::Zero(L, model.canonical.size());
    std::vector<RigidCot> rel_bar(L);
    blend_apply_backward(frame.rel, weights, model.canonical.means.data(), frame.tape,
                         positions_bar.data(), (const S*)nullptr, weights_bar_sink, rel_bar,
                         (S*)nullptr);
    return fk_backward(*model.robot, frame.fk, rel_to_link_cotangents(model, rel_bar));
}

}  // namespace

template <typename S>
Pose project_track_points_backward(const SplatModel<S>& model, const Pose& pose,
                                   const Camera& camera, std::span<const int32_t> indices,
                                   std::span<const S> coord_bar) {
    require(coord_bar.size() == indices.size() * 2, ErrorCode::ShapeMismatch,
            "coordinate cotangent size mismatch");
    const MatX<S> weights =
        lbs_weights(model, model.canonical.means.data(), model.canonical.size());
    TrackFrame<S> frame = project_frame(model, weights, pose, camera, indices);
    std::vector<S> bar(coord_bar.begin(), coord_bar.end());
    return frame_backward(model, weights, camera, frame, indices, bar);
}

template <typename S>
RetargetResult retarget(const SplatModel<S>& model, const TrackSet& tracks, const Camera& camera,
                        const std::vector<Pose>& initial_poses, const RetargetOptions& options) {
    require(tracks.frames >= 1 && tracks.points >= 1, ErrorCode::EmptyInput, "empty track set");
    require(int(initial_poses.size()) == tracks.frames, ErrorCode::ShapeMismatch,
            "initial pose count != frame count");
    const int T = tracks.frames;
    const int K = tracks.points;
    const int dof = model.robot->dof;
    std::span<const int32_t> indices(tracks.indices);

    std::vector<Pose> poses;
    for (const Pose& p : initial_poses) poses.push_back(clamp_to_limits(*model.robot, p));
    const MatX<S> frozen_weights =
        lbs_weights(model, model.canonical.means.data(), model.canonical.size());

    // Flatten pose sequence for Adam.
    std::vector<double> flat(size_t(T) * dof);
    auto sync_flat = [&]() {
        for (int t = 0; t < T; ++t)
            for (int d = 0; d < dof; ++d) flat[size_t(t) * dof + d] = poses[t][d];
    };
    sync_flat();
    AdamState<double> state;

    RetargetResult result;
    std::vector<Pose> best = poses;
    double best_loss = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < options.max_iters; ++iter) {
        double loss = 0.0;
        std::vector<double> grad(flat.size(), 0.0);
        for (int t = 0; t < T; ++t) {
            TrackFrame<S> frame = project_frame(model, frozen_weights, poses[t], camera, indices);

            // Visible targets and on-screen projections enter the Chamfer.
            std::vector<S> target_pts, proj_pts;
            std::vector<int> proj_slot;
            for (int k = 0; k < K; ++k) {
                const bool target_vis =
                    tracks.visible.empty() || tracks.visible[size_t(t) * K + k];
                if (target_vis) {
                    target_pts.push_back(S(tracks.coords[(size_t(t) * K + k) * 2]));
                    target_pts.push_back(S(tracks.coords[(size_t(t) * K + k) * 2 + 1]));
                }
                if (frame.projection.on_screen[k]) {
                    proj_pts.push_back(frame.projection.coords[2 * k]);
                    proj_pts.push_back(frame.projection.coords[2 * k + 1]);
                    proj_slot.push_back(k);
                }
            }
            if (target_pts.empty() || proj_pts.empty()) continue;
            std::vector<S> grad_proj;
            loss += chamfer2d_with_grad<S>(proj_pts, target_pts, grad_proj);

            std::vector<S> coord_bar(size_t(K) * 2, S(0));
            for (size_t s = 0; s < proj_slot.size(); ++s) {
                coord_bar[2 * proj_slot[s]] = grad_proj[2 * s];
                coord_bar[2 * proj_slot[s] + 1] = grad_proj[2 * s + 1];
            }
            const Pose pg = frame_backward(model, frozen_weights, camera, frame, indices,
                                           coord_bar);
            for (int d = 0; d < dof; ++d) grad[size_t(t) * dof + d] += pg[d];
        }
        // Smoothness regularizer.
        if (options.smoothness > 0.0) {
            for (int t = 0; t + 1 < T; ++t) {
                const Pose diff = poses[t + 1] - poses[t];
                loss += options.smoothness * diff.squaredNorm();
                for (int d = 0; d < dof; ++d) {
                    grad[size_t(t + 1) * dof + d] += 2.0 * options.smoothness * diff[d];
                    grad[size_t(t) * dof + d] -= 2.0 * options.smoothness * diff[d];
                }
            }
        }
        require(std::isfinite(loss), ErrorCode::DivergedNonFinite, "retarget loss non-finite");
        if (loss < best_loss) {
            best_loss = loss;
            best = poses;
        }
        result.trace.push_back(best_loss);
        if (best_loss < options.tol) {
            result.converged = true;
            break;
        }

        adam_step<double>(std::span<double>(flat), std::span<const double>(grad), state,
                          options.lr_pose);
        for (int t = 0; t < T; ++t) {
            for (int d = 0; d < dof; ++d) poses[t][d] = flat[size_t(t) * dof + d];
            poses[t] = clamp_to_limits(*model.robot, poses[t]);
        }
        sync_flat();
    }
    result.poses = std::move(best);
    result.final_loss = result.trace.empty() ? 0.0 : result.trace.back();
    return result;
}

// ---------------------------------------------------------------------------
// External objective
// ---------------------------------------------------------------------------

template <typename S>
FitResult optimize_external(const SplatModel<S>& model, const Camera& camera, const Pose& initial,
                            BridgeTransport& bridge, const ExternalObjectiveOptions& options) {
    std::vector<Scorer<S>> scorers;
    scorers.push_back([&bridge](const Image<S>& img, int64_t) {
        ScoreResult<S> score;
        bridge_send_image(bridge, img);
        BridgeResponse resp = bridge_receive(bridge, img.width, img.height);
        score.loss = resp.loss;
        score.stop = resp.stop;
        score.cotangent = Image<S>(img.width, img.height);
        for (size_t i = 0; i < resp.cotangent.size(); ++i)
            score.cotangent.data[i] = S(resp.cotangent[i]);
        return score;
    });
    return optimize_pose_driver(model, {camera}, initial, scorers, options.max_iters,
                                options.lr_pose, 0.0, options.tol, false);
}

#define RSPLAT_INSTANTIATE_FITTING(S)                                                          \
    template FitResult reconstruct_pose<S>(const SplatModel<S>&, const FitProblem<S>&);        \
    template std::vector<FitResult> reconstruct_sequence<S>(                                   \
        const SplatModel<S>&, const std::vector<Image<S>>&, const FitProblem<S>&);             \
    template TrackProjection<S> project_track_points<S>(const SplatModel<S>&, const Pose&,     \
                                                        const Camera&,                        \
                                                        std::span<const int32_t>);            \
    template Pose project_track_points_backward<S>(const SplatModel<S>&, const Pose&,          \
                                                   const Camera&, std::span<const int32_t>,    \
                                                   std::span<const S>);                        \
    template RetargetResult retarget<S>(const SplatModel<S>&, const TrackSet&, const Camera&,  \
                                        const std::vector<Pose>&, const RetargetOptions&);     \
    template FitResult optimize_external<S>(const SplatModel<S>&, const Camera&, const Pose&,  \
                                            BridgeTransport&, const ExternalObjectiveOptions&);

RSPLAT_INSTANTIATE_FITTING(float)
RSPLAT_INSTANTIATE_FITTING(double)

}  // namespace rsplat
