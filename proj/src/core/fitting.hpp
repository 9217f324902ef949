#pragma once

#include "bridge.hpp"
#include "checkpoint.hpp"
#include "training.hpp"

namespace rsplat {

struct FitOptions {
    int max_iters = 250;
    double lr_pose = 0.05;
    double lr_camera = 2e-3;
    double tol = 1e-12;            // converged when the loss drops below this
    double coarse_fraction = 0.3;  // fraction of iterations on 2x-downsampled loss
    bool optimize_camera = false;
    TrainConfig::ImageLoss loss = TrainConfig::ImageLoss::MSE;
};

template <typename S>
struct FitTarget {
    Image<S> image;
    Camera camera;
};

template <typename S>
struct FitProblem {
    std::vector<FitTarget<S>> targets;
    Pose initial_pose;
    FitOptions options;
};

// Frozen-model pose evaluation. Network parameters never change during
// fitting, so the skinning weights and the canonical halves of the
// appearance inputs are computed once; the backward pass only chains pose
// cotangents. One context serves one optimization loop (not thread-safe
// across loops).
template <typename S>
struct FrozenModel {
    const SplatModel<S>* model;
    MatX<S> weights;  // slots x N
    MatX<S> x_in;     // 2*enc x N, first half pre-filled
    int enc_dim = 0;

    explicit FrozenModel(const SplatModel<S>& m);

    struct Forward {
        FkResult fk;
        std::vector<Rigidd> rel;
        BlendApplyTape<S> blend_tape;
        typename Mlp<S>::Cache x_cache;
        MatX<S> x_out;
        PosedSplats<S> posed;
    };

    Forward forward(const Pose& pose);
    Pose backward(Forward& f, const RasterGrads<S>& rg) const;
};

struct FitResult {
    Pose pose;
    std::vector<Camera> cameras;
    double final_loss = 0.0;
    // Best-so-far loss per iteration: non-increasing, last entry == final_loss.
    std::vector<double> trace;
    bool converged = false;
    int64_t iterations = 0;
};

// Analysis-by-synthesis pose reconstruction: Adam on the pose (and camera
// extrinsics when requested) against a pixel loss; poses are clamped to
// joint limits after every step and the best iterate is returned.
template <typename S>
FitResult reconstruct_pose(const SplatModel<S>& model, const FitProblem<S>& problem);

// Video reconstruction: frame 0 from the problem's initial pose, later
// frames warm-started from the previous solution with a quarter of the
// iteration budget.
template <typename S>
std::vector<FitResult> reconstruct_sequence(const SplatModel<S>& model,
                                            const std::vector<Image<S>>& frames,
                                            const FitProblem<S>& problem_template);

// ---------------------------------------------------------------------------
// Track retargeting
// ---------------------------------------------------------------------------

struct TrackSet {
    int frames = 0;                // T
    int points = 0;                // K
    std::vector<int32_t> indices;  // Gaussian indices whose projections are tracked
    std::vector<double> coords;    // T*K*2 pixel coordinates
    std::vector<uint8_t> visible;  // T*K flags (empty means all visible)

    std::string to_json() const;
    static TrackSet from_json(const std::string& text);
};

template <typename S>
struct TrackProjection {
    std::vector<S> coords;         // K*2
    std::vector<uint8_t> on_screen;  // K flags
};

// Differentiable projection of selected posed Gaussian centers (the point
// "tracker" of the retargeting objective). Off-screen points are flagged and
// excluded from the loss.
template <typename S>
TrackProjection<S> project_track_points(const SplatModel<S>& model, const Pose& pose,
                                        const Camera& camera, std::span<const int32_t> indices);

// dL/dpose for a linear functional of the projected coordinates
// (coord_bar is K*2; off-screen points contribute nothing).
template <typename S>
Pose project_track_points_backward(const SplatModel<S>& model, const Pose& pose,
                                   const Camera& camera, std::span<const int32_t> indices,
                                   std::span<const S> coord_bar);

struct RetargetOptions {
    int max_iters = 300;
    double lr_pose = 0.05;
    double smoothness = 0.0;  // lambda on sum ||p_{t+1} - p_t||^2
    double tol = 1e-12;
};

struct RetargetResult {
    std::vector<Pose> poses;
    double final_loss = 0.0;
    std::vector<double> trace;  // best-so-far, non-increasing
    bool converged = false;
};

// Minimizes the per-frame 2D Chamfer distance between tracked targets and
// projected Gaussian centers over the whole pose sequence jointly.
template <typename S>
RetargetResult retarget(const SplatModel<S>& model, const TrackSet& tracks, const Camera& camera,
                        const std::vector<Pose>& initial_poses, const RetargetOptions& options);

// ---------------------------------------------------------------------------
// External objective via the gradient bridge
// ---------------------------------------------------------------------------

struct ExternalObjectiveOptions {
    int max_iters = 100;
    double lr_pose = 0.05;
    double tol = 1e-12;
};

// Render -> send image over the bridge -> receive (loss, cotangent) ->
// backpropagate to the pose. Identical update structure to reconstruct_pose,
// so a mean-squared-error scorer reproduces it exactly.
template <typename S>
FitResult optimize_external(const SplatModel<S>& model, const Camera& camera, const Pose& initial,
                            BridgeTransport& bridge, const ExternalObjectiveOptions& options);

}  // namespace rsplat
