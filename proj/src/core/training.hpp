#pragma once

#include <functional>
#include <optional>

#include "deform.hpp"
#include "synthdata.hpp"

namespace rsplat {

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

template <typename S>
struct AdamState {
    std::vector<S> m, v;
    int64_t t = 0;

    void reset(size_t n) {
        m.assign(n, S(0));
        v.assign(n, S(0));
        t = 0;
    }
};

// Standard Adam with bias correction. Throws NonFiniteGradient on NaN/Inf
// gradients, ShapeMismatch when sizes disagree.
template <typename S>
void adam_step(std::span<S> params, std::span<const S> grads, AdamState<S>& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// 10 log10(1 / MSE) for [0,1] images; +infinity when the images match.
template <typename S>
double psnr(const Image<S>& a, const Image<S>& b);

// Symmetric mean squared nearest-neighbor distance between 3D point sets.
// Exact (grid-accelerated) and invariant to point order bit-for-bit.
double chamfer(std::span<const double> a, std::span<const double> b);
float chamfer(std::span<const float> a, std::span<const float> b);

// Chamfer plus dL/dA (sized like a); value as above.
template <typename S>
double chamfer_with_grad(std::span<const S> a, std::span<const S> b, std::vector<S>& grad_a);

// 2D variant used by track retargeting.
template <typename S>
double chamfer2d(std::span<const S> a, std::span<const S> b);
template <typename S>
double chamfer2d_with_grad(std::span<const S> a, std::span<const S> b, std::vector<S>& grad_a);

// ---------------------------------------------------------------------------
// Dataset access
// ---------------------------------------------------------------------------

template <typename S>
struct TrainDataset {
    std::string dir;
    DatasetManifest manifest;
    std::shared_ptr<const RobotModel> robot;
    std::vector<int> train_samples, test_samples;
    std::vector<int> canonical_samples;  // zero-pose views
    std::vector<int> train_poses;        // sample index of view 0 per distinct train pose

    static TrainDataset open(const std::string& dir);

    Image<S> load_image(int sample) const;
    std::vector<S> load_cloud(int sample) const;
    const Camera& camera_of(int sample) const {
        return manifest.cameras[manifest.samples[sample].camera];
    }
    Vec3<S> background() const {
        return Vec3<S>(S(manifest.meta.background[0]), S(manifest.meta.background[1]),
                       S(manifest.meta.background[2]));
    }
    BlobRobot<S> rebuild_blob() const;
};

// ---------------------------------------------------------------------------
// Training configuration and reports
// ---------------------------------------------------------------------------

struct TrainConfig {
    int canonical_steps = 2000;
    int lbs_steps = 1500;
    int joint_max_steps = 2500;
    int plateau_window = 500;
    double plateau_delta_db = 0.05;
    int eval_interval = 250;
    int batch_size = 1;  // cameras per step
    enum class ImageLoss { L1, MSE } image_loss = ImageLoss::L1;

    double lr_means = 1.6e-4;  // multiplied by scene extent
    double lr_rotations = 1e-3;
    double lr_scales = 5e-3;
    double lr_opacity = 5e-2;
    double lr_sh = 2.5e-3;
    double lr_mlp = 1e-3;

    int densify_interval = 400;
    double densify_grad_threshold = 0.02;  // mean |dL/d(pixel mean)| in pixels
    double densify_opacity_floor = 0.005;
    double densify_stop_fraction = 0.5;

    int64_t init_points = 1600;
    uint64_t init_seed = 23;
    double init_opacity = 0.5;

    int mlp_hidden = 256;
    int mlp_layers = 4;
    int fourier_bands = 6;
    bool no_deform = false;

    int lbs_pose_count = 64;
    int lbs_batch = 4;

    // Appearance-head warm start: before joint training, the head is fitted
    // to reproduce the canonical appearance (zero residuals, canonical SH)
    // across random poses, so the full model starts where the ablation does.
    int appearance_warmup_steps = 500;

    int validation_poses = 2;  // train poses reserved for the plateau monitor
    uint64_t seed = 7;
};

struct MetricsReport {
    double psnr_mean = 0.0;  // +inf when every image matches exactly
    double chamfer_mean = 0.0;
    std::vector<double> psnr_per_sample;
    std::vector<double> chamfer_per_pose;
    std::string to_json() const;
};

// Line-delimited JSON training log: {step, stage, loss, psnr?, n_gaussians}.
class TrainLogger {
  public:
    TrainLogger() = default;
    explicit TrainLogger(const std::string& path);
    void log(const std::string& stage, int64_t step, double loss,
             std::optional<double> psnr_db, int64_t n_gaussians,
             const std::string& extra = "");

  private:
    std::shared_ptr<std::ofstream> out_;
};

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

template <typename S>
SplatModel<S> make_initial_model(std::shared_ptr<const RobotModel> robot,
                                 const TrainConfig& config);

// Scene extent (bounding radius of the canonical Gaussians), used to scale
// the positional learning rate.
template <typename S>
double scene_extent(const GaussianSet<S>& set);

template <typename S>
double train_canonical(SplatModel<S>& model, const TrainDataset<S>& data,
                       const TrainConfig& config, TrainLogger& logger);

template <typename S>
double train_lbs(SplatModel<S>& model, const TrainDataset<S>& data, const TrainConfig& config,
                 TrainLogger& logger);

template <typename S>
struct JointResult {
    int64_t steps = 0;
    double best_validation_psnr = 0.0;
    bool plateaued = false;
};

template <typename S>
JointResult<S> train_joint(SplatModel<S>& model, const TrainDataset<S>& data,
                           const TrainConfig& config, TrainLogger& logger);

// Renders the model at every sample of the split and reports PSNR/Chamfer
// against the stored ground truth.
template <typename S>
MetricsReport evaluate_model(const SplatModel<S>& model, const TrainDataset<S>& data,
                             bool test_split);

// Retrieval baselines: nearest training sample by pose L2 distance (within
// the same camera for images) and a uniformly random training sample.
template <typename S>
MetricsReport evaluate_nn_baseline(const TrainDataset<S>& data, int pool_size, uint64_t seed);
template <typename S>
MetricsReport evaluate_random_baseline(const TrainDataset<S>& data, uint64_t seed);

// Runs all three stages and returns the test-split metrics.
template <typename S>
MetricsReport run_training(SplatModel<S>& model, const TrainDataset<S>& data,
                           const TrainConfig& config, TrainLogger& logger);

}  // namespace rsplat
