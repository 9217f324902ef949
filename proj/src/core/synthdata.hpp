#pragma once

#include <string>

#include "deform.hpp"
#include "image.hpp"
#include "kinematics.hpp"

namespace rsplat {

// Synthetic ground-truth oracle: a robot whose links carry rigidly attached
// Gaussians with known skinning labels. Training images, posed point clouds
// and skinning supervision all come from this object, rendered by the same
// rasterizer the model uses.
template <typename S>
struct BlobRobot {
    std::shared_ptr<const RobotModel> robot;
    GaussianSet<S> canonical;  // world frame at the zero pose, source_link tagged

    template <typename T>
    BlobRobot<T> cast() const {
        return BlobRobot<T>{robot, canonical.template cast<T>()};
    }
};

struct BlobOptions {
    int64_t points = 1500;
    uint64_t seed = 11;
    double opacity = 0.9;
    double scale_factor = 0.7;  // Gaussian radius as a fraction of point spacing
};

template <typename S>
BlobRobot<S> build_blob_robot(std::shared_ptr<const RobotModel> robot, const BlobOptions& options);

// Rigid one-hot skinning: every Gaussian moves exactly with its source link.
template <typename S>
std::vector<S> posed_blob_cloud(const BlobRobot<S>& blob, const Pose& pose);

template <typename S>
GaussianSet<S> posed_blob_gaussians(const BlobRobot<S>& blob, const Pose& pose);

template <typename S>
struct GroundTruth {
    Image<S> image;
    std::vector<S> cloud;  // 3N posed means
};

template <typename S>
GroundTruth<S> render_ground_truth(const BlobRobot<S>& blob, const Pose& pose,
                                   const Camera& camera, const Vec3<S>& background,
                                   const RasterConfig& config = {});

// ---------------------------------------------------------------------------
// Dataset on disk: manifest (JSON) + per-sample PNG, raw float image and one
// point cloud per pose (views share the pose cloud).
// ---------------------------------------------------------------------------

struct DatasetSample {
    Pose pose;
    int camera = 0;
    std::string image_png;
    std::string image_raw;
    std::string cloud;
    bool test = false;
};

struct DatasetGeneratorMeta {
    int64_t blob_points = 1500;
    uint64_t blob_seed = 11;
    double blob_opacity = 0.9;
    double blob_scale_factor = 0.7;
    double background[3] = {0.0, 0.0, 0.0};
};

struct DatasetManifest {
    std::string robot_path;
    DatasetGeneratorMeta meta;
    std::vector<Camera> cameras;
    std::vector<DatasetSample> samples;

    std::string to_json() const;
    static DatasetManifest from_json(const std::string& text);

    // Checks that every referenced file exists and poses are within limits.
    void validate(const std::string& base_dir, const RobotModel& robot) const;
};

struct GenerateConfig {
    int poses = 200;
    int views = 12;
    int image_size = 128;
    uint64_t seed = 7;
    BlobOptions blob;
    double background[3] = {0.0, 0.0, 0.0};
    std::string robot_path;  // recorded in the manifest
};

// Writes images, clouds and the manifest under out_dir; pose 0 is the
// canonical (zero) pose so the canonical training stage always has views.
// The split holds round(0.1 * poses) test poses, disjoint from training.
template <typename S>
DatasetManifest generate_dataset(const BlobRobot<S>& blob, const GenerateConfig& config,
                                 const std::string& out_dir);

// Raw point cloud format: "DRPC", u32 count, then count*3 float32.
void write_cloud(const std::string& path, const std::vector<float>& xyz);
std::vector<float> read_cloud(const std::string& path);

DatasetManifest load_manifest(const std::string& dataset_dir);
void save_manifest(const DatasetManifest& manifest, const std::string& dataset_dir);

Camera camera_from_json_text(const std::string& text);
std::string camera_to_json_text(const Camera& camera);

// Camera ring for data generation: stratified azimuth/elevation on a sphere
// of radius ~2x the blob bounding radius, looking at the centroid.
template <typename S>
std::vector<Camera> make_camera_ring(const BlobRobot<S>& blob, int views, int image_size);

}  // namespace rsplat
