#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "core/common.hpp"
#include "core/synthdata.hpp"

using namespace rsplat;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const RobotModel> arm() {
    static std::shared_ptr<const RobotModel> robot = [] {
        auto parsed = parse_urdf_file(std::string(RSPLAT_ASSET_DIR) + "/arm3.urdf");
        return std::make_shared<const RobotModel>(std::move(parsed.model));
    }();
    return robot;
}

}  // namespace

TEST_CASE("blob robot construction") {
    BlobOptions opt;
    opt.points = 3000;
    opt.seed = 2;
    const BlobRobot<double> blob = build_blob_robot<double>(arm(), opt);
    CHECK(blob.canonical.size() == 3000);
    // All four links contribute Gaussians.
    std::set<int> links(blob.canonical.source_link.begin(), blob.canonical.source_link.end());
    CHECK(links.size() == 4);

    // Same seed builds an identical blob.
    const BlobRobot<double> again = build_blob_robot<double>(arm(), opt);
    CHECK(again.canonical.means == blob.canonical.means);
    CHECK(again.canonical.sh == blob.canonical.sh);
}

TEST_CASE("sphere-only robot tags every Gaussian with link 0") {
    auto parsed = parse_urdf(R"(
<robot name="ball"><link name="b">
  <visual><geometry><sphere radius="0.2"/></geometry></visual>
</link></robot>)");
    auto robot = std::make_shared<const RobotModel>(std::move(parsed.model));
    BlobOptions opt;
    opt.points = 100;
    const BlobRobot<double> blob = build_blob_robot<double>(robot, opt);
    for (int32_t tag : blob.canonical.source_link) CHECK(tag == 0);
}

TEST_CASE("canonical pose leaves the cloud bitwise unchanged") {
    BlobOptions opt;
    opt.points = 500;
    const BlobRobot<double> blob = build_blob_robot<double>(arm(), opt);
    const std::vector<double> cloud = posed_blob_cloud(blob, Pose::Zero(3));
    CHECK(cloud == blob.canonical.means);
}

TEST_CASE("base rotation turns the whole arm rigidly") {
    BlobOptions opt;
    opt.points = 400;
    const BlobRobot<double> blob = build_blob_robot<double>(arm(), opt);
    Pose pose = Pose::Zero(3);
    pose[0] = M_PI / 2.0;  // base yaw about +z at the shoulder
    const std::vector<double> cloud = posed_blob_cloud(blob, pose);
    const FkResult fk0 = forward_kinematics(*blob.robot, Pose::Zero(3));
    const FkResult fk = forward_kinematics(*blob.robot, pose);
    for (int64_t i = 0; i < blob.canonical.size(); ++i) {
        const int link = blob.canonical.source_link[i];
        if (link == 0) continue;  // base link does not move
        const Rigidd rel = fk.link_world[link].compose(fk0.link_world[link].inverse());
        const Vec3d expected = rel.apply(blob.canonical.mean(i));
        const Vec3d got(cloud[3 * i], cloud[3 * i + 1], cloud[3 * i + 2]);
        CHECK((got - expected).norm() < 1e-12);
    }
}

TEST_CASE("rigid invariant: per-link pairwise distances preserved") {
    BlobOptions opt;
    opt.points = 300;
    const BlobRobot<double> blob = build_blob_robot<double>(arm(), opt);
    Rng rng(5);
    Pose pose(3);
    for (int d = 0; d < 3; ++d) pose[d] = rng.uniform(-1.0, 1.0);
    const std::vector<double> cloud = posed_blob_cloud(blob, pose);
    for (int64_t i = 1; i < blob.canonical.size(); ++i) {
        const int64_t j = i - 1;
        if (blob.canonical.source_link[i] != blob.canonical.source_link[j]) continue;
        const double before = (blob.canonical.mean(i) - blob.canonical.mean(j)).norm();
        const Vec3d pi(cloud[3 * i], cloud[3 * i + 1], cloud[3 * i + 2]);
        const Vec3d pj(cloud[3 * j], cloud[3 * j + 1], cloud[3 * j + 2]);
        CHECK(std::abs(before - (pi - pj).norm()) < 1e-9);
    }
}

TEST_CASE("oracle consistency: canonical render equals direct rasterization bitwise") {
    BlobOptions opt;
    opt.points = 400;
    const BlobRobot<float> blob = build_blob_robot<float>(arm(), opt);
    const std::vector<Camera> ring = make_camera_ring(blob, 4, 64);
    const Vec3<float> bg(0.0f, 0.0f, 0.0f);
    const GroundTruth<float> gt = render_ground_truth(blob, Pose::Zero(3), ring[1], bg);
    const Image<float> direct = rasterize<float>(ring[1], blob.canonical, bg, RasterConfig{});
    CHECK(gt.image.data == direct.data);
    CHECK(gt.cloud == blob.canonical.means);

    // Deterministic across repeated renders.
    const GroundTruth<float> gt2 = render_ground_truth(blob, Pose::Zero(3), ring[1], bg);
    CHECK(gt.image.data == gt2.image.data);
}

TEST_CASE("dataset generation, manifest round trip and splits") {
    const std::string dir = "/tmp/rsplat_dataset_test";
    fs::remove_all(dir);
    BlobOptions opt;
    opt.points = 200;
    const BlobRobot<float> blob = build_blob_robot<float>(arm(), opt);
    GenerateConfig cfg;
    cfg.poses = 20;
    cfg.views = 3;
    cfg.image_size = 32;
    cfg.blob = opt;
    cfg.robot_path = std::string(RSPLAT_ASSET_DIR) + "/arm3.urdf";
    const DatasetManifest manifest = generate_dataset(blob, cfg, dir);

    CHECK(manifest.samples.size() == 60);
    CHECK(manifest.cameras.size() == 3);

    // Split: round(0.1 * 20) = 2 test poses, disjoint from train.
    std::set<std::string> test_clouds, train_clouds;
    for (const DatasetSample& s : manifest.samples)
        (s.test ? test_clouds : train_clouds).insert(s.cloud);
    CHECK(test_clouds.size() == 2);
    for (const std::string& c : test_clouds) CHECK(!train_clouds.count(c));

    // Pose 0 is canonical and lands in the train split.
    CHECK(manifest.samples[0].pose.isZero());
    CHECK(!manifest.samples[0].test);

    // Poses respect the limits.
    Pose lo, hi;
    pose_bounds(*arm(), lo, hi);
    for (const DatasetSample& s : manifest.samples)
        for (int d = 0; d < 3; ++d) {
            CHECK(s.pose[d] >= lo[d]);
            CHECK(s.pose[d] <= hi[d]);
        }

    // Manifest write -> read -> write is byte-identical.
    const std::string first = manifest.to_json();
    const DatasetManifest reread = DatasetManifest::from_json(first);
    CHECK(reread.to_json() == first);

    // Stored image matches a fresh render bitwise via the raw sidecar.
    const DatasetSample& sample = manifest.samples[7];
    const Image<float> stored = read_raw_image<float>(dir + "/" + sample.image_raw);
    const GaussianSet<float> posed = posed_blob_gaussians(blob, sample.pose);
    const Image<float> fresh = rasterize<float>(manifest.cameras[sample.camera], posed,
                                                Vec3<float>::Zero(), RasterConfig{});
    CHECK(stored.data == fresh.data);

    // Cloud sidecar round trip.
    const std::vector<float> cloud = read_cloud(dir + "/" + sample.cloud);
    CHECK(cloud.size() == size_t(3) * 200);
    fs::remove_all(dir);
}

TEST_CASE("camera ring looks at the robot") {
    BlobOptions opt;
    opt.points = 150;
    const BlobRobot<double> blob = build_blob_robot<double>(arm(), opt);
    const std::vector<Camera> ring = make_camera_ring(blob, 12, 64);
    CHECK(ring.size() == 12);
    Vec3d centroid = Vec3d::Zero();
    for (int64_t i = 0; i < blob.canonical.size(); ++i) centroid += blob.canonical.mean(i);
    centroid /= double(blob.canonical.size());
    for (const Camera& cam : ring) {
        const Rigidd wc = cam.world_to_camera();
        const Vec3d in_cam = wc.apply(centroid);
        CHECK(in_cam.z() > 0.2);  // in front of the camera
        CHECK(std::abs(in_cam.x()) < 0.05);
        CHECK(std::abs(in_cam.y()) < 0.05);
    }
}
