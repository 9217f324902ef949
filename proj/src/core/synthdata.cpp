#include "synthdata.hpp"

#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <sstream>

#include "binio.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace rsplat {

template <typename S>
BlobRobot<S> build_blob_robot(std::shared_ptr<const RobotModel> robot,
                              const BlobOptions& options) {
    std::vector<SurfacePoint> points = sample_surface_points(*robot, options.points, options.seed);

    // Place link-local samples into the world frame at the canonical pose.
    const FkResult fk0 = forward_kinematics(*robot, Pose::Zero(robot->dof));
    double total_area = 0.0;
    for (const Link& link : robot->links)
        for (const Visual& vis : link.visuals) total_area += vis.primitive.surface_area();
    for (SurfacePoint& p : points) p.position = fk0.link_world[p.link].apply(p.position);

    // Scale from mean point spacing so neighboring Gaussians overlap a bit.
    const double spacing = std::sqrt(total_area / double(options.points));
    const double base_scale = std::max(1e-4, options.scale_factor * spacing);

    BlobRobot<S> blob;
    blob.robot = std::move(robot);
    blob.canonical = init_from_points<S>(points, base_scale, options.opacity);
    return blob;
}

template <typename S>
std::vector<S> posed_blob_cloud(const BlobRobot<S>& blob, const Pose& pose) {
    const FkResult fk = forward_kinematics(*blob.robot, pose);
    const int L = blob.robot->num_links();
    std::vector<Mat3<S>> rel_R(L);
    std::vector<Vec3<S>> rel_t(L);
    const FkResult fk0 = forward_kinematics(*blob.robot, Pose::Zero(blob.robot->dof));
    for (int l = 0; l < L; ++l) {
        const Rigidd rel = same_transform(fk.link_world[l], fk0.link_world[l])
                               ? Rigidd::identity()
                               : fk.link_world[l].compose(fk0.link_world[l].inverse());
        rel_R[l] = rel.R.template cast<S>();
        rel_t[l] = rel.t.template cast<S>();
    }
    const int64_t n = blob.canonical.size();
    std::vector<S> cloud(3 * n);
    for (int64_t i = 0; i < n; ++i) {
        const int l = blob.canonical.source_link[i];
        const Vec3<S> p = rel_R[l] * blob.canonical.mean(i) + rel_t[l];
        for (int k = 0; k < 3; ++k) cloud[3 * i + k] = p[k];
    }
    return cloud;
}

template <typename S>
GaussianSet<S> posed_blob_gaussians(const BlobRobot<S>& blob, const Pose& pose) {
    GaussianSet<S> posed = blob.canonical;
    posed.means = posed_blob_cloud(blob, pose);
    const FkResult fk = forward_kinematics(*blob.robot, pose);
    const FkResult fk0 = forward_kinematics(*blob.robot, Pose::Zero(blob.robot->dof));
    const int L = blob.robot->num_links();
    std::vector<Vec4<S>> q_rel(L);
    std::vector<bool> moved(L);
    for (int l = 0; l < L; ++l) {
        moved[l] = !same_transform(fk.link_world[l], fk0.link_world[l]);
        q_rel[l] = moved[l] ? mat_to_quat(Mat3<S>(
                                  (fk.link_world[l].R * fk0.link_world[l].R.transpose())
                                      .template cast<S>()))
                            : Vec4<S>(S(1), S(0), S(0), S(0));
    }
    const int64_t n = posed.size();
    for (int64_t i = 0; i < n; ++i) {
        const int l = blob.canonical.source_link[i];
        if (!moved[l]) continue;
        const Vec4<S> q_can = blob.canonical.rotation(i);
        const Vec4<S> q = quat_mul(q_rel[l], Vec4<S>(q_can / q_can.norm()));
        for (int k = 0; k < 4; ++k) posed.rotations[4 * i + k] = q[k];
    }
    return posed;
}

template <typename S>
GroundTruth<S> render_ground_truth(const BlobRobot<S>& blob, const Pose& pose,
                                   const Camera& camera, const Vec3<S>& background,
                                   const RasterConfig& config) {
    GroundTruth<S> gt;
    const GaussianSet<S> posed = posed_blob_gaussians(blob, pose);
    gt.cloud = posed.means;
    gt.image = rasterize(camera, posed, background, config);
    return gt;
}

// ---------------------------------------------------------------------------
// Manifest JSON
// ---------------------------------------------------------------------------

namespace {

ordered_json camera_to_json(const Camera& cam) {
    ordered_json j;
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    j["width"] = cam.width;
    j["height"] = cam.height;
    j["axis_angle"] = {cam.axis_angle.x(), cam.axis_angle.y(), cam.axis_angle.z()};
    j["translation"] = {cam.translation.x(), cam.translation.y(), cam.translation.z()};
    return j;
}

Camera camera_from_json(const ordered_json& j) {
    Camera cam;
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    for (int k = 0; k < 3; ++k) {
        cam.axis_angle[k] = j.at("axis_angle").at(k).get<double>();
        cam.translation[k] = j.at("translation").at(k).get<double>();
    }
    return cam;
}

}  // namespace

std::string DatasetManifest::to_json() const {
    ordered_json j;
    j["robot"] = robot_path;
    j["generator"] = {{"blob_points", meta.blob_points},
                      {"blob_seed", meta.blob_seed},
                      {"blob_opacity", meta.blob_opacity},
                      {"blob_scale_factor", meta.blob_scale_factor},
                      {"background", {meta.background[0], meta.background[1], meta.background[2]}}};
    j["cameras"] = ordered_json::array();
    for (const Camera& cam : cameras) j["cameras"].push_back(camera_to_json(cam));
    j["samples"] = ordered_json::array();
    for (const DatasetSample& s : samples) {
        ordered_json js;
        js["pose"] = std::vector<double>(s.pose.data(), s.pose.data() + s.pose.size());
        js["camera"] = s.camera;
        js["image_png"] = s.image_png;
        js["image_raw"] = s.image_raw;
        js["cloud"] = s.cloud;
        js["split"] = s.test ? "test" : "train";
        j["samples"].push_back(js);
    }
    return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorCode::IoFailure, std::string("manifest is not valid JSON: ") + e.what());
    }
    DatasetManifest m;
    m.robot_path = j.at("robot").get<std::string>();
    const auto& gen = j.at("generator");
    m.meta.blob_points = gen.at("blob_points").get<int64_t>();
    m.meta.blob_seed = gen.at("blob_seed").get<uint64_t>();
    m.meta.blob_opacity = gen.at("blob_opacity").get<double>();
    m.meta.blob_scale_factor = gen.at("blob_scale_factor").get<double>();
    for (int k = 0; k < 3; ++k) m.meta.background[k] = gen.at("background").at(k).get<double>();
    for (const auto& jc : j.at("cameras")) m.cameras.push_back(camera_from_json(jc));
    for (const auto& js : j.at("samples")) {
        DatasetSample s;
        const auto& pose = js.at("pose");
        s.pose = Pose(pose.size());
        for (size_t k = 0; k < pose.size(); ++k) s.pose[k] = pose.at(k).get<double>();
        s.camera = js.at("camera").get<int>();
        s.image_png = js.at("image_png").get<std::string>();
        s.image_raw = js.at("image_raw").get<std::string>();
        s.cloud = js.at("cloud").get<std::string>();
        s.test = js.at("split").get<std::string>() == "test";
        m.samples.push_back(std::move(s));
    }
    return m;
}

void DatasetManifest::validate(const std::string& base_dir, const RobotModel& robot) const {
    Pose lo, hi;
    pose_bounds(robot, lo, hi);
    for (const DatasetSample& s : samples) {
        require(s.pose.size() == robot.dof, ErrorCode::PoseLengthMismatch,
                "manifest pose length does not match robot dof");
        for (int d = 0; d < robot.dof; ++d)
            require(s.pose[d] >= lo[d] - 1e-12 && s.pose[d] <= hi[d] + 1e-12,
                    ErrorCode::ConfigError, "manifest pose outside joint limits");
        require(s.camera >= 0 && s.camera < int(cameras.size()), ErrorCode::ConfigError,
                "manifest sample references an unknown camera");
        for (const std::string& rel : {s.image_png, s.image_raw, s.cloud})
            require(fs::exists(fs::path(base_dir) / rel), ErrorCode::IoFailure,
                    "manifest references a missing file: " + rel);
    }
}

Camera camera_from_json_text(const std::string& text) {
    try {
        return camera_from_json(ordered_json::parse(text));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(ErrorCode::ConfigError, std::string("bad camera JSON: ") + e.what());
    }
}

std::string camera_to_json_text(const Camera& camera) { return camera_to_json(camera).dump(); }

void write_cloud(const std::string& path, const std::vector<float>& xyz) {
    require(xyz.size() % 3 == 0, ErrorCode::ShapeMismatch, "cloud size is not a multiple of 3");
    auto out = open_output(path);
    write_magic(out, "DRPC");
    write_u32(out, uint32_t(xyz.size() / 3));
    write_f32_array(out, xyz);
}

std::vector<float> read_cloud(const std::string& path) {
    auto in = open_input(path);
    expect_magic(in, "DRPC", "point cloud '" + path + "'");
    const uint32_t n = read_u32(in);
    std::vector<float> xyz;
    read_f32_array(in, xyz, size_t(3) * n);
    return xyz;
}

DatasetManifest load_manifest(const std::string& dataset_dir) {
    const fs::path path = fs::path(dataset_dir) / "manifest.json";
    auto in = open_input(path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return DatasetManifest::from_json(buf.str());
}

void save_manifest(const DatasetManifest& manifest, const std::string& dataset_dir) {
    const fs::path path = fs::path(dataset_dir) / "manifest.json";
    auto out = open_output(path.string());
    const std::string text = manifest.to_json();
    write_bytes(out, text.data(), text.size());
}

template <typename S>
std::vector<Camera> make_camera_ring(const BlobRobot<S>& blob, int views, int image_size) {
    Vec3d centroid = Vec3d::Zero();
    const int64_t n = blob.canonical.size();
    for (int64_t i = 0; i < n; ++i) centroid += blob.canonical.mean(i).template cast<double>();
    centroid /= double(n);
    double bound = 0.0;
    for (int64_t i = 0; i < n; ++i)
        bound = std::max(bound,
                         (blob.canonical.mean(i).template cast<double>() - centroid).norm());
    const double radius = 2.0 * std::max(0.2, bound);

    // ~50 degree vertical field of view.
    const double f = 0.5 * image_size / std::tan(25.0 * M_PI / 180.0);
    static const double elevations[3] = {-15.0, 12.0, 32.0};
    std::vector<Camera> cameras;
    for (int v = 0; v < views; ++v) {
        const double azimuth = 2.0 * M_PI * double(v) / double(std::max(1, views));
        const double elevation = elevations[v % 3] * M_PI / 180.0;
        const Vec3d eye = centroid + radius * Vec3d(std::cos(azimuth) * std::cos(elevation),
                                                    std::sin(azimuth) * std::cos(elevation),
                                                    std::sin(elevation));
        cameras.push_back(Camera::look_at(eye, centroid, Vec3d(0, 0, 1), f, f, image_size,
                                          image_size));
    }
    return cameras;
}

template <typename S>
DatasetManifest generate_dataset(const BlobRobot<S>& blob, const GenerateConfig& config,
                                 const std::string& out_dir) {
    require(config.poses >= 1 && config.views >= 1, ErrorCode::ConfigError,
            "need at least one pose and one view");
    const RobotModel& robot = *blob.robot;
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "clouds");

    DatasetManifest manifest;
    manifest.robot_path = config.robot_path;
    manifest.meta.blob_points = config.blob.points;
    manifest.meta.blob_seed = config.blob.seed;
    manifest.meta.blob_opacity = config.blob.opacity;
    manifest.meta.blob_scale_factor = config.blob.scale_factor;
    for (int k = 0; k < 3; ++k) manifest.meta.background[k] = config.background[k];
    manifest.cameras = make_camera_ring(blob, config.views, config.image_size);

    // Pose 0 is canonical; the rest are uniform within limits.
    Pose lo, hi;
    pose_bounds(robot, lo, hi);
    Rng rng(config.seed);
    Rng pose_rng = rng.fork(0x905e5);
    std::vector<Pose> poses;
    poses.push_back(Pose::Zero(robot.dof));
    for (int p = 1; p < config.poses; ++p) {
        Pose pose(robot.dof);
        for (int d = 0; d < robot.dof; ++d) pose[d] = pose_rng.uniform(lo[d], hi[d]);
        poses.push_back(pose);
    }

    // Test split: round(0.1 * poses) poses, never the canonical one.
    const int n_test = int(std::lround(0.1 * config.poses));
    std::vector<int> order;
    for (int p = 1; p < config.poses; ++p) order.push_back(p);
    Rng split_rng = rng.fork(0x59717);
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[split_rng.uniform_int(int64_t(i))]);
    std::vector<bool> is_test(config.poses, false);
    for (int k = 0; k < n_test && k < int(order.size()); ++k) is_test[order[k]] = true;

    const Vec3<S> background(S(config.background[0]), S(config.background[1]),
                             S(config.background[2]));

    manifest.samples.resize(size_t(config.poses) * config.views);
    std::vector<std::vector<float>> clouds(config.poses);

    parallel_for(config.poses, [&](int64_t p) {
        char cloud_name[64];
        std::snprintf(cloud_name, sizeof(cloud_name), "clouds/p%04d.drpc", int(p));
        const std::vector<S> cloud = posed_blob_cloud(blob, poses[p]);
        std::vector<float> cloud32(cloud.size());
        for (size_t k = 0; k < cloud.size(); ++k) cloud32[k] = float(cloud[k]);
        clouds[p] = std::move(cloud32);
        const GaussianSet<S> posed = posed_blob_gaussians(blob, poses[p]);
        for (int v = 0; v < config.views; ++v) {
            const Image<S> image =
                rasterize(manifest.cameras[v], posed, background, RasterConfig{});
            char base[64];
            std::snprintf(base, sizeof(base), "images/p%04d_v%02d", int(p), v);
            DatasetSample& sample = manifest.samples[size_t(p) * config.views + v];
            sample.pose = poses[p];
            sample.camera = v;
            sample.image_png = std::string(base) + ".png";
            sample.image_raw = std::string(base) + ".raw";
            sample.cloud = cloud_name;
            sample.test = is_test[p];
            write_png(fs::path(out_dir) / sample.image_png, image);
            write_raw_image(fs::path(out_dir) / sample.image_raw, image);
        }
        write_cloud(fs::path(out_dir) / cloud_name, clouds[p]);
    });

    save_manifest(manifest, out_dir);
    manifest.validate(out_dir, robot);
    return manifest;
}

template struct BlobRobot<float>;
template struct BlobRobot<double>;
template BlobRobot<float> build_blob_robot<float>(std::shared_ptr<const RobotModel>,
                                                  const BlobOptions&);
template BlobRobot<double> build_blob_robot<double>(std::shared_ptr<const RobotModel>,
                                                    const BlobOptions&);
template std::vector<float> posed_blob_cloud<float>(const BlobRobot<float>&, const Pose&);
template std::vector<double> posed_blob_cloud<double>(const BlobRobot<double>&, const Pose&);
template GaussianSet<float> posed_blob_gaussians<float>(const BlobRobot<float>&, const Pose&);
template GaussianSet<double> posed_blob_gaussians<double>(const BlobRobot<double>&, const Pose&);
template GroundTruth<float> render_ground_truth<float>(const BlobRobot<float>&, const Pose&,
                                                       const Camera&, const Vec3<float>&,
                                                       const RasterConfig&);
template GroundTruth<double> render_ground_truth<double>(const BlobRobot<double>&, const Pose&,
                                                         const Camera&, const Vec3<double>&,
                                                         const RasterConfig&);
template std::vector<Camera> make_camera_ring<float>(const BlobRobot<float>&, int, int);
template std::vector<Camera> make_camera_ring<double>(const BlobRobot<double>&, int, int);
template DatasetManifest generate_dataset<float>(const BlobRobot<float>&, const GenerateConfig&,
                                                 const std::string&);
template DatasetManifest generate_dataset<double>(const BlobRobot<double>&, const GenerateConfig&,
                                                  const std::string&);

}  // namespace rsplat
