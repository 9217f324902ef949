#include "robosplat.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "core/fitting.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rsplat;

// The production pipeline runs in single precision.
using Scalar = float;

struct rsp_robot {
    std::shared_ptr<const RobotModel> model;
    std::vector<std::string> warnings;
};

struct rsp_model {
    SplatModel<Scalar> model;
};

namespace {

thread_local std::string g_last_error;

rsp_status status_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoFailure:
            return RSP_ERROR_IO;
        case ErrorCode::EmptyAfterPrune:
        case ErrorCode::NonFiniteGradient:
            return RSP_ERROR_TRAIN;
        case ErrorCode::DivergedNonFinite:
        case ErrorCode::BridgeProtocolError:
        case ErrorCode::BridgeClosed:
            return RSP_ERROR_FITTING;
        case ErrorCode::NoTape:
        case ErrorCode::StaleAux:
            return RSP_ERROR;
        default:
            return RSP_ERROR_CONFIG;
    }
}

template <typename F>
rsp_status guarded(F&& fn) {
    try {
        fn();
        g_last_error.clear();
        return RSP_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RSP_ERROR;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

json parse_config(const char* text, const std::set<std::string>& known, const char* what) {
    if (!text || !*text) return json::object();
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorCode::ConfigError, std::string(what) + " is not valid JSON: " + e.what());
    }
    require(j.is_object(), ErrorCode::ConfigError, std::string(what) + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        require(known.count(key) > 0, ErrorCode::ConfigError,
                "unknown key '" + key + "' in " + what);
    return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

Camera camera_from_config(const json& j) {
    return camera_from_json_text(j.dump());
}

json camera_json(const Camera& cam) { return json::parse(camera_to_json_text(cam)); }

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    maybe(j, "canonical_steps", c.canonical_steps);
    maybe(j, "lbs_steps", c.lbs_steps);
    maybe(j, "joint_max_steps", c.joint_max_steps);
    maybe(j, "plateau_window", c.plateau_window);
    maybe(j, "plateau_delta_db", c.plateau_delta_db);
    maybe(j, "eval_interval", c.eval_interval);
    maybe(j, "batch_size", c.batch_size);
    if (j.contains("image_loss")) {
        const std::string kind = j.at("image_loss").get<std::string>();
        require(kind == "l1" || kind == "mse", ErrorCode::ConfigError,
                "image_loss must be 'l1' or 'mse'");
        c.image_loss =
            kind == "l1" ? TrainConfig::ImageLoss::L1 : TrainConfig::ImageLoss::MSE;
    }
    maybe(j, "lr_means", c.lr_means);
    maybe(j, "lr_rotations", c.lr_rotations);
    maybe(j, "lr_scales", c.lr_scales);
    maybe(j, "lr_opacity", c.lr_opacity);
    maybe(j, "lr_sh", c.lr_sh);
    maybe(j, "lr_mlp", c.lr_mlp);
    maybe(j, "densify_interval", c.densify_interval);
    maybe(j, "densify_grad_threshold", c.densify_grad_threshold);
    maybe(j, "densify_opacity_floor", c.densify_opacity_floor);
    maybe(j, "densify_stop_fraction", c.densify_stop_fraction);
    maybe(j, "init_points", c.init_points);
    maybe(j, "init_seed", c.init_seed);
    maybe(j, "init_opacity", c.init_opacity);
    maybe(j, "mlp_hidden", c.mlp_hidden);
    maybe(j, "mlp_layers", c.mlp_layers);
    maybe(j, "fourier_bands", c.fourier_bands);
    maybe(j, "no_deform", c.no_deform);
    maybe(j, "lbs_pose_count", c.lbs_pose_count);
    maybe(j, "lbs_batch", c.lbs_batch);
    maybe(j, "appearance_warmup_steps", c.appearance_warmup_steps);
    maybe(j, "validation_poses", c.validation_poses);
    maybe(j, "seed", c.seed);
    return c;
}

const std::set<std::string> kTrainKeys = {
    "canonical_steps", "lbs_steps", "joint_max_steps", "plateau_window", "plateau_delta_db",
    "eval_interval", "batch_size", "image_loss", "lr_means", "lr_rotations", "lr_scales",
    "lr_opacity", "lr_sh", "lr_mlp", "densify_interval", "densify_grad_threshold",
    "densify_opacity_floor", "densify_stop_fraction", "init_points", "init_seed", "init_opacity",
    "mlp_hidden", "mlp_layers", "fourier_bands", "no_deform", "lbs_pose_count", "lbs_batch",
    "appearance_warmup_steps", "validation_poses", "seed", "resume"};

Pose pose_from_json(const json& j, int dof) {
    Pose p = Pose::Zero(dof);
    require(int(j.size()) == dof, ErrorCode::PoseLengthMismatch,
            "pose has " + std::to_string(j.size()) + " values, robot dof is " +
                std::to_string(dof));
    for (int d = 0; d < dof; ++d) p[d] = j.at(d).get<double>();
    return p;
}

json pose_to_json(const Pose& p) {
    json out = json::array();
    for (int d = 0; d < p.size(); ++d) out.push_back(p[d]);
    return out;
}

json fit_result_json(const FitResult& result) {
    json j;
    j["pose"] = pose_to_json(result.pose);
    j["cameras"] = json::array();
    for (const Camera& cam : result.cameras) j["cameras"].push_back(camera_json(cam));
    j["final_loss"] = result.final_loss;
    j["trace"] = result.trace;
    j["converged"] = result.converged;
    j["iterations"] = result.iterations;
    return j;
}

}  // namespace

extern "C" {

const char* rsp_version(void) { return "0.1.0"; }

const char* rsp_last_error(void) { return g_last_error.c_str(); }

rsp_status rsp_set_threads(int n) {
    return guarded([&] { set_thread_count(n); });
}

void rsp_string_free(char* s) { std::free(s); }

rsp_status rsp_robot_parse_file(const char* path, rsp_robot** out) {
    return guarded([&] {
        require(path && out, ErrorCode::ConfigError, "null argument");
        auto parsed = parse_urdf_file(path);
        auto* robot = new rsp_robot;
        robot->model = std::make_shared<RobotModel>(std::move(parsed.model));
        robot->warnings = std::move(parsed.warnings);
        *out = robot;
    });
}

rsp_status rsp_robot_parse_text(const char* xml, rsp_robot** out) {
    return guarded([&] {
        require(xml && out, ErrorCode::ConfigError, "null argument");
        auto parsed = parse_urdf(xml);
        auto* robot = new rsp_robot;
        robot->model = std::make_shared<RobotModel>(std::move(parsed.model));
        robot->warnings = std::move(parsed.warnings);
        *out = robot;
    });
}

int rsp_robot_dof(const rsp_robot* robot) { return robot ? robot->model->dof : -1; }

int rsp_robot_num_links(const rsp_robot* robot) { return robot ? robot->model->num_links() : -1; }

rsp_status rsp_robot_info_json(const rsp_robot* robot, char** json_out) {
    return guarded([&] {
        require(robot && json_out, ErrorCode::ConfigError, "null argument");
        const RobotModel& m = *robot->model;
        json j;
        j["name"] = m.name;
        j["dof"] = m.dof;
        j["root_link"] = m.links[m.root_link].name;
        j["links"] = json::array();
        for (const Link& link : m.links) j["links"].push_back(link.name);
        j["joints"] = json::array();
        for (const Joint& joint : m.joints) {
            json jj;
            jj["name"] = joint.name;
            jj["type"] = joint_kind_name(joint.kind);
            jj["parent"] = m.links[joint.parent_link].name;
            jj["child"] = m.links[joint.child_link].name;
            if (joint.has_limits) jj["limits"] = {joint.lower, joint.upper};
            j["joints"].push_back(jj);
        }
        j["warnings"] = robot->warnings;
        *json_out = dup_string(j.dump(2) + "\n");
    });
}

void rsp_robot_free(rsp_robot* robot) { delete robot; }

rsp_status rsp_generate_dataset(const rsp_robot* robot, const char* robot_path,
                                const char* config_json, const char* out_dir,
                                char** summary_json_out) {
    return guarded([&] {
        require(robot && robot_path && out_dir, ErrorCode::ConfigError, "null argument");
        static const std::set<std::string> keys = {"poses",     "views",      "image_size",
                                                   "seed",      "blob_points", "blob_seed",
                                                   "blob_opacity", "background"};
        const json cfg = parse_config(config_json, keys, "dataset config");
        GenerateConfig gen;
        maybe(cfg, "poses", gen.poses);
        maybe(cfg, "views", gen.views);
        maybe(cfg, "image_size", gen.image_size);
        maybe(cfg, "seed", gen.seed);
        maybe(cfg, "blob_points", gen.blob.points);
        maybe(cfg, "blob_seed", gen.blob.seed);
        maybe(cfg, "blob_opacity", gen.blob.opacity);
        if (cfg.contains("background"))
            for (int k = 0; k < 3; ++k) gen.background[k] = cfg.at("background").at(k);

        fs::create_directories(out_dir);
        // Copy the robot description into the dataset so it is self-contained.
        const std::string robot_copy = "robot.urdf";
        fs::copy_file(robot_path, fs::path(out_dir) / robot_copy,
                      fs::copy_options::overwrite_existing);
        gen.robot_path = robot_copy;

        const BlobRobot<Scalar> blob = build_blob_robot<Scalar>(robot->model, gen.blob);
        const DatasetManifest manifest = generate_dataset(blob, gen, out_dir);

        int n_train = 0, n_test = 0;
        for (const DatasetSample& s : manifest.samples) (s.test ? n_test : n_train)++;
        json summary;
        summary["samples"] = manifest.samples.size();
        summary["train_samples"] = n_train;
        summary["test_samples"] = n_test;
        summary["poses"] = gen.poses;
        summary["views"] = gen.views;
        summary["image_size"] = gen.image_size;
        summary["gaussians"] = blob.canonical.size();
        if (summary_json_out) *summary_json_out = dup_string(summary.dump(2) + "\n");
    });
}

rsp_status rsp_train(const char* dataset_dir, const char* config_json,
                     const char* checkpoint_path, const char* log_path,
                     char** metrics_json_out) {
    return guarded([&] {
        require(dataset_dir && checkpoint_path, ErrorCode::ConfigError, "null argument");
        const json cfg = parse_config(config_json, kTrainKeys, "train config");
        const TrainConfig config = train_config_from_json(cfg);
        std::string resume;
        maybe(cfg, "resume", resume);

        TrainDataset<Scalar> data = TrainDataset<Scalar>::open(dataset_dir);
        TrainLogger logger = log_path && *log_path ? TrainLogger(log_path) : TrainLogger();

        const std::string state_path = std::string(checkpoint_path) + ".state";
        SplatModel<Scalar> model;
        std::string done_stage;
        if (!resume.empty()) {
            model = load_checkpoint<Scalar>(resume, data.robot);
            done_stage = ResumeState::load(resume + ".state").stage;
        } else {
            model = make_initial_model<Scalar>(data.robot, config);
        }

        auto save_stage = [&](const std::string& stage) {
            save_checkpoint(checkpoint_path, model);
            ResumeState st;
            st.stage = stage;
            st.save(state_path);
        };

        if (done_stage.empty()) {
            train_canonical(model, data, config, logger);
            save_stage("canonical");
            done_stage = "canonical";
        }
        if (done_stage == "canonical") {
            train_lbs(model, data, config, logger);
            save_stage("lbs");
            done_stage = "lbs";
        }
        train_joint(model, data, config, logger);
        save_stage("joint");

        const MetricsReport report = evaluate_model(model, data, true);
        if (metrics_json_out) {
            json j = json::parse(report.to_json());
            j["n_gaussians"] = model.canonical.size();
            j["ablation"] = config.no_deform ? "no_deform" : "full";
            *metrics_json_out = dup_string(j.dump(2) + "\n");
        }
    });
}

rsp_status rsp_model_load(const rsp_robot* robot, const char* checkpoint_path, rsp_model** out) {
    return guarded([&] {
        require(robot && checkpoint_path && out, ErrorCode::ConfigError, "null argument");
        auto* m = new rsp_model{load_checkpoint<Scalar>(checkpoint_path, robot->model)};
        *out = m;
    });
}

rsp_status rsp_model_save(const rsp_model* model, const char* checkpoint_path) {
    return guarded([&] {
        require(model && checkpoint_path, ErrorCode::ConfigError, "null argument");
        save_checkpoint(checkpoint_path, model->model);
    });
}

int64_t rsp_model_num_gaussians(const rsp_model* model) {
    return model ? model->model.canonical.size() : -1;
}

void rsp_model_free(rsp_model* model) { delete model; }

rsp_status rsp_render(const rsp_model* model, const double* pose, int pose_len,
                      const char* camera_json_text, const char* out_png, const char* out_raw) {
    return guarded([&] {
        require(model && pose && camera_json_text, ErrorCode::ConfigError, "null argument");
        require(pose_len == model->model.robot->dof, ErrorCode::PoseLengthMismatch,
                "pose length does not match robot dof");
        Pose p(pose_len);
        for (int d = 0; d < pose_len; ++d) p[d] = pose[d];
        const Camera camera = camera_from_json_text(camera_json_text);
        const PosedSplats<Scalar> posed = pose_splat(model->model, p, false);
        const Vec3<Scalar> black = Vec3<Scalar>::Zero();
        const Image<Scalar> img = render<Scalar>(camera, posed.view(), black, RasterConfig{});
        if (out_png) write_png(out_png, img);
        if (out_raw) write_raw_image(out_raw, img);
    });
}

rsp_status rsp_evaluate(const rsp_model* model, const char* dataset_dir, const char* split,
                        char** metrics_json_out) {
    return guarded([&] {
        require(model && dataset_dir && metrics_json_out, ErrorCode::ConfigError, "null argument");
        const std::string which = split ? split : "test";
        require(which == "test" || which == "train", ErrorCode::ConfigError,
                "split must be 'test' or 'train'");
        TrainDataset<Scalar> data = TrainDataset<Scalar>::open(dataset_dir);
        const MetricsReport report = evaluate_model(model->model, data, which == "test");
        *metrics_json_out = dup_string(report.to_json());
    });
}

rsp_status rsp_evaluate_baseline(const char* dataset_dir, const char* kind, int pool_size,
                                 uint64_t seed, char** metrics_json_out) {
    return guarded([&] {
        require(dataset_dir && kind && metrics_json_out, ErrorCode::ConfigError, "null argument");
        TrainDataset<Scalar> data = TrainDataset<Scalar>::open(dataset_dir);
        const std::string which = kind;
        MetricsReport report;
        if (which == "nearest")
            report = evaluate_nn_baseline(data, pool_size > 0 ? pool_size : 1000, seed);
        else if (which == "random")
            report = evaluate_random_baseline(data, seed);
        else
            fail(ErrorCode::ConfigError, "baseline kind must be 'nearest' or 'random'");
        *metrics_json_out = dup_string(report.to_json());
    });
}

namespace {

FitProblem<Scalar> problem_from_json(const rsp_model* model, const json& j) {
    FitProblem<Scalar> problem;
    require(j.contains("targets") && j.at("targets").is_array() && !j.at("targets").empty(),
            ErrorCode::ConfigError, "problem needs a non-empty targets array");
    for (const auto& jt : j.at("targets")) {
        FitTarget<Scalar> target;
        target.image = read_raw_image<Scalar>(jt.at("image").get<std::string>());
        target.camera = camera_from_config(jt.at("camera"));
        problem.targets.push_back(std::move(target));
    }
    const int dof = model->model.robot->dof;
    problem.initial_pose =
        j.contains("init_pose") ? pose_from_json(j.at("init_pose"), dof) : Pose::Zero(dof);
    maybe(j, "max_iters", problem.options.max_iters);
    maybe(j, "lr_pose", problem.options.lr_pose);
    maybe(j, "lr_camera", problem.options.lr_camera);
    maybe(j, "tol", problem.options.tol);
    maybe(j, "coarse_fraction", problem.options.coarse_fraction);
    maybe(j, "optimize_camera", problem.options.optimize_camera);
    if (j.contains("loss")) {
        const std::string kind = j.at("loss").get<std::string>();
        require(kind == "l1" || kind == "mse", ErrorCode::ConfigError,
                "loss must be 'l1' or 'mse'");
        problem.options.loss =
            kind == "l1" ? TrainConfig::ImageLoss::L1 : TrainConfig::ImageLoss::MSE;
    }
    return problem;
}

const std::set<std::string> kProblemKeys = {"targets",    "init_pose", "max_iters",
                                            "lr_pose",    "lr_camera", "tol",
                                            "coarse_fraction", "optimize_camera", "loss"};

}  // namespace

rsp_status rsp_reconstruct(const rsp_model* model, const char* problem_json,
                           char** result_json_out) {
    return guarded([&] {
        require(model && problem_json && result_json_out, ErrorCode::ConfigError, "null argument");
        const json j = parse_config(problem_json, kProblemKeys, "reconstruction problem");
        const FitProblem<Scalar> problem = problem_from_json(model, j);
        const FitResult result = reconstruct_pose(model->model, problem);
        *result_json_out = dup_string(fit_result_json(result).dump(2) + "\n");
    });
}

rsp_status rsp_reconstruct_sequence(const rsp_model* model, const char* frames_json,
                                    char** result_json_out) {
    return guarded([&] {
        require(model && frames_json && result_json_out, ErrorCode::ConfigError, "null argument");
        static const std::set<std::string> keys = {"frames",  "camera",  "init_pose", "max_iters",
                                                   "lr_pose", "tol",     "coarse_fraction",
                                                   "optimize_camera", "loss"};
        const json j = parse_config(frames_json, keys, "sequence problem");
        require(j.contains("frames") && j.at("frames").is_array() && !j.at("frames").empty(),
                ErrorCode::EmptyInput, "sequence needs a non-empty frames array");
        std::vector<Image<Scalar>> frames;
        for (const auto& path : j.at("frames"))
            frames.push_back(read_raw_image<Scalar>(path.get<std::string>()));

        FitProblem<Scalar> tmpl;
        FitTarget<Scalar> target;
        target.camera = camera_from_config(j.at("camera"));
        target.image = frames.front();
        tmpl.targets.push_back(std::move(target));
        const int dof = model->model.robot->dof;
        tmpl.initial_pose =
            j.contains("init_pose") ? pose_from_json(j.at("init_pose"), dof) : Pose::Zero(dof);
        maybe(j, "max_iters", tmpl.options.max_iters);
        maybe(j, "lr_pose", tmpl.options.lr_pose);
        maybe(j, "tol", tmpl.options.tol);
        maybe(j, "coarse_fraction", tmpl.options.coarse_fraction);
        maybe(j, "optimize_camera", tmpl.options.optimize_camera);

        const std::vector<FitResult> results =
            reconstruct_sequence(model->model, frames, tmpl);
        json out = json::array();
        for (const FitResult& r : results) out.push_back(fit_result_json(r));
        *result_json_out = dup_string(out.dump(2) + "\n");
    });
}

rsp_status rsp_retarget(const rsp_model* model, const char* tracks_json, const char* config_json,
                        char** result_json_out) {
    return guarded([&] {
        require(model && tracks_json && config_json && result_json_out, ErrorCode::ConfigError,
                "null argument");
        const TrackSet tracks = TrackSet::from_json(tracks_json);
        static const std::set<std::string> keys = {"camera", "init_pose", "init_poses",
                                                   "max_iters", "lr_pose", "smoothness", "tol"};
        const json j = parse_config(config_json, keys, "retarget config");
        const Camera camera = camera_from_config(j.at("camera"));
        const int dof = model->model.robot->dof;

        std::vector<Pose> init;
        if (j.contains("init_poses")) {
            for (const auto& jp : j.at("init_poses")) init.push_back(pose_from_json(jp, dof));
        } else {
            const Pose p = j.contains("init_pose") ? pose_from_json(j.at("init_pose"), dof)
                                                   : Pose::Zero(dof);
            init.assign(tracks.frames, p);
        }
        RetargetOptions options;
        maybe(j, "max_iters", options.max_iters);
        maybe(j, "lr_pose", options.lr_pose);
        maybe(j, "smoothness", options.smoothness);
        maybe(j, "tol", options.tol);

        const RetargetResult result = retarget(model->model, tracks, camera, init, options);
        json out;
        out["poses"] = json::array();
        for (const Pose& p : result.poses) out["poses"].push_back(pose_to_json(p));
        out["final_loss"] = result.final_loss;
        out["trace"] = result.trace;
        out["converged"] = result.converged;
        *result_json_out = dup_string(out.dump(2) + "\n");
    });
}

rsp_status rsp_optimize_external(const rsp_model* model, const char* bridge_spec,
                                 const char* config_json, char** result_json_out) {
    return guarded([&] {
        require(model && bridge_spec && config_json && result_json_out, ErrorCode::ConfigError,
                "null argument");
        static const std::set<std::string> keys = {"camera", "init_pose", "max_iters", "lr_pose",
                                                   "tol"};
        const json j = parse_config(config_json, keys, "external objective config");
        const Camera camera = camera_from_config(j.at("camera"));
        const int dof = model->model.robot->dof;
        const Pose init =
            j.contains("init_pose") ? pose_from_json(j.at("init_pose"), dof) : Pose::Zero(dof);
        ExternalObjectiveOptions options;
        maybe(j, "max_iters", options.max_iters);
        maybe(j, "lr_pose", options.lr_pose);
        maybe(j, "tol", options.tol);

        auto bridge = open_bridge(bridge_spec);
        const FitResult result =
            optimize_external(model->model, camera, init, *bridge, options);
        *result_json_out = dup_string(fit_result_json(result).dump(2) + "\n");
    });
}

}  // extern "C"
