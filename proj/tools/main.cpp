// robosplat command line: dataset generation, training, rendering,
// evaluation, pose reconstruction, track retargeting and bridge-driven
// optimization. Talks to the engine exclusively through the C API.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "robosplat.h"
#include "scorer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

int fail_with(rsp_status status, const char* what) {
    std::fprintf(stderr, "error: %s: %s\n", what, rsp_last_error());
    return int(status);
}

struct RobotHandle {
    rsp_robot* robot = nullptr;
    ~RobotHandle() { rsp_robot_free(robot); }
};

struct ModelHandle {
    rsp_model* model = nullptr;
    ~ModelHandle() { rsp_model_free(model); }
};

struct OwnedString {
    char* ptr = nullptr;
    ~OwnedString() { rsp_string_free(ptr); }
    std::string str() const { return ptr ? ptr : ""; }
};

std::vector<double> parse_pose_csv(const std::string& text) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) values.push_back(std::stod(item));
    }
    return values;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw std::runtime_error("cannot open '" + path + "'");
    json j;
    in >> j;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
}

// Dataset context: manifest cameras + the bundled robot description.
struct DatasetContext {
    json manifest;
    std::string dir;

    static DatasetContext open(const std::string& dir) {
        DatasetContext ctx;
        ctx.dir = dir;
        ctx.manifest = load_json_file((fs::path(dir) / "manifest.json").string());
        return ctx;
    }

    std::string robot_path() const {
        std::string rel = manifest.at("robot").get<std::string>();
        if (fs::path(rel).is_absolute()) return rel;
        return (fs::path(dir) / rel).string();
    }

    std::string camera_json(int view) const {
        const auto& cams = manifest.at("cameras");
        if (view < 0 || view >= int(cams.size()))
            throw std::runtime_error("view index out of range (dataset has " +
                                     std::to_string(cams.size()) + " cameras)");
        return cams.at(view).dump();
    }
};

int require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) {
        std::fprintf(stderr, "error: %s '%s' does not exist\n", what, path.c_str());
        return 2;
    }
    return 0;
}

// Resolves the robot + camera context shared by model-loading commands.
struct ModelContext {
    RobotHandle robot;
    ModelHandle model;
    std::string camera_json;

    int load(const std::string& ckpt, const std::string& data_dir, const std::string& urdf,
             const std::string& camera_file, int view) {
        if (int rc = require_file(ckpt, "checkpoint")) return rc;
        std::string robot_path = urdf;
        if (!data_dir.empty()) {
            const DatasetContext ctx = DatasetContext::open(data_dir);
            if (robot_path.empty()) robot_path = ctx.robot_path();
            if (camera_file.empty()) camera_json = ctx.camera_json(view);
        }
        if (!camera_file.empty()) camera_json = load_json_file(camera_file).dump();
        if (robot_path.empty()) {
            std::fprintf(stderr, "error: need --data or --urdf to locate the robot\n");
            return 2;
        }
        if (int rc = require_file(robot_path, "robot description")) return rc;
        if (rsp_status s = rsp_robot_parse_file(robot_path.c_str(), &robot.robot))
            return fail_with(s, "parse robot");
        if (rsp_status s = rsp_model_load(robot.robot, ckpt.c_str(), &model.model))
            return fail_with(s, "load checkpoint");
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robosplat: differentiable robot splatting"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads,
                   "worker threads (0 = machine parallelism; results identical at any value)");

    // ---------------------------------------------------------------- info
    auto* info = app.add_subcommand("info", "print a robot description summary as JSON");
    std::string info_urdf;
    info->add_option("--urdf", info_urdf, "robot description file")->required();

    // ------------------------------------------------------------- gen-data
    auto* gen = app.add_subcommand("gen-data", "render a synthetic training dataset");
    std::string gen_urdf, gen_out;
    int gen_poses = 200, gen_views = 12, gen_image = 128;
    uint64_t gen_seed = 7, gen_blob_seed = 11;
    int64_t gen_blob_points = 1500;
    double gen_blob_opacity = 0.9;
    gen->add_option("--urdf", gen_urdf, "robot description file")->required();
    gen->add_option("--out", gen_out, "output dataset directory")->required();
    gen->add_option("--poses", gen_poses, "number of poses (pose 0 is canonical)");
    gen->add_option("--views", gen_views, "cameras on the view ring");
    gen->add_option("--image-size", gen_image, "square image resolution");
    gen->add_option("--seed", gen_seed, "pose sampling seed");
    gen->add_option("--blob-points", gen_blob_points, "ground-truth Gaussian count");
    gen->add_option("--blob-seed", gen_blob_seed, "ground-truth sampling seed");
    gen->add_option("--blob-opacity", gen_blob_opacity, "ground-truth Gaussian opacity");

    // ---------------------------------------------------------------- train
    auto* train = app.add_subcommand("train", "run the three-stage training schedule");
    std::string train_data, train_out, train_config, train_log, train_metrics, train_resume;
    bool train_no_deform = false;
    bool train_print_config = false;
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--out", train_out, "checkpoint output path")->required();
    train->add_option("--config", train_config, "training config JSON file");
    train->add_option("--log", train_log, "JSONL training log path");
    train->add_option("--metrics", train_metrics, "metrics JSON output path");
    train->add_option("--resume", train_resume, "checkpoint to resume from");
    train->add_flag("--no-deform", train_no_deform, "disable the appearance deformation network");
    train->add_flag("--print-config", train_print_config,
                    "print the merged training config and exit");

    // --------------------------------------------------------------- render
    auto* rend = app.add_subcommand("render", "render the model at a pose");
    std::string r_ckpt, r_data, r_urdf, r_camera_file, r_pose, r_out_png, r_out_raw;
    int r_view = 0;
    rend->add_option("--ckpt", r_ckpt, "checkpoint path")->required();
    rend->add_option("--data", r_data, "dataset directory (robot + cameras)");
    rend->add_option("--urdf", r_urdf, "robot description (when no --data)");
    rend->add_option("--camera-file", r_camera_file, "camera JSON file (when no --data)");
    rend->add_option("--view", r_view, "camera index from the dataset");
    rend->add_option("--pose", r_pose, "comma-separated joint values")->required();
    rend->add_option("--out-png", r_out_png, "PNG output path");
    rend->add_option("--out-raw", r_out_raw, "raw float image output path");

    // ----------------------------------------------------------------- eval
    auto* eval = app.add_subcommand("eval", "evaluate PSNR/Chamfer on a dataset split");
    std::string e_ckpt, e_data, e_out, e_split = "test";
    bool e_baselines = false;
    uint64_t e_seed = 99;
    int e_pool = 1000;
    eval->add_option("--ckpt", e_ckpt, "checkpoint path")->required();
    eval->add_option("--data", e_data, "dataset directory")->required();
    eval->add_option("--out", e_out, "metrics JSON output path")->required();
    eval->add_option("--split", e_split, "'test' or 'train'");
    eval->add_flag("--baselines", e_baselines, "also report retrieval baselines");
    eval->add_option("--baseline-pool", e_pool, "retrieval pool size");
    eval->add_option("--baseline-seed", e_seed, "retrieval seed");

    // ----------------------------------------------------------- reconstruct
    auto* rec = app.add_subcommand("reconstruct", "estimate the pose behind target images");
    std::string c_ckpt, c_data, c_urdf, c_camera_file, c_init, c_out, c_camera_mode = "known";
    std::vector<std::string> c_targets;
    std::vector<int> c_views;
    int c_iters = 250;
    double c_lr = 0.05, c_coarse = 0.3;
    bool c_sequence = false;
    rec->add_option("--ckpt", c_ckpt, "checkpoint path")->required();
    rec->add_option("--data", c_data, "dataset directory (robot + cameras)");
    rec->add_option("--urdf", c_urdf, "robot description (when no --data)");
    rec->add_option("--target", c_targets, "raw float target image (repeatable)")->required();
    rec->add_option("--camera", c_camera_mode, "'known' or 'free'");
    rec->add_option("--camera-file", c_camera_file, "camera JSON file");
    rec->add_option("--view", c_views, "camera index per target (with --data)");
    rec->add_option("--init-pose", c_init, "comma-separated initial pose");
    rec->add_option("--iters", c_iters, "maximum iterations");
    rec->add_option("--lr", c_lr, "pose learning rate");
    rec->add_option("--coarse-fraction", c_coarse, "fraction of iterations at half resolution");
    rec->add_flag("--sequence", c_sequence, "treat targets as a video (warm starts)");
    rec->add_option("--out", c_out, "result JSON output path")->required();

    // -------------------------------------------------------------- retarget
    auto* ret = app.add_subcommand("retarget", "fit a pose sequence to 2D point tracks");
    std::string t_ckpt, t_data, t_urdf, t_camera_file, t_tracks, t_init, t_out;
    int t_view = 0, t_iters = 300;
    double t_lr = 0.05, t_lambda = 0.0;
    ret->add_option("--ckpt", t_ckpt, "checkpoint path")->required();
    ret->add_option("--data", t_data, "dataset directory (robot + cameras)");
    ret->add_option("--urdf", t_urdf, "robot description (when no --data)");
    ret->add_option("--camera-file", t_camera_file, "camera JSON file");
    ret->add_option("--view", t_view, "camera index (with --data)");
    ret->add_option("--tracks", t_tracks, "track set JSON file")->required();
    ret->add_option("--init-pose", t_init, "comma-separated initial pose");
    ret->add_option("--iters", t_iters, "maximum iterations");
    ret->add_option("--lr", t_lr, "pose learning rate");
    ret->add_option("--lambda", t_lambda, "smoothness weight");
    ret->add_option("--out", t_out, "result JSON output path")->required();

    // ------------------------------------------------------- optimize-external
    auto* ext = app.add_subcommand("optimize-external",
                                   "optimize the pose against an external scorer");
    std::string x_ckpt, x_data, x_urdf, x_camera_file, x_bridge, x_init, x_out;
    int x_view = 0, x_iters = 100;
    double x_lr = 0.05;
    ext->add_option("--ckpt", x_ckpt, "checkpoint path")->required();
    ext->add_option("--data", x_data, "dataset directory (robot + cameras)");
    ext->add_option("--urdf", x_urdf, "robot description (when no --data)");
    ext->add_option("--camera-file", x_camera_file, "camera JSON file");
    ext->add_option("--view", x_view, "camera index (with --data)");
    ext->add_option("--bridge", x_bridge, "scorer command or host:port")->required();
    ext->add_option("--init-pose", x_init, "comma-separated initial pose");
    ext->add_option("--iters", x_iters, "maximum iterations");
    ext->add_option("--lr", x_lr, "pose learning rate");
    ext->add_option("--out", x_out, "result JSON output path")->required();

    // ------------------------------------------------------------ scorer-mse
    auto* scorer = app.add_subcommand(
        "scorer-mse", "reference bridge scorer: MSE against a target raw image");
    std::string s_target;
    scorer->add_option("--target", s_target, "target raw float image")->required();

    CLI11_PARSE(app, argc, argv);
    rsp_set_threads(threads);

    try {
        if (*info) {
            if (int rc = require_file(info_urdf, "robot description")) return rc;
            RobotHandle robot;
            if (rsp_status s = rsp_robot_parse_file(info_urdf.c_str(), &robot.robot))
                return fail_with(s, "parse robot");
            OwnedString out;
            if (rsp_status s = rsp_robot_info_json(robot.robot, &out.ptr))
                return fail_with(s, "robot info");
            std::fputs(out.str().c_str(), stdout);
            return 0;
        }

        if (*gen) {
            if (int rc = require_file(gen_urdf, "robot description")) return rc;
            RobotHandle robot;
            if (rsp_status s = rsp_robot_parse_file(gen_urdf.c_str(), &robot.robot))
                return fail_with(s, "parse robot");
            json cfg;
            cfg["poses"] = gen_poses;
            cfg["views"] = gen_views;
            cfg["image_size"] = gen_image;
            cfg["seed"] = gen_seed;
            cfg["blob_points"] = gen_blob_points;
            cfg["blob_seed"] = gen_blob_seed;
            cfg["blob_opacity"] = gen_blob_opacity;
            OwnedString summary;
            if (rsp_status s = rsp_generate_dataset(robot.robot, gen_urdf.c_str(),
                                                    cfg.dump().c_str(), gen_out.c_str(),
                                                    &summary.ptr))
                return fail_with(s, "generate dataset");
            std::fputs(summary.str().c_str(), stdout);
            return 0;
        }

        if (*train) {
            if (int rc = require_file((fs::path(train_data) / "manifest.json").string(),
                                      "dataset manifest"))
                return rc;
            json cfg = json::object();
            if (!train_config.empty()) cfg = load_json_file(train_config);
            if (train_no_deform) cfg["no_deform"] = true;
            if (!train_resume.empty()) cfg["resume"] = train_resume;
            if (train_print_config) {
                std::fputs((cfg.dump(2) + "\n").c_str(), stdout);
                return 0;
            }
            const std::string log_path =
                train_log.empty() ? train_out + ".log.jsonl" : train_log;
            OwnedString metrics;
            if (rsp_status s = rsp_train(train_data.c_str(), cfg.dump().c_str(),
                                         train_out.c_str(), log_path.c_str(), &metrics.ptr))
                return fail_with(s, "train");
            if (!train_metrics.empty()) write_text(train_metrics, metrics.str());
            std::fputs(metrics.str().c_str(), stdout);
            return 0;
        }

        if (*rend) {
            ModelContext ctx;
            if (int rc = ctx.load(r_ckpt, r_data, r_urdf, r_camera_file, r_view)) return rc;
            const std::vector<double> pose = parse_pose_csv(r_pose);
            if (r_out_png.empty() && r_out_raw.empty()) {
                std::fprintf(stderr, "error: need --out-png and/or --out-raw\n");
                return 2;
            }
            if (rsp_status s = rsp_render(ctx.model.model, pose.data(), int(pose.size()),
                                          ctx.camera_json.c_str(),
                                          r_out_png.empty() ? nullptr : r_out_png.c_str(),
                                          r_out_raw.empty() ? nullptr : r_out_raw.c_str()))
                return fail_with(s, "render");
            return 0;
        }

        if (*eval) {
            ModelContext ctx;
            if (int rc = ctx.load(e_ckpt, e_data, "", "", 0)) return rc;
            OwnedString model_metrics;
            if (rsp_status s = rsp_evaluate(ctx.model.model, e_data.c_str(), e_split.c_str(),
                                            &model_metrics.ptr))
                return fail_with(s, "evaluate");
            json out = json::parse(model_metrics.str());
            if (e_baselines) {
                OwnedString nn, rnd;
                if (rsp_status s = rsp_evaluate_baseline(e_data.c_str(), "nearest", e_pool, e_seed,
                                                         &nn.ptr))
                    return fail_with(s, "nearest-neighbor baseline");
                if (rsp_status s = rsp_evaluate_baseline(e_data.c_str(), "random", e_pool, e_seed,
                                                         &rnd.ptr))
                    return fail_with(s, "random baseline");
                json wrapped;
                wrapped["model"] = out;
                wrapped["nearest_neighbor"] = json::parse(nn.str());
                wrapped["random"] = json::parse(rnd.str());
                out = wrapped;
            }
            write_text(e_out, out.dump(2) + "\n");
            return 0;
        }

        if (*rec) {
            ModelContext ctx;
            if (int rc = ctx.load(c_ckpt, c_data, c_urdf, c_camera_file,
                                  c_views.empty() ? 0 : c_views[0]))
                return rc;
            if (c_camera_mode != "known" && c_camera_mode != "free") {
                std::fprintf(stderr, "error: --camera must be 'known' or 'free'\n");
                return 2;
            }
            for (const std::string& t : c_targets)
                if (int rc = require_file(t, "target image")) return rc;

            json problem;
            if (c_sequence) {
                problem["frames"] = c_targets;
                problem["camera"] = json::parse(ctx.camera_json);
            } else {
                problem["targets"] = json::array();
                for (size_t i = 0; i < c_targets.size(); ++i) {
                    json target;
                    target["image"] = c_targets[i];
                    const int view = i < c_views.size() ? c_views[i]
                                     : (c_views.empty() ? -1 : c_views[0]);
                    target["camera"] =
                        (view >= 0 && !c_data.empty())
                            ? json::parse(DatasetContext::open(c_data).camera_json(view))
                            : json::parse(ctx.camera_json);
                    problem["targets"].push_back(target);
                }
            }
            if (!c_init.empty()) problem["init_pose"] = parse_pose_csv(c_init);
            problem["max_iters"] = c_iters;
            problem["lr_pose"] = c_lr;
            problem["coarse_fraction"] = c_coarse;
            problem["optimize_camera"] = (c_camera_mode == "free");

            OwnedString result;
            rsp_status s = c_sequence
                               ? rsp_reconstruct_sequence(ctx.model.model,
                                                          problem.dump().c_str(), &result.ptr)
                               : rsp_reconstruct(ctx.model.model, problem.dump().c_str(),
                                                 &result.ptr);
            if (s) return fail_with(s, "reconstruct");
            write_text(c_out, result.str());
            return 0;
        }

        if (*ret) {
            ModelContext ctx;
            if (int rc = ctx.load(t_ckpt, t_data, t_urdf, t_camera_file, t_view)) return rc;
            if (int rc = require_file(t_tracks, "track set")) return rc;
            std::ifstream in(t_tracks);
            std::stringstream tracks;
            tracks << in.rdbuf();
            json cfg;
            cfg["camera"] = json::parse(ctx.camera_json);
            if (!t_init.empty()) cfg["init_pose"] = parse_pose_csv(t_init);
            cfg["max_iters"] = t_iters;
            cfg["lr_pose"] = t_lr;
            cfg["smoothness"] = t_lambda;
            OwnedString result;
            if (rsp_status s = rsp_retarget(ctx.model.model, tracks.str().c_str(),
                                            cfg.dump().c_str(), &result.ptr))
                return fail_with(s, "retarget");
            write_text(t_out, result.str());
            return 0;
        }

        if (*ext) {
            ModelContext ctx;
            if (int rc = ctx.load(x_ckpt, x_data, x_urdf, x_camera_file, x_view)) return rc;
            json cfg;
            cfg["camera"] = json::parse(ctx.camera_json);
            if (!x_init.empty()) cfg["init_pose"] = parse_pose_csv(x_init);
            cfg["max_iters"] = x_iters;
            cfg["lr_pose"] = x_lr;
            OwnedString result;
            if (rsp_status s = rsp_optimize_external(ctx.model.model, x_bridge.c_str(),
                                                     cfg.dump().c_str(), &result.ptr))
                return fail_with(s, "optimize-external");
            write_text(x_out, result.str());
            return 0;
        }

        if (*scorer) return run_mse_scorer(s_target.c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
