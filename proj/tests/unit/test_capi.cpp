#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "robosplat.h"

namespace fs = std::filesystem;

namespace {

const std::string kUrdf = std::string(RSPLAT_ASSET_DIR) + "/arm3.urdf";

struct Robot {
    rsp_robot* ptr = nullptr;
    ~Robot() { rsp_robot_free(ptr); }
};

struct Owned {
    char* ptr = nullptr;
    ~Owned() { rsp_string_free(ptr); }
    std::string str() const { return ptr ? ptr : ""; }
};

// Dataset + checkpoint shared across the C API tests (built once).
struct Fixture {
    std::string dataset = "/tmp/rsplat_capi_dataset";
    std::string ckpt = "/tmp/rsplat_capi_ckpt.drbt";
    Robot robot;

    Fixture() {
        REQUIRE(rsp_robot_parse_file(kUrdf.c_str(), &robot.ptr) == RSP_OK);
        if (!fs::exists(dataset + "/manifest.json")) {
            fs::remove_all(dataset);
            Owned summary;
            REQUIRE(rsp_generate_dataset(
                        robot.ptr, kUrdf.c_str(),
                        R"({"poses":16,"views":3,"image_size":40,"blob_points":220})",
                        dataset.c_str(), &summary.ptr) == RSP_OK);
            CHECK(summary.str().find("\"samples\": 48") != std::string::npos);
        }
        if (!fs::exists(ckpt)) {
            Owned metrics;
            const char* cfg = R"({
                "canonical_steps": 120, "lbs_steps": 150, "joint_max_steps": 60,
                "eval_interval": 30, "mlp_hidden": 32, "mlp_layers": 2,
                "fourier_bands": 4, "init_points": 240, "densify_interval": 0,
                "lbs_pose_count": 8})";
            REQUIRE(rsp_train(dataset.c_str(), cfg, ckpt.c_str(), nullptr, &metrics.ptr) ==
                    RSP_OK);
            CHECK(metrics.str().find("psnr_mean") != std::string::npos);
        }
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("robot parsing and info through the C API") {
    Robot robot;
    REQUIRE(rsp_robot_parse_file(kUrdf.c_str(), &robot.ptr) == RSP_OK);
    CHECK(rsp_robot_dof(robot.ptr) == 3);
    CHECK(rsp_robot_num_links(robot.ptr) == 4);
    Owned info;
    REQUIRE(rsp_robot_info_json(robot.ptr, &info.ptr) == RSP_OK);
    CHECK(info.str().find("shoulder_yaw") != std::string::npos);

    rsp_robot* bad = nullptr;
    CHECK(rsp_robot_parse_text("<robot name='x'><link/>", &bad) == RSP_ERROR_CONFIG);
    CHECK(std::string(rsp_last_error()).find("MalformedXml") != std::string::npos);
    CHECK(rsp_robot_parse_file("/nonexistent/robot.urdf", &bad) == RSP_ERROR_IO);
}

TEST_CASE("dataset generation, training and evaluation through the C API") {
    Fixture& f = fixture();
    rsp_model* model = nullptr;
    REQUIRE(rsp_model_load(f.robot.ptr, f.ckpt.c_str(), &model) == RSP_OK);
    CHECK(rsp_model_num_gaussians(model) > 0);

    Owned metrics;
    REQUIRE(rsp_evaluate(model, f.dataset.c_str(), "test", &metrics.ptr) == RSP_OK);
    CHECK(metrics.str().find("psnr_mean") != std::string::npos);
    CHECK(metrics.str().find("chamfer_mean") != std::string::npos);

    Owned nn;
    REQUIRE(rsp_evaluate_baseline(f.dataset.c_str(), "nearest", 1000, 5, &nn.ptr) == RSP_OK);
    CHECK(nn.str().find("psnr_mean") != std::string::npos);

    // Unknown config keys are rejected.
    Owned out;
    CHECK(rsp_train(f.dataset.c_str(), R"({"not_a_key": 1})", "/tmp/x.drbt", nullptr, &out.ptr) ==
          RSP_ERROR_CONFIG);
    CHECK(std::string(rsp_last_error()).find("not_a_key") != std::string::npos);

    rsp_model_free(model);
}

TEST_CASE("render and reconstruct through the C API") {
    Fixture& f = fixture();
    rsp_model* model = nullptr;
    REQUIRE(rsp_model_load(f.robot.ptr, f.ckpt.c_str(), &model) == RSP_OK);

    // Camera 0 from the manifest (duplicated here as plain JSON).
    std::ifstream manifest(f.dataset + "/manifest.json");
    std::string text((std::istreambuf_iterator<char>(manifest)),
                     std::istreambuf_iterator<char>());
    const auto cams = text.find("\"cameras\"");
    REQUIRE(cams != std::string::npos);
    const auto open = text.find('{', cams);
    int depth = 0;
    size_t end = open;
    for (size_t i = open; i < text.size(); ++i) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}' && --depth == 0) {
            end = i;
            break;
        }
    }
    const std::string camera = text.substr(open, end - open + 1);

    const double pose[3] = {0.2, -0.3, 0.4};
    REQUIRE(rsp_render(model, pose, 3, camera.c_str(), "/tmp/rsplat_capi.png",
                       "/tmp/rsplat_capi.raw") == RSP_OK);
    CHECK(fs::exists("/tmp/rsplat_capi.png"));
    CHECK(fs::exists("/tmp/rsplat_capi.raw"));

    // Self-reconstruction from the rendered image, initialized at the truth.
    const std::string problem = std::string(R"({"targets":[{"image":"/tmp/rsplat_capi.raw",)") +
                                R"("camera":)" + camera + R"(}],"init_pose":[0.2,-0.3,0.4],)" +
                                R"("max_iters":10})";
    Owned result;
    REQUIRE(rsp_reconstruct(model, problem.c_str(), &result.ptr) == RSP_OK);
    CHECK(result.str().find("\"converged\": true") != std::string::npos);

    // Wrong pose length is a config error.
    CHECK(rsp_render(model, pose, 2, camera.c_str(), nullptr, "/tmp/x.raw") == RSP_ERROR_CONFIG);

    rsp_model_free(model);
}
