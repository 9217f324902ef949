#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CommandResult run(const std::string& args) {
    const std::string cmd = std::string(RSPLAT_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    CommandResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) result.output.append(buf.data(), n);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

const std::string kUrdf = std::string(RSPLAT_ASSET_DIR) + "/arm3.urdf";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("help output documents every subcommand") {
    const CommandResult help = run("--help");
    CHECK(help.exit_code == 0);
    for (const char* cmd : {"gen-data", "train", "render", "eval", "reconstruct", "retarget",
                            "optimize-external", "scorer-mse", "info"})
        CHECK(help.output.find(cmd) != std::string::npos);
    CHECK(run("gen-data --help").output.find("--poses") != std::string::npos);
}

TEST_CASE("missing robot description exits with the config code and names the path") {
    const CommandResult result = run("gen-data --urdf /no/such/robot.urdf --out /tmp/x");
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("/no/such/robot.urdf") != std::string::npos);
}

TEST_CASE("gen-data writes a dataset and is byte-deterministic under a seed") {
    const std::string dir_a = "/tmp/rsplat_cli_data_a";
    const std::string dir_b = "/tmp/rsplat_cli_data_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    const std::string flags =
        " --poses 6 --views 2 --image-size 24 --seed 7 --blob-points 120";
    const CommandResult a = run("gen-data --urdf " + kUrdf + " --out " + dir_a + flags);
    CHECK(a.exit_code == 0);
    CHECK(a.output.find("\"samples\": 12") != std::string::npos);
    const CommandResult b = run("gen-data --urdf " + kUrdf + " --out " + dir_b + flags);
    CHECK(b.exit_code == 0);
    CHECK(read_file(dir_a + "/manifest.json") == read_file(dir_b + "/manifest.json"));
    CHECK(!read_file(dir_a + "/manifest.json").empty());
}

TEST_CASE("info prints a robot summary") {
    const CommandResult result = run("info --urdf " + kUrdf);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("\"dof\": 3") != std::string::npos);
}

TEST_CASE("train, render, eval, reconstruct round trip through the CLI") {
    const std::string dir = "/tmp/rsplat_cli_pipeline";
    const std::string ckpt = dir + "/model.drbt";
    if (!fs::exists(dir + "/data/manifest.json")) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        REQUIRE(run("gen-data --urdf " + kUrdf + " --out " + dir +
                    "/data --poses 14 --views 3 --image-size 36 --blob-points 200")
                    .exit_code == 0);
    }
    std::ofstream cfg(dir + "/train.json");
    cfg << R"({"canonical_steps":100,"lbs_steps":120,"joint_max_steps":40,
               "eval_interval":20,"mlp_hidden":24,"mlp_layers":2,"fourier_bands":4,
               "init_points":200,"densify_interval":0,"lbs_pose_count":6})";
    cfg.close();

    const CommandResult train = run("train --data " + dir + "/data --out " + ckpt +
                                    " --config " + dir + "/train.json --metrics " + dir +
                                    "/metrics.json");
    CHECK(train.exit_code == 0);
    CHECK(fs::exists(ckpt));
    CHECK(read_file(dir + "/metrics.json").find("psnr_mean") != std::string::npos);
    CHECK(fs::exists(ckpt + ".log.jsonl"));

    // Config round trip through --print-config.
    const CommandResult printed =
        run("train --data " + dir + "/data --out /tmp/unused.drbt --config " + dir +
            "/train.json --print-config");
    CHECK(printed.exit_code == 0);
    CHECK(printed.output.find("\"canonical_steps\": 100") != std::string::npos);

    const CommandResult rendered =
        run("render --ckpt " + ckpt + " --data " + dir + "/data --pose 0.1,0.2,-0.3 --view 0" +
            " --out-png " + dir + "/r.png --out-raw " + dir + "/r.raw");
    CHECK(rendered.exit_code == 0);
    CHECK(fs::exists(dir + "/r.png"));
    CHECK(fs::exists(dir + "/r.raw"));

    const CommandResult eval =
        run("eval --ckpt " + ckpt + " --data " + dir + "/data --out " + dir + "/eval.json");
    CHECK(eval.exit_code == 0);
    CHECK(read_file(dir + "/eval.json").find("chamfer_mean") != std::string::npos);

    const CommandResult rec = run("reconstruct --ckpt " + ckpt + " --data " + dir +
                                  "/data --target " + dir +
                                  "/r.raw --view 0 --camera known --init-pose 0.1,0.2,-0.3"
                                  " --iters 5 --out " +
                                  dir + "/rec.json");
    CHECK(rec.exit_code == 0);
    const std::string rec_json = read_file(dir + "/rec.json");
    CHECK(rec_json.find("\"converged\": true") != std::string::npos);
    CHECK(rec_json.find("\"pose\"") != std::string::npos);

    // optimize-external with the bundled MSE scorer reproduces the target.
    const CommandResult ext =
        run("optimize-external --ckpt " + ckpt + " --data " + dir + "/data --view 0" +
            " --bridge \"" + std::string(RSPLAT_CLI_PATH) + " scorer-mse --target " + dir +
            "/r.raw\" --init-pose 0.1,0.2,-0.3 --iters 4 --out " + dir + "/ext.json");
    CHECK(ext.exit_code == 0);
    CHECK(read_file(dir + "/ext.json").find("\"converged\": true") != std::string::npos);
}

TEST_CASE("resume reproduces the joint stage bitwise") {
    const std::string dir = "/tmp/rsplat_cli_resume";
    if (!fs::exists(dir + "/data/manifest.json")) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        REQUIRE(run("gen-data --urdf " + kUrdf + " --out " + dir +
                    "/data --poses 10 --views 2 --image-size 28 --blob-points 120")
                    .exit_code == 0);
    }
    auto config = [&](int joint_steps, const std::string& name) {
        std::ofstream cfg(dir + "/" + name);
        cfg << R"({"canonical_steps":30,"lbs_steps":30,"joint_max_steps":)" << joint_steps
            << R"(,"eval_interval":10,"mlp_hidden":16,"mlp_layers":1,"fourier_bands":3,
                 "init_points":100,"densify_interval":0,"lbs_pose_count":4,
                 "appearance_warmup_steps":20})";
        return dir + "/" + name;
    };
    // Run A: all three stages in one process.
    REQUIRE(run("train --data " + dir + "/data --out " + dir + "/a.drbt --config " +
                config(12, "a.json") + " --log " + dir + "/a.log")
                .exit_code == 0);
    // Run B: stop after stage 2, then resume the joint stage.
    REQUIRE(run("train --data " + dir + "/data --out " + dir + "/b0.drbt --config " +
                config(0, "b0.json") + " --log " + dir + "/b0.log")
                .exit_code == 0);
    REQUIRE(run("train --data " + dir + "/data --out " + dir + "/b1.drbt --config " +
                config(12, "a.json") + " --resume " + dir + "/b0.drbt --log " + dir + "/b1.log")
                .exit_code == 0);

    auto joint_lines = [&](const std::string& path) {
        std::ifstream in(path);
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line))
            if (line.find("\"stage\":\"joint\"") != std::string::npos) lines.push_back(line);
        return lines;
    };
    const auto a = joint_lines(dir + "/a.log");
    const auto b = joint_lines(dir + "/b1.log");
    REQUIRE(!a.empty());
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    // Final checkpoints are byte-identical too.
    CHECK(read_file(dir + "/a.drbt") == read_file(dir + "/b1.drbt"));
}
