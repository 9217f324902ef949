#include "scorer.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <vector>

namespace {

// Stand-alone raw image reader ("DRIM", u32 w, u32 h, u32 c, f32 data).
// The scorer deliberately uses no engine code: it is the reference external
// process for the gradient bridge.
bool read_raw(const char* path, int& width, int& height, std::vector<float>& data) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return false;
    char magic[4];
    uint32_t w = 0, h = 0, c = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    in.read(reinterpret_cast<char*>(&c), 4);
    if (!in.good() || std::memcmp(magic, "DRIM", 4) != 0 || c != 3) return false;
    data.resize(size_t(w) * h * 3);
    in.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size() * 4));
    if (in.gcount() != std::streamsize(data.size() * 4)) return false;
    width = int(w);
    height = int(h);
    return true;
}

bool read_exact(std::istream& in, void* buf, size_t len) {
    in.read(static_cast<char*>(buf), std::streamsize(len));
    return size_t(in.gcount()) == len;
}

}  // namespace

int run_mse_scorer(const char* target_raw_path) {
    int tw = 0, th = 0;
    std::vector<float> target;
    if (!read_raw(target_raw_path, tw, th, target)) {
        std::fprintf(stderr, "scorer-mse: cannot read target image '%s'\n", target_raw_path);
        return 3;
    }

    std::istream& in = std::cin;
    std::ostream& out = std::cout;
    for (;;) {
        char magic[4];
        in.read(magic, 4);
        if (in.gcount() == 0) return 0;  // clean shutdown between requests
        if (in.gcount() != 4 || std::memcmp(magic, "DRBR", 4) != 0) {
            std::fprintf(stderr, "scorer-mse: bad request magic\n");
            return 5;
        }
        uint32_t w = 0, h = 0, c = 0;
        if (!read_exact(in, &w, 4) || !read_exact(in, &h, 4) || !read_exact(in, &c, 4) || c != 3) {
            std::fprintf(stderr, "scorer-mse: bad request header\n");
            return 5;
        }
        if (int(w) != tw || int(h) != th) {
            std::fprintf(stderr, "scorer-mse: request %ux%u does not match target %dx%d\n", w, h,
                         tw, th);
            return 5;
        }
        std::vector<float> pixels(size_t(w) * h * 3);
        if (!read_exact(in, pixels.data(), pixels.size() * 4)) {
            std::fprintf(stderr, "scorer-mse: truncated request\n");
            return 5;
        }

        // Mirrors the engine's mean-squared-error loss exactly: double
        // accumulation in index order, cotangent 2*(I - target)/numel.
        const double inv_n = 1.0 / double(pixels.size());
        double loss = 0.0;
        std::vector<float> cotangent(pixels.size());
        for (size_t i = 0; i < pixels.size(); ++i) {
            const double d = double(pixels[i]) - double(target[i]);
            loss += d * d * inv_n;
            cotangent[i] = float(2.0 * d * inv_n);
        }

        out.write("DRBG", 4);
        out.write(reinterpret_cast<const char*>(&loss), 8);
        const uint8_t stop = 0;
        out.write(reinterpret_cast<const char*>(&stop), 1);
        out.write(reinterpret_cast<const char*>(cotangent.data()),
                  std::streamsize(cotangent.size() * 4));
        out.flush();
        if (!out.good()) return 5;
    }
}
