#pragma once

#include <string>
#include <vector>

#include "common.hpp"

namespace rsplat {

// Row-major RGB image with values in [0,1].
template <typename S>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<S> data;  // height * width * 3

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(size_t(w) * h * 3, S(0)) {}

    S* px(int y, int x) { return data.data() + (size_t(y) * width + x) * 3; }
    const S* px(int y, int x) const { return data.data() + (size_t(y) * width + x) * 3; }

    size_t numel() const { return data.size(); }

    template <typename T>
    Image<T> cast() const {
        Image<T> out(width, height);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
        return out;
    }

    // Box-filtered 2x downsample (coarse-to-fine fitting schedules).
    Image<S> half() const;
};

// Raw float32 interchange format: 16-byte header {magic "DRIM", u32 width,
// u32 height, u32 channels} then row-major float32 data. Bit-exact.
template <typename S>
void write_raw_image(const std::string& path, const Image<S>& image);
template <typename S>
Image<S> read_raw_image(const std::string& path);

// 8-bit RGB PNG for inspection. The writer emits uncompressed deflate
// (stored blocks); the reader accepts exactly that subset.
template <typename S>
void write_png(const std::string& path, const Image<S>& image);
template <typename S>
Image<S> read_png(const std::string& path);

}  // namespace rsplat
