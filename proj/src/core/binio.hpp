#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "common.hpp"

namespace rsplat {

// Little-endian binary stream helpers. The build targets little-endian
// hosts; a static_assert in binio.cpp guards the assumption.

inline void write_bytes(std::ostream& out, const void* data, size_t len) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    require(out.good(), ErrorCode::IoFailure, "write failed");
}

inline void read_bytes(std::istream& in, void* data, size_t len) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    require(in.gcount() == static_cast<std::streamsize>(len), ErrorCode::IoFailure,
            "unexpected end of stream");
}

inline void write_u32(std::ostream& out, uint32_t v) { write_bytes(out, &v, 4); }
inline void write_u8(std::ostream& out, uint8_t v) { write_bytes(out, &v, 1); }
inline void write_f32(std::ostream& out, float v) { write_bytes(out, &v, 4); }
inline void write_f64(std::ostream& out, double v) { write_bytes(out, &v, 8); }

inline uint32_t read_u32(std::istream& in) {
    uint32_t v;
    read_bytes(in, &v, 4);
    return v;
}

inline uint8_t read_u8(std::istream& in) {
    uint8_t v;
    read_bytes(in, &v, 1);
    return v;
}

inline float read_f32(std::istream& in) {
    float v;
    read_bytes(in, &v, 4);
    return v;
}

inline double read_f64(std::istream& in) {
    double v;
    read_bytes(in, &v, 8);
    return v;
}

inline void write_magic(std::ostream& out, const char magic[5]) { write_bytes(out, magic, 4); }

inline void expect_magic(std::istream& in, const char magic[5], const std::string& what) {
    char buf[4];
    read_bytes(in, buf, 4);
    require(std::memcmp(buf, magic, 4) == 0, ErrorCode::IoFailure,
            "bad magic for " + what + " (expected '" + magic + "')");
}

// Writes scalar arrays as float32 regardless of the in-memory scalar type.
template <typename S>
void write_f32_array(std::ostream& out, const std::vector<S>& values) {
    for (S v : values) write_f32(out, static_cast<float>(v));
}

template <typename S>
void read_f32_array(std::istream& in, std::vector<S>& values, size_t count) {
    values.resize(count);
    for (size_t i = 0; i < count; ++i) values[i] = static_cast<S>(read_f32(in));
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoFailure, "cannot open '" + path + "' for writing");
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoFailure, "cannot open '" + path + "' for reading");
    return in;
}

}  // namespace rsplat
