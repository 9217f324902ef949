#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "binio.hpp"

namespace rsplat {

template <typename S>
Image<S> Image<S>::half() const {
    Image<S> out(std::max(1, width / 2), std::max(1, height / 2));
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                S acc = S(0);
                int cnt = 0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int sy = std::min(height - 1, 2 * y + dy);
                        const int sx = std::min(width - 1, 2 * x + dx);
                        acc += px(sy, sx)[c];
                        ++cnt;
                    }
                }
                out.px(y, x)[c] = acc / S(cnt);
            }
        }
    }
    return out;
}

template <typename S>
void write_raw_image(const std::string& path, const Image<S>& image) {
    auto out = open_output(path);
    write_magic(out, "DRIM");
    write_u32(out, uint32_t(image.width));
    write_u32(out, uint32_t(image.height));
    write_u32(out, 3);
    write_f32_array(out, image.data);
}

template <typename S>
Image<S> read_raw_image(const std::string& path) {
    auto in = open_input(path);
    expect_magic(in, "DRIM", "raw image '" + path + "'");
    const uint32_t w = read_u32(in);
    const uint32_t h = read_u32(in);
    const uint32_t c = read_u32(in);
    require(c == 3, ErrorCode::IoFailure, "raw image '" + path + "' is not 3-channel");
    require(w > 0 && h > 0 && w < (1u << 16) && h < (1u << 16), ErrorCode::IoFailure,
            "raw image '" + path + "' has implausible size");
    const int width = int(w), height = int(h);
    Image<S> image(width, height);
    read_f32_array(in, image.data, image.numel());
    return image;
}

// ---------------------------------------------------------------------------
// PNG with stored (uncompressed) deflate blocks.
// ---------------------------------------------------------------------------

namespace {

uint32_t crc32_table_entry(uint32_t n) {
    uint32_t c = n;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
    return c;
}

uint32_t crc32(const std::vector<uint8_t>& data) {
    static uint32_t table[256];
    static bool init = [] {
        for (uint32_t n = 0; n < 256; ++n) table[n] = crc32_table_entry(n);
        return true;
    }();
    (void)init;
    uint32_t c = 0xffffffffu;
    for (uint8_t b : data) c = table[(c ^ b) & 0xffu] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

uint32_t adler32(const std::vector<uint8_t>& data) {
    uint32_t a = 1, b = 0;
    for (uint8_t byte : data) {
        a = (a + byte) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

void write_chunk(std::ostream& out, const char type[5], const std::vector<uint8_t>& payload) {
    std::vector<uint8_t> body(type, type + 4);
    body.insert(body.end(), payload.begin(), payload.end());
    std::vector<uint8_t> header;
    put_u32_be(header, uint32_t(payload.size()));
    write_bytes(out, header.data(), header.size());
    write_bytes(out, body.data(), body.size());
    std::vector<uint8_t> crc;
    put_u32_be(crc, crc32(body));
    write_bytes(out, crc.data(), crc.size());
}

}  // namespace

template <typename S>
void write_png(const std::string& path, const Image<S>& image) {
    auto out = open_output(path);
    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    write_bytes(out, sig, 8);

    std::vector<uint8_t> ihdr;
    put_u32_be(ihdr, uint32_t(image.width));
    put_u32_be(ihdr, uint32_t(image.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    write_chunk(out, "IHDR", ihdr);

    // Scanlines with filter byte 0.
    std::vector<uint8_t> raw;
    raw.reserve(size_t(image.height) * (1 + size_t(image.width) * 3));
    for (int y = 0; y < image.height; ++y) {
        raw.push_back(0);
        for (int x = 0; x < image.width; ++x) {
            const S* p = image.px(y, x);
            for (int c = 0; c < 3; ++c) {
                const double v = std::min(1.0, std::max(0.0, double(p[c])));
                raw.push_back(uint8_t(std::lround(v * 255.0)));
            }
        }
    }

    // zlib stream: header, stored deflate blocks (max 65535 bytes), adler32.
    std::vector<uint8_t> z;
    z.push_back(0x78);
    z.push_back(0x01);
    size_t pos = 0;
    while (pos < raw.size() || raw.empty()) {
        const size_t len = std::min<size_t>(65535, raw.size() - pos);
        const bool final = pos + len >= raw.size();
        z.push_back(final ? 1 : 0);
        z.push_back(uint8_t(len & 0xff));
        z.push_back(uint8_t(len >> 8));
        z.push_back(uint8_t(~len & 0xff));
        z.push_back(uint8_t((~len >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + pos, raw.begin() + pos + len);
        pos += len;
        if (final) break;
    }
    put_u32_be(z, adler32(raw));
    write_chunk(out, "IDAT", z);
    write_chunk(out, "IEND", {});
}

template <typename S>
Image<S> read_png(const std::string& path) {
    auto in = open_input(path);
    uint8_t sig[8];
    read_bytes(in, sig, 8);
    require(sig[1] == 'P' && sig[2] == 'N' && sig[3] == 'G', ErrorCode::IoFailure,
            "'" + path + "' is not a PNG file");

    int width = 0, height = 0;
    std::vector<uint8_t> idat;
    for (;;) {
        uint8_t len_be[4];
        read_bytes(in, len_be, 4);
        const uint32_t len = (uint32_t(len_be[0]) << 24) | (uint32_t(len_be[1]) << 16) |
                             (uint32_t(len_be[2]) << 8) | len_be[3];
        char type[5] = {};
        read_bytes(in, type, 4);
        std::vector<uint8_t> payload(len);
        if (len) read_bytes(in, payload.data(), len);
        uint8_t crc[4];
        read_bytes(in, crc, 4);
        const std::string t(type);
        if (t == "IHDR") {
            require(payload.size() == 13, ErrorCode::IoFailure, "bad IHDR");
            width = int((uint32_t(payload[0]) << 24) | (payload[1] << 16) | (payload[2] << 8) |
                        payload[3]);
            height = int((uint32_t(payload[4]) << 24) | (payload[5] << 16) | (payload[6] << 8) |
                         payload[7]);
            require(payload[8] == 8 && payload[9] == 2 && payload[12] == 0, ErrorCode::IoFailure,
                    "PNG reader supports only 8-bit RGB non-interlaced files");
        } else if (t == "IDAT") {
            idat.insert(idat.end(), payload.begin(), payload.end());
        } else if (t == "IEND") {
            break;
        }
    }
    require(width > 0 && height > 0, ErrorCode::IoFailure, "PNG missing IHDR");
    require(idat.size() >= 2, ErrorCode::IoFailure, "PNG missing image data");

    // Inflate, stored blocks only (the subset this library writes).
    std::vector<uint8_t> raw;
    size_t pos = 2;
    for (;;) {
        require(pos + 5 <= idat.size(), ErrorCode::IoFailure, "truncated deflate stream");
        const uint8_t header = idat[pos];
        require((header & 0x06) == 0, ErrorCode::IoFailure,
                "PNG reader supports only stored deflate blocks");
        const size_t len = size_t(idat[pos + 1]) | (size_t(idat[pos + 2]) << 8);
        pos += 5;
        require(pos + len <= idat.size(), ErrorCode::IoFailure, "truncated deflate block");
        raw.insert(raw.end(), idat.begin() + pos, idat.begin() + pos + len);
        pos += len;
        if (header & 1) break;
    }
    const size_t stride = 1 + size_t(width) * 3;
    require(raw.size() >= stride * size_t(height), ErrorCode::IoFailure, "PNG data too short");

    Image<S> image(width, height);
    for (int y = 0; y < height; ++y) {
        const uint8_t* row = raw.data() + size_t(y) * stride;
        require(row[0] == 0, ErrorCode::IoFailure, "PNG reader supports only filter 0");
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                image.px(y, x)[c] = S(row[1 + 3 * x + c]) / S(255);
    }
    return image;
}

template struct Image<float>;
template struct Image<double>;
template void write_raw_image<float>(const std::string&, const Image<float>&);
template void write_raw_image<double>(const std::string&, const Image<double>&);
template Image<float> read_raw_image<float>(const std::string&);
template Image<double> read_raw_image<double>(const std::string&);
template void write_png<float>(const std::string&, const Image<float>&);
template void write_png<double>(const std::string&, const Image<double>&);
template Image<float> read_png<float>(const std::string&);
template Image<double> read_png<double>(const std::string&);

}  // namespace rsplat
