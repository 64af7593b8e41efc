#include "holo/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

namespace holo {

namespace {

int next_token(std::istream& in) {
    // Netpbm headers: whitespace-separated integers, '#' starts a comment.
    while (in) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    in >> value;
    return value;
}

std::uint8_t to_byte(float v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

Frame load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open image: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6")
        throw IoFailure("unsupported image format (want P5/P6): " + path);
    const int width = next_token(in);
    const int height = next_token(in);
    const int maxval = next_token(in);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        throw IoFailure("malformed netpbm header: " + path);
    in.get();  // single whitespace after maxval

    const int channels = magic == "P6" ? 3 : 1;
    Frame frame(width, height, channels);
    const std::size_t count = frame.data.size();
    if (maxval < 256) {
        std::vector<std::uint8_t> raw(count);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
        if (!in) throw IoFailure("truncated image data: " + path);
        for (std::size_t i = 0; i < count; ++i) frame.data[i] = raw[i];
    } else {
        std::vector<std::uint8_t> raw(count * 2);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!in) throw IoFailure("truncated image data: " + path);
        for (std::size_t i = 0; i < count; ++i)
            frame.data[i] = float(raw[2 * i] << 8 | raw[2 * i + 1]);  // big-endian
    }
    return frame;
}

namespace {

void save_netpbm8(const std::string& path, const Frame& frame, int channels,
                  const char* magic) {
    if (frame.channels != channels)
        throw IoFailure(std::string("image save: expected ") + std::to_string(channels) +
                        " channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open for writing: " + path);
    out << magic << "\n" << frame.width << " " << frame.height << "\n255\n";
    std::vector<std::uint8_t> raw(frame.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(frame.data[i]);
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoFailure("write failed: " + path);
}

}  // namespace

void save_pgm(const std::string& path, const Frame& frame) {
    save_netpbm8(path, frame, 1, "P5");
}

void save_ppm(const std::string& path, const Frame& frame) {
    save_netpbm8(path, frame, 3, "P6");
}

void save_pgm16(const std::string& path, const Frame& frame) {
    if (frame.channels != 1) throw IoFailure("pgm16 save: expected 1 channel");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open for writing: " + path);
    out << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
    std::vector<std::uint8_t> raw(frame.data.size() * 2);
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
        const long v = std::clamp(std::lround(frame.data[i]), 0L, 65535L);
        raw[2 * i] = static_cast<std::uint8_t>(v >> 8);
        raw[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoFailure("write failed: " + path);
}

Frame load_depth_pgm(const std::string& path) {
    Frame mm = load_image(path);
    if (mm.channels != 1) throw IoFailure("depth image must be single channel: " + path);
    for (float& v : mm.data) v *= 0.001f;  // millimeters to meters
    return mm;
}

void save_depth_pgm(const std::string& path, const Frame& depth_m) {
    Frame mm = depth_m;
    for (float& v : mm.data) v *= 1000.0f;
    save_pgm16(path, mm);
}

SegMask load_mask(const std::string& path) {
    const Frame img = load_image(path);
    SegMask mask(img.width, img.height);
    const std::size_t npix = mask.labels.size();
    for (std::size_t p = 0; p < npix; ++p) {
        float v = img.data[p * img.channels];
        for (int c = 1; c < img.channels; ++c)
            v = std::max(v, img.data[p * img.channels + c]);
        mask.labels[p] = v >= 128.0f ? 1 : 0;
    }
    return mask;
}

void save_mask(const std::string& path, const SegMask& mask) {
    Frame img(mask.width, mask.height, 1);
    for (std::size_t i = 0; i < mask.labels.size(); ++i)
        img.data[i] = mask.labels[i] ? 255.0f : 0.0f;
    save_pgm(path, img);
}

}  // namespace holo
