#pragma once

#include "holo/foreground.hpp"

#include <string>

namespace holo {

struct IoFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Loads a binary PGM (P5, 8 or 16 bit) or PPM (P6) image. 16-bit samples
/// come back as raw values (0..65535); 8-bit as 0..255.
Frame load_image(const std::string& path);

/// 8-bit binary PGM from a 1-channel frame holding 0..255 values.
void save_pgm(const std::string& path, const Frame& frame);

/// 8-bit binary PPM from a 3-channel frame holding 0..255 values.
void save_ppm(const std::string& path, const Frame& frame);

/// 16-bit binary PGM (big-endian samples, per Netpbm) from raw 0..65535 values.
void save_pgm16(const std::string& path, const Frame& frame);

/// Depth images travel as 16-bit PGM in millimeters; in memory they are
/// 1-channel frames in meters.
Frame load_depth_pgm(const std::string& path);
void save_depth_pgm(const std::string& path, const Frame& depth_m);

/// Mask images: 0 background, 255 foreground (any value >= 128 counts as
/// foreground on load).
SegMask load_mask(const std::string& path);
void save_mask(const std::string& path, const SegMask& mask);

}  // namespace holo
