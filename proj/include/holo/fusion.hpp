#pragma once

#include "holo/calibration.hpp"
#include "holo/camera_model.hpp"
#include "holo/foreground.hpp"
#include "holo/geometry.hpp"

#include <cstdint>
#include <map>

namespace holo {

struct UnknownCamera : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Lifts masked, valid-depth pixels to 3D in the depth camera's frame:
/// z = depth, x and y from the (undistorted) pixel ray. Zero depth means
/// "no reading" and is skipped. `pixels`, when given, receives the source
/// pixel of every emitted point.
PointCloud backproject(const Frame& depth_m, const SegMask& mask, const CameraParams& cam,
                       std::vector<Vec2>* pixels = nullptr);

struct ColorizeResult {
    PointCloud cloud;
    /// 1 where the point projected inside the color image, 0 where the
    /// fallback color was used.
    std::vector<std::uint8_t> in_image;
};

/// Samples the nearest color pixel for every point (cloud and camera pose
/// must share the same reference frame). Points that land outside the image
/// or behind the camera keep `fallback`.
ColorizeResult colorize(const PointCloud& cloud, const Frame& color_frame,
                        const CameraParams& color_cam, Rgb fallback = {128, 128, 128});

struct FusedModel {
    PointCloud cloud;  // reference frame
    int source_count = 0;
    std::uint64_t timestamp_us = 0;
};

/// Transforms every per-camera cloud into the reference frame with the rig
/// extrinsics and concatenates them in camera-id order.
FusedModel fuse(const std::map<int, PointCloud>& clouds, const RigCalibration& rig);

/// Rounds coordinates to float32, the precision clouds have after a PLY or
/// wire hop. Applying it up front keeps offline and streamed paths
/// bit-identical.
void quantize_to_f32(PointCloud& cloud);

struct SegmentOptions {
    double threshold = 25.0;
    int iterations = 1;
    int opening_radius = 1;
};

/// Node-side per-frame pipeline: segment the color frame against its
/// background model, keep depth points whose color projection lands on
/// foreground, and color them. Output is in the depth camera's frame,
/// quantized to wire precision.
PointCloud build_foreground_cloud(const Frame& depth_m, const Frame& color,
                                  const Frame& color_background,
                                  const CameraParams& depth_cam,
                                  const CameraParams& color_cam,
                                  const SegmentOptions& opts = {});

}  // namespace holo
